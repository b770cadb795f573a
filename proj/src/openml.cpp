#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fcntl.h>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <sys/file.h>
#include <unistd.h>

#include <openssl/evp.h>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"
#include "json.hpp"

#include "mofs/data.hpp"
#include "mofs/error.hpp"
#include "mofs/log.hpp"

namespace mofs {

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

// Reads one token from `s` at `pos`: a quoted string or a run of non-space chars.
std::string next_token(const std::string& s, std::size_t& pos) {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    if (pos >= s.size()) return {};
    char q = s[pos];
    if (q == '\'' || q == '"') {
        std::size_t end = s.find(q, pos + 1);
        if (end == std::string::npos) fail(ErrorKind::parse, "unterminated quote in ARFF header");
        auto tok = s.substr(pos + 1, end - pos - 1);
        pos = end + 1;
        return tok;
    }
    std::size_t start = pos;
    while (pos < s.size() && !std::isspace(static_cast<unsigned char>(s[pos])) && s[pos] != '{') ++pos;
    return s.substr(start, pos - start);
}

std::vector<std::string> split_values(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    char quote = 0;
    for (char ch : s) {
        if (quote) {
            if (ch == quote) quote = 0;
            else cur.push_back(ch);
        } else if (ch == '\'' || ch == '"') {
            quote = ch;
        } else if (ch == ',') {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    out.push_back(trim(cur));
    return out;
}

struct ArffAttribute {
    std::string name;
    bool nominal = false;
    std::vector<std::string> levels;
};

}  // namespace

Dataset parse_arff(const std::string& text, const std::string& source, const std::string& target_attribute) {
    std::istringstream in(text);
    std::string line;
    std::vector<ArffAttribute> attrs;
    bool in_data = false;
    std::size_t line_no = 0;
    std::vector<std::vector<std::string>> rows;

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        auto t = trim(line);
        if (t.empty() || t[0] == '%') continue;
        if (!in_data) {
            if (t[0] != '@') fail(ErrorKind::parse, source + ":" + std::to_string(line_no) + ": unexpected header line");
            std::size_t pos = 0;
            auto kw = lower(next_token(t, pos));
            if (kw == "@relation") continue;
            if (kw == "@data") {
                in_data = true;
                continue;
            }
            if (kw != "@attribute") {
                fail(ErrorKind::parse, source + ":" + std::to_string(line_no) + ": unknown keyword " + kw);
            }
            ArffAttribute a;
            a.name = next_token(t, pos);
            while (pos < t.size() && std::isspace(static_cast<unsigned char>(t[pos]))) ++pos;
            if (pos < t.size() && t[pos] == '{') {
                auto close = t.rfind('}');
                if (close == std::string::npos || close < pos) {
                    fail(ErrorKind::parse, source + ":" + std::to_string(line_no) + ": unterminated nominal list");
                }
                a.nominal = true;
                a.levels = split_values(t.substr(pos + 1, close - pos - 1));
            } else {
                auto type = lower(next_token(t, pos));
                if (type == "string" || type == "date" || type == "relational") {
                    fail(ErrorKind::parse, source + ": attribute '" + a.name + "' has unsupported type " + type);
                }
                if (type != "numeric" && type != "real" && type != "integer") {
                    fail(ErrorKind::parse, source + ": attribute '" + a.name + "' has unknown type " + type);
                }
            }
            attrs.push_back(std::move(a));
            continue;
        }
        if (t[0] == '{') fail(ErrorKind::parse, source + ": sparse ARFF data is not supported");
        auto vals = split_values(t);
        if (vals.size() != attrs.size()) {
            fail(ErrorKind::parse, source + ":" + std::to_string(line_no) + ": expected " +
                                       std::to_string(attrs.size()) + " values, got " + std::to_string(vals.size()));
        }
        rows.push_back(std::move(vals));
    }
    if (!in_data) fail(ErrorKind::parse, source + ": missing @data section");
    if (rows.empty()) fail(ErrorKind::parse, source + ": no rows");

    std::size_t target = attrs.size();
    if (!target_attribute.empty()) {
        for (std::size_t i = 0; i < attrs.size(); ++i)
            if (attrs[i].name == target_attribute) target = i;
        if (target == attrs.size()) fail(ErrorKind::parse, source + ": target attribute '" + target_attribute + "' not found");
    } else {
        for (std::size_t i = 0; i < attrs.size(); ++i)
            if (attrs[i].nominal && lower(attrs[i].name) == "class") target = i;
        if (target == attrs.size()) {
            for (std::size_t i = attrs.size(); i-- > 0;) {
                if (attrs[i].nominal) {
                    target = i;
                    break;
                }
            }
        }
        if (target == attrs.size()) fail(ErrorKind::parse, source + ": no nominal class attribute");
    }
    if (!attrs[target].nominal) fail(ErrorKind::parse, source + ": target attribute must be nominal");
    if (attrs[target].levels.size() != 2) {
        fail(ErrorKind::parse, source + ": class attribute must have exactly 2 levels, found " +
                                   std::to_string(attrs[target].levels.size()));
    }
    for (std::size_t i = 0; i < attrs.size(); ++i) {
        if (i != target && attrs[i].nominal) {
            fail(ErrorKind::parse, source + ": nominal feature '" + attrs[i].name + "' is not supported");
        }
    }

    const std::size_t p = attrs.size() - 1;
    if (p == 0) fail(ErrorKind::parse, source + ": no feature attributes");
    std::vector<std::string> names;
    for (std::size_t i = 0; i < attrs.size(); ++i)
        if (i != target) names.push_back(attrs[i].name);

    std::vector<std::string> labels = attrs[target].levels;
    std::sort(labels.begin(), labels.end());

    std::vector<double> x;
    x.reserve(rows.size() * p);
    std::vector<std::uint8_t> y;
    y.reserve(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < attrs.size(); ++c) {
            const auto& v = rows[r][c];
            if (v == "?" || v.empty()) {
                fail(ErrorKind::parse, source + ": missing value at row " + std::to_string(r + 1) + ", attribute '" +
                                           attrs[c].name + "'");
            }
            if (c == target) {
                if (v == labels[0]) y.push_back(0);
                else if (v == labels[1]) y.push_back(1);
                else fail(ErrorKind::parse, source + ": undeclared class value '" + v + "'");
                continue;
            }
            double d = 0.0;
            const char* b = v.data();
            if (*b == '+') ++b;
            auto [ptr, ec] = std::from_chars(b, v.data() + v.size(), d);
            if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(d)) {
                fail(ErrorKind::parse, source + ": non-numeric value '" + v + "' at row " + std::to_string(r + 1));
            }
            x.push_back(d);
        }
    }
    return Dataset(rows.size(), p, std::move(x), std::move(y), std::move(names), {}, std::move(labels));
}

Dataset load_arff(const std::filesystem::path& path, const std::string& target_attribute) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::io, "cannot open ARFF file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_arff(ss.str(), path.string(), target_attribute);
}

// ---------------------------------------------------------------------------
// OpenML client

namespace {

struct UrlParts {
    std::string origin;  // scheme://host[:port]
    std::string path;
};

UrlParts split_url(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) fail(ErrorKind::invalid_argument, "malformed URL " + url);
    auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

std::string md5_hex(const std::string& data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_md5(), nullptr);
    EVP_DigestUpdate(ctx, data.data(), data.size());
    EVP_DigestFinal_ex(ctx, digest, &len);
    EVP_MD_CTX_free(ctx);
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
    return os.str();
}

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) fail(ErrorKind::io, "cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file_atomic(const std::filesystem::path& p, const std::string& body) {
    auto tmp = p;
    tmp += ".part";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail(ErrorKind::io, "cannot write " + tmp.string());
        out << body;
        if (!out) fail(ErrorKind::io, "failed writing " + tmp.string());
    }
    std::filesystem::rename(tmp, p);
}

// Exclusive advisory lock on cache_dir/{did}.lock for the lifetime of the object.
class CacheLock {
public:
    explicit CacheLock(const std::filesystem::path& path) {
        fd_ = ::open(path.c_str(), O_CREAT | O_RDWR, 0644);
        if (fd_ < 0) fail(ErrorKind::io, "cannot open lock file " + path.string());
        if (::flock(fd_, LOCK_EX) != 0) {
            ::close(fd_);
            fail(ErrorKind::io, "cannot lock " + path.string());
        }
    }
    ~CacheLock() {
        ::flock(fd_, LOCK_UN);
        ::close(fd_);
    }
    CacheLock(const CacheLock&) = delete;
    CacheLock& operator=(const CacheLock&) = delete;

private:
    int fd_ = -1;
};

HttpResponse get_or_throw(const HttpTransport& transport, const std::string& url) {
    auto resp = transport(url);
    if (resp.status != 200) {
        fail(ErrorKind::network, "GET " + url + " failed with status " + std::to_string(resp.status) +
                                     (resp.error.empty() ? "" : " (" + resp.error + ")"));
    }
    return resp;
}

}  // namespace

HttpTransport default_transport() {
    return [](const std::string& url) -> HttpResponse {
        auto parts = split_url(url);
        httplib::Client cli(parts.origin);
        cli.set_follow_location(true);
        cli.set_connection_timeout(30);
        cli.set_read_timeout(300);
        auto res = cli.Get(parts.path);
        if (!res) return {0, {}, httplib::to_string(res.error())};
        return {res->status, res->body, {}};
    };
}

Dataset fetch_openml(int did, const std::filesystem::path& cache_dir, const OpenMlOptions& opts) {
    require(did > 0, "OpenML dataset id must be positive");
    std::filesystem::create_directories(cache_dir);
    const auto json_path = cache_dir / (std::to_string(did) + ".json");
    const auto arff_path = cache_dir / (std::to_string(did) + ".arff");
    CacheLock lock(cache_dir / (std::to_string(did) + ".lock"));

    HttpTransport transport = opts.transport ? opts.transport : default_transport();

    std::string desc_text;
    if (std::filesystem::exists(json_path)) {
        desc_text = read_file(json_path);
    } else {
        auto url = opts.api_base + "/api/v1/json/data/" + std::to_string(did);
        desc_text = get_or_throw(transport, url).body;
        write_file_atomic(json_path, desc_text);
    }

    nlohmann::json desc;
    try {
        desc = nlohmann::json::parse(desc_text).at("data_set_description");
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::parse, "malformed OpenML description for did " + std::to_string(did) + ": " + e.what());
    }
    auto field = [&](const char* key) -> std::string {
        if (!desc.contains(key)) return {};
        const auto& v = desc[key];
        return v.is_string() ? v.get<std::string>() : v.dump();
    };

    std::string arff;
    if (std::filesystem::exists(arff_path)) {
        arff = read_file(arff_path);
        log_info("using cached " + arff_path.string());
    } else {
        auto file_id = field("file_id");
        if (file_id.empty()) fail(ErrorKind::parse, "OpenML description for did " + std::to_string(did) + " lacks file_id");
        auto url = opts.api_base + "/data/download/" + file_id;
        arff = get_or_throw(transport, url).body;
        write_file_atomic(arff_path, arff);
    }

    const auto checksum = md5_hex(arff);
    const auto expected = field("md5_checksum");
    log_info("did " + std::to_string(did) + " arff md5 " + checksum);
    if (!expected.empty() && expected != checksum) {
        log_warn("did " + std::to_string(did) + ": md5 " + checksum + " differs from OpenML's " + expected);
    }
    return parse_arff(arff, arff_path.string(), field("default_target_attribute"));
}

}  // namespace mofs
