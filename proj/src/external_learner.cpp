// External learner protocol: the harness writes train.csv, test.csv and
// params.json into a fresh temp directory, runs `<command> <dir>` and reads one
// predicted label per test row from the command's stdout.

#include <array>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

#include "json.hpp"

#include "mofs/error.hpp"
#include "mofs/learners.hpp"

namespace mofs {

namespace {

std::string shell_quote(const std::string& s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'') out += "'\\''";
        else out.push_back(c);
    }
    out += "'";
    return out;
}

class TempDir {
public:
    TempDir() {
        static std::atomic<unsigned> counter{0};
        auto base = std::filesystem::temp_directory_path();
        for (int attempt = 0; attempt < 100; ++attempt) {
            auto candidate = base / ("mofs-ext-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
            if (std::filesystem::create_directory(candidate)) {
                path_ = candidate;
                return;
            }
        }
        fail(ErrorKind::io, "cannot create a temp directory for the external learner");
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const noexcept { return path_; }

private:
    std::filesystem::path path_;
};

void write_rows(const std::filesystem::path& file, const Dataset& d, const std::vector<std::size_t>& cols,
                std::span<const std::size_t> rows, bool with_label) {
    std::ofstream out(file);
    if (!out) fail(ErrorKind::io, "cannot write " + file.string());
    out.precision(17);
    for (std::size_t c = 0; c < cols.size(); ++c) out << (c ? "," : "") << d.feature_names()[cols[c]];
    if (with_label) out << (cols.empty() ? "" : ",") << "class";
    out << '\n';
    for (auto r : rows) {
        for (std::size_t c = 0; c < cols.size(); ++c) out << (c ? "," : "") << d.at(r, cols[c]);
        if (with_label) out << (cols.empty() ? "" : ",") << int(d.label(r));
        out << '\n';
    }
}

class ExternalLearner final : public Learner {
public:
    ExternalLearner(std::string command, SearchSpace space) : command_(std::move(command)), space_(std::move(space)) {}

    std::string name() const override { return "external"; }

    std::vector<std::uint8_t> train_predict(const Dataset& d, const FeatureMask& mask, std::span<const std::size_t> train,
                                            std::span<const std::size_t> test, const HyperValues& hp) const override {
        if (mask.weight() == 0) return std::vector<std::uint8_t>(test.size(), majority_class(d, train));
        TempDir dir;
        const auto cols = mask.selected();
        write_rows(dir.path() / "train.csv", d, cols, train, true);
        write_rows(dir.path() / "test.csv", d, cols, test, false);
        nlohmann::json params = nlohmann::json::object();
        for (std::size_t i = 0; i < space_.size() && i < hp.size(); ++i) {
            const auto& def = space_[i];
            if (def.kind == ParamKind::categorical) params[def.name] = def.levels.at(static_cast<std::size_t>(hp[i]));
            else if (def.kind == ParamKind::integer) params[def.name] = static_cast<long long>(hp[i]);
            else params[def.name] = hp[i];
        }
        {
            std::ofstream pj(dir.path() / "params.json");
            pj << params.dump(2) << '\n';
        }

        const std::string cmd = command_ + " " + shell_quote(dir.path().string());
        FILE* pipe = ::popen(cmd.c_str(), "r");
        if (!pipe) fail(ErrorKind::runtime, "cannot start external learner: " + command_);
        std::string output;
        std::array<char, 4096> buf{};
        std::size_t got = 0;
        while ((got = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) output.append(buf.data(), got);
        const int status = ::pclose(pipe);
        if (status == -1) fail(ErrorKind::runtime, "external learner could not be waited for");
        if (!WIFEXITED(status))
            fail(ErrorKind::runtime, "external learner was killed by signal " + std::to_string(WTERMSIG(status)));
        if (WEXITSTATUS(status) != 0) {
            fail(ErrorKind::runtime, "external learner exited with status " + std::to_string(WEXITSTATUS(status)));
        }

        std::vector<std::uint8_t> pred;
        pred.reserve(test.size());
        std::istringstream lines(output);
        std::string line;
        while (std::getline(lines, line)) {
            while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
            if (line.empty()) continue;
            if (line == "0" || line == d.class_labels()[0]) pred.push_back(0);
            else if (line == "1" || line == d.class_labels()[1]) pred.push_back(1);
            else fail(ErrorKind::parse, "external learner printed unknown label '" + line + "'");
        }
        if (pred.size() != test.size()) {
            fail(ErrorKind::parse, "external learner returned " + std::to_string(pred.size()) + " labels for " +
                                       std::to_string(test.size()) + " test rows");
        }
        return pred;
    }

private:
    std::string command_;
    SearchSpace space_;
};

}  // namespace

std::shared_ptr<const Learner> make_external_learner(const std::string& command, const SearchSpace& space) {
    return std::make_shared<ExternalLearner>(command, space);
}

}  // namespace mofs
