#include "mofs/trace.hpp"

#include <fstream>

#include "mofs/error.hpp"

namespace mofs {

using nlohmann::json;

json config_to_json(const SearchSpace& space, const Configuration& c) {
    json j;
    json hp = json::object();
    for (std::size_t i = 0; i < space.size() && i < c.hyperparams.size(); ++i) {
        const auto& d = space[i];
        if (d.kind == ParamKind::categorical) hp[d.name] = d.levels.at(static_cast<std::size_t>(c.hyperparams[i]));
        else if (d.kind == ParamKind::integer) hp[d.name] = static_cast<long long>(c.hyperparams[i]);
        else hp[d.name] = c.hyperparams[i];
    }
    j["hyperparams"] = hp;
    if (c.mask) j["mask"] = c.mask->to_string();
    if (c.ffrac) j["ffrac"] = *c.ffrac;
    if (c.weights) j["weights"] = *c.weights;
    if (c.filter_index) j["filter_index"] = *c.filter_index;
    if (c.strategy) {
        j["strategy"] = {{"sigma", c.strategy->sigma}, {"p_cat", c.strategy->p_cat}, {"p_mask", c.strategy->p_mask}};
    }
    return j;
}

Configuration config_from_json(const SearchSpace& space, const json& j) {
    Configuration c;
    try {
        const auto& hp = j.at("hyperparams");
        c.hyperparams.resize(space.size());
        for (std::size_t i = 0; i < space.size(); ++i) {
            const auto& d = space[i];
            const auto& v = hp.at(d.name);
            if (d.kind == ParamKind::categorical) {
                auto level = v.get<std::string>();
                auto it = std::find(d.levels.begin(), d.levels.end(), level);
                if (it == d.levels.end()) fail(ErrorKind::parse, "unknown level '" + level + "' for " + d.name);
                c.hyperparams[i] = static_cast<double>(it - d.levels.begin());
            } else {
                c.hyperparams[i] = v.get<double>();
            }
        }
        if (j.contains("mask")) c.mask = FeatureMask::from_string(j["mask"].get<std::string>());
        if (j.contains("ffrac")) c.ffrac = j["ffrac"].get<double>();
        if (j.contains("weights")) c.weights = j["weights"].get<std::vector<double>>();
        if (j.contains("filter_index")) c.filter_index = j["filter_index"].get<std::size_t>();
        if (j.contains("strategy")) {
            StrategyParams s;
            s.sigma = j["strategy"].at("sigma").get<std::vector<double>>();
            s.p_cat = j["strategy"].at("p_cat").get<double>();
            s.p_mask = j["strategy"].at("p_mask").get<double>();
            c.strategy = s;
        }
    } catch (const json::exception& e) {
        fail(ErrorKind::parse, std::string("malformed configuration: ") + e.what());
    }
    return c;
}

json record_to_json(const SearchSpace& space, const TraceRecord& r, bool with_wall_time) {
    json j;
    j["eval_index"] = r.eval_index;
    j["generation"] = r.generation;
    j["config"] = config_to_json(space, r.config);
    j["selected"] = r.mask.to_string();
    j["perf"] = r.objectives.perf;
    j["cost"] = r.objectives.cost;
    if (with_wall_time) j["wall_time"] = r.wall_time;
    if (r.failed) j["failed"] = true;
    return j;
}

TraceRecord record_from_json(const SearchSpace& space, const json& j) {
    TraceRecord r;
    try {
        r.eval_index = j.at("eval_index").get<std::size_t>();
        r.generation = j.at("generation").get<std::size_t>();
        r.config = config_from_json(space, j.at("config"));
        r.mask = FeatureMask::from_string(j.at("selected").get<std::string>());
        r.objectives.perf = j.at("perf").get<double>();
        r.objectives.cost = j.at("cost").get<double>();
        r.wall_time = j.value("wall_time", 0.0);
        r.failed = j.value("failed", false);
    } catch (const json::exception& e) {
        fail(ErrorKind::parse, std::string("malformed trace record: ") + e.what());
    }
    return r;
}

void write_trace_jsonl(const std::filesystem::path& path, const SearchSpace& space, const Trace& trace) {
    std::ofstream out(path);
    if (!out) fail(ErrorKind::io, "cannot write " + path.string());
    for (const auto& r : trace.records) out << record_to_json(space, r).dump() << '\n';
    if (!out) fail(ErrorKind::io, "failed writing " + path.string());
}

std::vector<TraceRecord> read_trace_jsonl(const std::filesystem::path& path, const SearchSpace& space) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::io, "cannot read " + path.string());
    std::vector<TraceRecord> out;
    std::string line;
    std::size_t no = 0;
    while (std::getline(in, line)) {
        ++no;
        if (line.empty()) continue;
        try {
            out.push_back(record_from_json(space, json::parse(line)));
        } catch (const json::exception& e) {
            fail(ErrorKind::parse, path.string() + ":" + std::to_string(no) + ": " + e.what());
        } catch (const Error& e) {
            fail(ErrorKind::parse, path.string() + ":" + std::to_string(no) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace mofs
