#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "mofs/learners.hpp"
#include "mofs/searchspace.hpp"

namespace mofs {

// One evaluated configuration. Shared by the evolutionary and model-based
// optimizers; `generation` is the GA generation or the BO proposal round
// (0 for the initial population / design).
struct TraceRecord {
    std::size_t eval_index = 0;
    std::size_t generation = 0;
    Configuration config;
    FeatureMask mask;
    ObjectiveVector objectives;
    double wall_time = 0.0;
    bool failed = false;
};

struct Trace {
    std::vector<TraceRecord> records;
    std::size_t generations = 0;

    std::size_t size() const noexcept { return records.size(); }
};

nlohmann::json config_to_json(const SearchSpace& space, const Configuration& c);
Configuration config_from_json(const SearchSpace& space, const nlohmann::json& j);

nlohmann::json record_to_json(const SearchSpace& space, const TraceRecord& r, bool with_wall_time = true);
TraceRecord record_from_json(const SearchSpace& space, const nlohmann::json& j);

void write_trace_jsonl(const std::filesystem::path& path, const SearchSpace& space, const Trace& trace);
// Records only; the space is needed to decode hyperparameters by name.
std::vector<TraceRecord> read_trace_jsonl(const std::filesystem::path& path, const SearchSpace& space);

}  // namespace mofs
