#include "mofs/mofs.h"

#include <cstring>
#include <string>

#include "json.hpp"

#include "mofs/data.hpp"
#include "mofs/error.hpp"
#include "mofs/evo.hpp"
#include "mofs/experiment.hpp"
#include "mofs/log.hpp"
#include "mofs/metrics.hpp"
#include "mofs/trace.hpp"

struct mofs_dataset {
    mofs::Dataset data;
};

struct mofs_experiment {
    mofs::ExperimentConfig config;
};

namespace {

thread_local std::string last_error;

mofs_status status_of(mofs::ErrorKind k) {
    switch (k) {
    case mofs::ErrorKind::invalid_argument: return MOFS_E_INVALID_ARGUMENT;
    case mofs::ErrorKind::io: return MOFS_E_IO;
    case mofs::ErrorKind::parse: return MOFS_E_PARSE;
    case mofs::ErrorKind::network: return MOFS_E_NETWORK;
    case mofs::ErrorKind::runtime: return MOFS_E_RUNTIME;
    }
    return MOFS_E_RUNTIME;
}

template <class Fn>
mofs_status guarded(Fn&& fn) {
    try {
        last_error.clear();
        return fn();
    } catch (const mofs::Error& e) {
        last_error = e.what();
        return status_of(e.kind());
    } catch (const nlohmann::json::exception& e) {
        last_error = e.what();
        return MOFS_E_PARSE;
    } catch (const std::exception& e) {
        last_error = e.what();
        return MOFS_E_RUNTIME;
    } catch (...) {
        last_error = "unknown error";
        return MOFS_E_RUNTIME;
    }
}

char* dup_string(const std::string& s) {
    char* out = new char[s.size() + 1];
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

void need(const void* p, const char* what) {
    if (!p) mofs::fail(mofs::ErrorKind::invalid_argument, std::string(what) + " must not be NULL");
}

}  // namespace

extern "C" {

const char* mofs_last_error(void) { return last_error.c_str(); }
const char* mofs_version(void) { return "1.0.0"; }

void mofs_set_log_level(int level) {
    mofs::set_log_level(level <= 0 ? mofs::LogLevel::quiet : level == 1 ? mofs::LogLevel::info : mofs::LogLevel::debug);
}

void mofs_string_free(char* s) { delete[] s; }

mofs_status mofs_dataset_load_csv(const char* path, const char* target_column, mofs_dataset** out) {
    return guarded([&] {
        need(path, "path");
        need(out, "out");
        *out = new mofs_dataset{mofs::load_csv(path, target_column ? target_column : "class")};
        return MOFS_OK;
    });
}

mofs_status mofs_dataset_load_arff(const char* path, mofs_dataset** out) {
    return guarded([&] {
        need(path, "path");
        need(out, "out");
        *out = new mofs_dataset{mofs::load_arff(path)};
        return MOFS_OK;
    });
}

mofs_status mofs_dataset_fetch_openml(int did, const char* cache_dir, mofs_dataset** out) {
    return guarded([&] {
        need(out, "out");
        *out = new mofs_dataset{mofs::fetch_openml(did, cache_dir ? cache_dir : "cache")};
        return MOFS_OK;
    });
}

mofs_status mofs_dataset_synthetic(size_t n, size_t p, size_t k, double noise_sd, uint64_t seed, mofs_dataset** out,
                                   size_t* informative_out, size_t capacity) {
    return guarded([&] {
        need(out, "out");
        auto s = mofs::make_synthetic(n, p, k, noise_sd, seed);
        if (informative_out)
            for (size_t i = 0; i < s.informative.size() && i < capacity; ++i) informative_out[i] = s.informative[i];
        *out = new mofs_dataset{std::move(s.data)};
        return MOFS_OK;
    });
}

size_t mofs_dataset_rows(const mofs_dataset* d) { return d ? d->data.rows() : 0; }
size_t mofs_dataset_cols(const mofs_dataset* d) { return d ? d->data.cols() : 0; }

mofs_status mofs_dataset_write_csv(const mofs_dataset* d, const char* path) {
    return guarded([&] {
        need(d, "dataset");
        need(path, "path");
        mofs::write_csv(d->data, path);
        return MOFS_OK;
    });
}

void mofs_dataset_free(mofs_dataset* d) { delete d; }

mofs_status mofs_experiment_from_json(const char* json_text, mofs_experiment** out) {
    return guarded([&] {
        need(json_text, "json_text");
        need(out, "out");
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(json_text);
        } catch (const nlohmann::json::exception& e) {
            mofs::fail(mofs::ErrorKind::parse, std::string("experiment config: ") + e.what());
        }
        *out = new mofs_experiment{mofs::experiment_config_from_json(j)};
        return MOFS_OK;
    });
}

mofs_status mofs_experiment_from_file(const char* path, mofs_experiment** out) {
    return guarded([&] {
        need(path, "path");
        need(out, "out");
        *out = new mofs_experiment{mofs::load_experiment_config(path)};
        return MOFS_OK;
    });
}

mofs_status mofs_experiment_set_workers(mofs_experiment* e, size_t workers) {
    return guarded([&] {
        need(e, "experiment");
        mofs::require(workers >= 1, "workers must be at least 1");
        e->config.workers = workers;
        return MOFS_OK;
    });
}

mofs_status mofs_experiment_set_output_dir(mofs_experiment* e, const char* dir) {
    return guarded([&] {
        need(e, "experiment");
        need(dir, "dir");
        e->config.output_dir = dir;
        return MOFS_OK;
    });
}

mofs_status mofs_experiment_run(mofs_experiment* e, char** summary_json) {
    return guarded([&] {
        need(e, "experiment");
        auto res = mofs::run_experiment(e->config);
        if (summary_json) {
            nlohmann::json j;
            j["dataset"] = res.dataset;
            j["learner"] = res.learner;
            j["runs"] = nlohmann::json::array();
            for (const auto& r : res.runs)
                j["runs"].push_back({{"method", r.method},
                                     {"fold", r.fold},
                                     {"evaluations", r.evaluations},
                                     {"domhv_gen", r.domhv_gen},
                                     {"front_size", r.front.size()}});
            j["failures"] = nlohmann::json::array();
            for (const auto& f : res.failures)
                j["failures"].push_back({{"method", f.method}, {"fold", f.fold}, {"message", f.message}});
            *summary_json = dup_string(j.dump());
        }
        if (!res.ok()) {
            last_error = std::to_string(res.failures.size()) + " run(s) failed; first: " + res.failures.front().method +
                         " fold " + std::to_string(res.failures.front().fold) + ": " + res.failures.front().message;
            return MOFS_E_PARTIAL_FAILURE;
        }
        return MOFS_OK;
    });
}

mofs_status mofs_experiment_pretune(mofs_experiment* e, char** result_json) {
    return guarded([&] {
        need(e, "experiment");
        need(result_json, "result_json");
        const auto folds = mofs::run_pretune(e->config);
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& f : folds) {
            mofs::Configuration c;
            c.hyperparams = f.result.hyperparams;
            arr.push_back({{"fold", f.fold},
                           {"hyperparams", mofs::config_to_json(e->config.space, c)["hyperparams"]},
                           {"perf", f.result.objectives.perf},
                           {"evaluations", f.result.evaluations}});
        }
        *result_json = dup_string(arr.dump());
        return MOFS_OK;
    });
}

void mofs_experiment_free(mofs_experiment* e) { delete e; }

mofs_status mofs_report(const char* result_dir, char** ranks_json) {
    return guarded([&] {
        need(result_dir, "result_dir");
        const auto s = mofs::write_report(result_dir);
        if (ranks_json) {
            nlohmann::json arr = nlohmann::json::array();
            for (size_t i = 0; i < s.methods.size(); ++i)
                arr.push_back({{"method", s.methods[i]},
                               {"average_rank", s.average_rank[i]},
                               {"inverted_rank", s.inverted_rank[i]}});
            *ranks_json = dup_string(arr.dump());
        }
        return MOFS_OK;
    });
}

mofs_status mofs_hypervolume_2d(const double* points, size_t n, double ref_perf, double ref_cost, double* out) {
    return guarded([&] {
        need(out, "out");
        if (n > 0) need(points, "points");
        std::vector<mofs::Point2> pts(n);
        for (size_t i = 0; i < n; ++i) pts[i] = {points[2 * i], points[2 * i + 1]};
        *out = mofs::hypervolume_2d(pts, {ref_perf, ref_cost});
        return MOFS_OK;
    });
}

mofs_status mofs_nondominated_sort(const double* points, size_t n, size_t* front_out) {
    return guarded([&] {
        if (n == 0) return MOFS_OK;
        need(points, "points");
        need(front_out, "front_out");
        std::vector<mofs::Point2> pts(n);
        for (size_t i = 0; i < n; ++i) pts[i] = {points[2 * i], points[2 * i + 1]};
        const auto fronts = mofs::nondominated_sort(pts);
        for (size_t f = 0; f < fronts.size(); ++f)
            for (auto i : fronts[f]) front_out[i] = f + 1;
        return MOFS_OK;
    });
}

}  // extern "C"
