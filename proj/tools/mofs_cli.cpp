#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "mofs/mofs.h"

namespace {

int report_failure(mofs_status st, const char* what) {
    std::fprintf(stderr, "mofs: %s: %s\n", what, mofs_last_error());
    return st == MOFS_E_PARTIAL_FAILURE ? 3 : 1;
}

void print_and_free(char* s) {
    if (!s) return;
    std::printf("%s\n", s);
    mofs_string_free(s);
}

mofs_status open_experiment(const std::string& path, size_t workers, const std::string& out_dir, mofs_experiment** e) {
    mofs_status st = mofs_experiment_from_file(path.c_str(), e);
    if (st != MOFS_OK) return st;
    if (workers > 0 && (st = mofs_experiment_set_workers(*e, workers)) != MOFS_OK) return st;
    if (!out_dir.empty() && (st = mofs_experiment_set_output_dir(*e, out_dir.c_str())) != MOFS_OK) return st;
    return MOFS_OK;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-objective hyperparameter tuning with feature selection"};
    app.require_subcommand(1);
    int verbosity = 1;
    app.add_option("-v,--verbosity", verbosity, "0 quiet, 1 info, 2 debug")->check(CLI::Range(0, 2));

    std::string config_path, out_dir;
    size_t workers = 0;

    auto* run = app.add_subcommand("run", "Run a nested-resampling experiment");
    run->add_option("config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
    run->add_option("--workers", workers, "Concurrent evaluations");
    run->add_option("--out", out_dir, "Result directory (overrides the config)");

    auto* pretune = app.add_subcommand("pretune", "Single-objective pretuning with all features");
    pretune->add_option("config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
    pretune->add_option("--workers", workers, "Concurrent evaluations");

    std::string result_dir;
    auto* report = app.add_subcommand("report", "Write plot-ready CSVs for a result directory");
    report->add_option("dir", result_dir, "Result directory")->required()->check(CLI::ExistingDirectory);

    int did = 0;
    std::string cache_dir = "cache";
    auto* fetch = app.add_subcommand("fetch", "Download an OpenML dataset into the cache");
    fetch->add_option("did", did, "OpenML dataset id")->required();
    fetch->add_option("--cache", cache_dir, "Cache directory");

    size_t n = 300, p = 50, k = 5;
    double noise = 0.1;
    uint64_t seed = 1;
    std::string out_csv = "synthetic.csv";
    auto* synth = app.add_subcommand("synth", "Write a synthetic dataset with known informative features");
    synth->add_option("--n", n, "Rows");
    synth->add_option("--p", p, "Features");
    synth->add_option("--k", k, "Informative features");
    synth->add_option("--noise", noise, "Label noise standard deviation");
    synth->add_option("--seed", seed, "Seed");
    synth->add_option("--out", out_csv, "Output CSV");

    CLI11_PARSE(app, argc, argv);
    mofs_set_log_level(verbosity);

    if (*run) {
        mofs_experiment* e = nullptr;
        mofs_status st = open_experiment(config_path, workers, out_dir, &e);
        if (st != MOFS_OK) return report_failure(st, "config");
        char* summary = nullptr;
        st = mofs_experiment_run(e, &summary);
        print_and_free(summary);
        mofs_experiment_free(e);
        return st == MOFS_OK ? 0 : report_failure(st, "run");
    }
    if (*pretune) {
        mofs_experiment* e = nullptr;
        mofs_status st = open_experiment(config_path, workers, "", &e);
        if (st != MOFS_OK) return report_failure(st, "config");
        char* result = nullptr;
        st = mofs_experiment_pretune(e, &result);
        print_and_free(result);
        mofs_experiment_free(e);
        return st == MOFS_OK ? 0 : report_failure(st, "pretune");
    }
    if (*report) {
        char* ranks = nullptr;
        mofs_status st = mofs_report(result_dir.c_str(), &ranks);
        if (st != MOFS_OK) return report_failure(st, "report");
        print_and_free(ranks);
        return 0;
    }
    if (*fetch) {
        mofs_dataset* d = nullptr;
        mofs_status st = mofs_dataset_fetch_openml(did, cache_dir.c_str(), &d);
        if (st != MOFS_OK) return report_failure(st, "fetch");
        std::printf("dataset %d: n=%zu p=%zu\n", did, mofs_dataset_rows(d), mofs_dataset_cols(d));
        mofs_dataset_free(d);
        return 0;
    }
    if (*synth) {
        mofs_dataset* d = nullptr;
        std::vector<size_t> informative(k);
        mofs_status st = mofs_dataset_synthetic(n, p, k, noise, seed, &d, informative.data(), informative.size());
        if (st != MOFS_OK) return report_failure(st, "synth");
        st = mofs_dataset_write_csv(d, out_csv.c_str());
        mofs_dataset_free(d);
        if (st != MOFS_OK) return report_failure(st, "synth");
        std::printf("wrote %s; informative:", out_csv.c_str());
        for (auto i : informative) std::printf(" %zu", i);
        std::printf("\n");
        return 0;
    }
    return 0;
}
