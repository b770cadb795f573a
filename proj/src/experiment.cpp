#include "mofs/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "mofs/error.hpp"
#include "mofs/filters.hpp"
#include "mofs/log.hpp"
#include "mofs/parallel.hpp"
#include "mofs/trace.hpp"

namespace mofs {

using nlohmann::json;

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

bool needs_filters(const std::string& m) {
    return m != "random-search" && m != "ablation-1" && m != "ablation-2" && m != "ablation-3" && m != "ablation-4";
}

bool needs_geom_rate(const std::string& m) { return m.rfind("GA-", 0) == 0 || m.rfind("ablation-", 0) == 0 || m == "random-search"; }

std::string run_stem(const std::string& method, std::size_t fold) { return method + "_fold" + std::to_string(fold); }

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

std::vector<std::vector<std::string>> read_csv_rows(const std::filesystem::path& path, std::size_t columns) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::io, "cannot read " + path.string());
    std::vector<std::vector<std::string>> rows;
    std::string line;
    bool header = true;
    std::size_t no = 0;
    while (std::getline(in, line)) {
        ++no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (header) {
            header = false;
            continue;
        }
        auto cells = split_csv_line(line);
        if (cells.size() != columns)
            fail(ErrorKind::parse, path.string() + ":" + std::to_string(no) + ": expected " + std::to_string(columns) +
                                       " fields, found " + std::to_string(cells.size()));
        rows.push_back(std::move(cells));
    }
    return rows;
}

double parse_double(const std::string& s, const std::filesystem::path& path) {
    try {
        std::size_t used = 0;
        double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        fail(ErrorKind::parse, path.string() + ": not a number: '" + s + "'");
    }
}

void ensure_dir(const std::filesystem::path& p) {
    std::error_code ec;
    std::filesystem::create_directories(p, ec);
    if (ec) fail(ErrorKind::io, "cannot create directory " + p.string() + ": " + ec.message());
}

std::ofstream open_out(const std::filesystem::path& p) {
    std::ofstream out(p);
    if (!out) fail(ErrorKind::io, "cannot write " + p.string());
    return out;
}

}  // namespace

const std::vector<std::string>& method_names() {
    static const std::vector<std::string> names = {
        "GA-MO",      "GA-MO-FE",   "GA-MO-FE-NJ", "BO-MO",      "BO-MO-FE",   "BO-MO-FE-NJ", "BO-SO",
        "BO-SO-FE",   "ablation-1", "ablation-2",  "ablation-3", "ablation-4", "ablation-5",  "ablation-6",
        "random-search"};
    return names;
}

bool is_known_method(const std::string& name) {
    const auto& n = method_names();
    return std::find(n.begin(), n.end(), name) != n.end();
}

std::uint64_t method_seed(std::uint64_t seed, std::size_t fold, const std::string& method) {
    return derive_seed(seed, {fold, fnv1a(method)});
}

// ---------------------------------------------------------------------------
// Configuration

SearchSpace default_search_space(LearnerKind kind) {
    switch (kind) {
    case LearnerKind::knn:
        return SearchSpace({ParamDef::integer("k", 1, 50), ParamDef::numeric("distance", 1.0, 100.0),
                            ParamDef::categorical("kernel", knn_kernel_names())});
    case LearnerKind::decision_tree:
        return SearchSpace({ParamDef::integer("max_depth", 1, 30), ParamDef::integer("min_split", 2, 50)});
    case LearnerKind::external: break;
    }
    fail(ErrorKind::invalid_argument, "the external learner needs an explicit search space");
}

SearchSpace search_space_from_json(const json& j) {
    if (!j.is_array()) fail(ErrorKind::parse, "search_space must be an array");
    std::vector<ParamDef> defs;
    try {
        for (const auto& e : j) {
            const auto name = e.at("name").get<std::string>();
            const auto kind = param_kind_from_string(e.at("kind").get<std::string>());
            const bool log = e.value("log", false);
            switch (kind) {
            case ParamKind::numeric:
                defs.push_back(ParamDef::numeric(name, e.at("lo").get<double>(), e.at("hi").get<double>(), log));
                break;
            case ParamKind::integer:
                defs.push_back(
                    ParamDef::integer(name, e.at("lo").get<std::int64_t>(), e.at("hi").get<std::int64_t>(), log));
                break;
            case ParamKind::categorical:
                defs.push_back(ParamDef::categorical(name, e.at("levels").get<std::vector<std::string>>()));
                break;
            }
        }
    } catch (const json::exception& e) {
        fail(ErrorKind::parse, std::string("malformed search_space: ") + e.what());
    }
    return SearchSpace(std::move(defs));
}

json search_space_to_json(const SearchSpace& space) {
    json arr = json::array();
    for (const auto& d : space.params()) {
        json e{{"name", d.name}, {"kind", to_string(d.kind)}};
        if (d.kind == ParamKind::categorical) {
            e["levels"] = d.levels;
        } else if (d.kind == ParamKind::integer) {
            e["lo"] = static_cast<std::int64_t>(d.lo);
            e["hi"] = static_cast<std::int64_t>(d.hi);
        } else {
            e["lo"] = d.lo;
            e["hi"] = d.hi;
        }
        if (d.log_scale) e["log"] = true;
        arr.push_back(std::move(e));
    }
    return arr;
}

namespace {

DatasetSource dataset_source_from_json(const json& j) {
    DatasetSource s;
    const auto type = j.value("type", std::string("synthetic"));
    if (type == "synthetic") {
        s.kind = DatasetSource::Kind::synthetic;
        s.n = j.value("n", s.n);
        s.p = j.value("p", s.p);
        s.informative = j.value("informative", s.informative);
        s.noise = j.value("noise", s.noise);
        s.seed = j.value("seed", s.seed);
    } else if (type == "csv" || type == "arff") {
        s.kind = type == "csv" ? DatasetSource::Kind::csv : DatasetSource::Kind::arff;
        s.path = j.at("path").get<std::string>();
        s.target = j.value("target", type == "csv" ? std::string("class") : std::string());
    } else if (type == "openml") {
        s.kind = DatasetSource::Kind::openml;
        s.did = j.at("did").get<int>();
        s.cache_dir = j.value("cache_dir", std::string("cache"));
        s.api_base = j.value("api_base", s.api_base);
    } else {
        fail(ErrorKind::parse, "unknown dataset type '" + type + "'");
    }
    return s;
}

json dataset_source_to_json(const DatasetSource& s) {
    switch (s.kind) {
    case DatasetSource::Kind::synthetic:
        return {{"type", "synthetic"}, {"n", s.n}, {"p", s.p}, {"informative", s.informative},
                {"noise", s.noise},    {"seed", s.seed}};
    case DatasetSource::Kind::csv: return {{"type", "csv"}, {"path", s.path.string()}, {"target", s.target}};
    case DatasetSource::Kind::arff: return {{"type", "arff"}, {"path", s.path.string()}, {"target", s.target}};
    case DatasetSource::Kind::openml:
        return {{"type", "openml"}, {"did", s.did}, {"cache_dir", s.cache_dir.string()}, {"api_base", s.api_base}};
    }
    return {};
}

}  // namespace

ExperimentConfig experiment_config_from_json(const json& j) {
    ExperimentConfig c;
    try {
        if (!j.is_object()) fail(ErrorKind::parse, "experiment config must be a JSON object");
        if (j.contains("dataset")) c.dataset = dataset_source_from_json(j["dataset"]);
        c.dataset_name = j.value("name", std::string());
        if (j.contains("costs")) c.costs = j["costs"].get<std::vector<double>>();

        if (j.contains("learner")) {
            const auto& l = j["learner"];
            c.learner.kind = learner_kind_from_string(l.is_string() ? l.get<std::string>() : l.at("kind").get<std::string>());
            if (l.is_object()) {
                c.learner.command = l.value("command", std::string());
                c.learner.knn.k = l.value("k", c.learner.knn.k);
                c.learner.knn.distance = l.value("distance", c.learner.knn.distance);
                if (l.contains("kernel")) c.learner.knn.kernel = knn_kernel_from_string(l["kernel"].get<std::string>());
                c.learner.tree.max_depth = l.value("max_depth", c.learner.tree.max_depth);
                c.learner.tree.min_split = l.value("min_split", c.learner.tree.min_split);
            }
        }
        c.space = j.contains("search_space") ? search_space_from_json(j["search_space"])
                                             : default_search_space(c.learner.kind);

        if (!j.contains("methods")) fail(ErrorKind::parse, "experiment config lists no methods");
        c.methods = j["methods"].get<std::vector<std::string>>();
        c.budget = j.value("budget", c.budget);
        c.outer_folds = j.value("outer_folds", c.outer_folds);
        c.inner_folds = j.value("inner_folds", c.inner_folds);
        if (j.contains("max_outer_folds")) c.max_outer_folds = j["max_outer_folds"].get<std::size_t>();
        c.seed = j.value("seed", c.seed);
        c.workers = j.value("workers", c.workers);
        c.output_dir = j.value("output_dir", c.output_dir.string());
        c.stratified = j.value("stratified", c.stratified);
        if (j.contains("filters")) c.filters = j["filters"].get<std::vector<std::string>>();
        if (j.contains("geom_rate")) c.geom_rate = j["geom_rate"].get<double>();
        c.geom_trials = j.value("geom_trials", c.geom_trials);
        if (j.contains("geom_tree")) {
            c.geom_tree.max_depth = j["geom_tree"].value("max_depth", c.geom_tree.max_depth);
            c.geom_tree.min_split = j["geom_tree"].value("min_split", c.geom_tree.min_split);
        }
        if (j.contains("ga")) {
            const auto& g = j["ga"];
            c.ga.mu = g.value("mu", c.ga.mu);
            c.ga.offspring = g.value("offspring", c.ga.offspring);
            c.ga.p_crossover = g.value("p_crossover", c.ga.p_crossover);
            c.ga.p_mutation = g.value("p_mutation", c.ga.p_mutation);
            c.ga.gene_p = g.value("gene_p", c.ga.gene_p);
            c.ga.eta = g.value("eta", c.ga.eta);
            c.ga.weight_sd = g.value("weight_sd", c.ga.weight_sd);
        }
        if (j.contains("bo")) {
            const auto& b = j["bo"];
            c.bo.batch = b.value("batch", c.bo.batch);
            if (b.contains("initial_design")) c.bo.initial_design = b["initial_design"].get<std::size_t>();
            c.bo.rho_aug = b.value("rho_aug", c.bo.rho_aug);
            c.bo.uniform_candidates = b.value("uniform_candidates", c.bo.uniform_candidates);
            c.bo.local_candidates = b.value("local_candidates", c.bo.local_candidates);
            c.bo.local_parents = b.value("local_parents", c.bo.local_parents);
            c.bo.local_sd = b.value("local_sd", c.bo.local_sd);
            c.bo.local_resample = b.value("local_resample", c.bo.local_resample);
            c.bo.weight_sd = b.value("weight_sd", c.bo.weight_sd);
            c.bo.kappa_mean = b.value("kappa_mean", c.bo.kappa_mean);
            c.bo.kappa_offset = b.value("kappa_offset", c.bo.kappa_offset);
            if (b.contains("kappa")) c.bo.fixed_kappa = b["kappa"].get<double>();
            c.bo.forest.trees = b.value("trees", c.bo.forest.trees);
            c.bo.forest.min_leaf = b.value("min_leaf", c.bo.forest.min_leaf);
            c.bo.forest.mtry = b.value("mtry", c.bo.forest.mtry);
            c.bo.nj_sweep = b.value("nj_sweep", c.bo.nj_sweep);
        }
        c.pretune_budget = j.value("pretune_budget", c.pretune_budget);
    } catch (const json::exception& e) {
        fail(ErrorKind::parse, std::string("malformed experiment config: ") + e.what());
    }

    require(!c.methods.empty(), "experiment config lists no methods");
    for (const auto& m : c.methods) {
        require(is_known_method(m), "unknown method '" + m + "'");
        require(std::count(c.methods.begin(), c.methods.end(), m) == 1, "method '" + m + "' listed twice");
    }
    require(c.budget >= 1, "budget must be positive");
    require(c.outer_folds >= 2, "outer_folds must be at least 2");
    require(c.inner_folds >= 2, "inner_folds must be at least 2");
    require(c.workers >= 1, "workers must be at least 1");
    require(!c.filters.empty(), "at least one filter is required");
    if (c.max_outer_folds) require(*c.max_outer_folds >= 1, "max_outer_folds must be positive");
    if (c.geom_rate) require(*c.geom_rate > 0.0 && *c.geom_rate < 1.0, "geom_rate must lie in (0,1)");
    for (const auto& m : c.methods) {
        const bool ga = m.rfind("GA-", 0) == 0 || m.rfind("ablation-", 0) == 0;
        if (ga && m != "GA-MO-FE-NJ")
            require(c.budget >= c.ga.mu, "budget " + std::to_string(c.budget) + " is below the population size for " + m);
        if (m == "GA-MO-FE-NJ")
            require(c.budget >= c.pretune_budget + c.ga.mu,
                    "GA-MO-FE-NJ needs a budget of at least pretune_budget + mu = " +
                        std::to_string(c.pretune_budget + c.ga.mu));
    }
    return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::io, "cannot read " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        fail(ErrorKind::parse, path.string() + ": " + e.what());
    }
    return experiment_config_from_json(j);
}

json experiment_config_to_json(const ExperimentConfig& c) {
    json j;
    j["dataset"] = dataset_source_to_json(c.dataset);
    if (!c.dataset_name.empty()) j["name"] = c.dataset_name;
    if (c.costs) j["costs"] = *c.costs;
    json l{{"kind", learner_kind_name(c.learner.kind)}};
    if (c.learner.kind == LearnerKind::external) l["command"] = c.learner.command;
    j["learner"] = l;
    j["search_space"] = search_space_to_json(c.space);
    j["methods"] = c.methods;
    j["budget"] = c.budget;
    j["outer_folds"] = c.outer_folds;
    j["inner_folds"] = c.inner_folds;
    if (c.max_outer_folds) j["max_outer_folds"] = *c.max_outer_folds;
    j["seed"] = c.seed;
    j["stratified"] = c.stratified;
    j["filters"] = c.filters;
    if (c.geom_rate) j["geom_rate"] = *c.geom_rate;
    j["geom_trials"] = c.geom_trials;
    j["ga"] = {{"mu", c.ga.mu},         {"offspring", c.ga.offspring}, {"p_crossover", c.ga.p_crossover},
               {"p_mutation", c.ga.p_mutation}, {"gene_p", c.ga.gene_p}, {"eta", c.ga.eta},
               {"weight_sd", c.ga.weight_sd}};
    json b{{"batch", c.bo.batch},          {"rho_aug", c.bo.rho_aug},
           {"uniform_candidates", c.bo.uniform_candidates}, {"local_candidates", c.bo.local_candidates},
           {"local_parents", c.bo.local_parents}, {"local_sd", c.bo.local_sd},
           {"local_resample", c.bo.local_resample}, {"weight_sd", c.bo.weight_sd},
           {"kappa_mean", c.bo.kappa_mean}, {"kappa_offset", c.bo.kappa_offset},
           {"trees", c.bo.forest.trees},   {"min_leaf", c.bo.forest.min_leaf},
           {"mtry", c.bo.forest.mtry},     {"nj_sweep", c.bo.nj_sweep}};
    if (c.bo.initial_design) b["initial_design"] = *c.bo.initial_design;
    if (c.bo.fixed_kappa) b["kappa"] = *c.bo.fixed_kappa;
    j["bo"] = b;
    j["pretune_budget"] = c.pretune_budget;
    return j;
}

// ---------------------------------------------------------------------------
// Data

LoadedData load_dataset(const DatasetSource& src, const OpenMlOptions& openml) {
    LoadedData out;
    switch (src.kind) {
    case DatasetSource::Kind::synthetic: {
        auto s = make_synthetic(src.n, src.p, src.informative, src.noise, src.seed);
        out.data = std::move(s.data);
        out.informative = std::move(s.informative);
        out.name = "synthetic";
        break;
    }
    case DatasetSource::Kind::csv:
        out.data = load_csv(src.path, src.target);
        out.name = src.path.stem().string();
        break;
    case DatasetSource::Kind::arff:
        out.data = load_arff(src.path, src.target);
        out.name = src.path.stem().string();
        break;
    case DatasetSource::Kind::openml: {
        OpenMlOptions opts = openml;
        if (opts.api_base == OpenMlOptions{}.api_base) opts.api_base = src.api_base;
        out.data = fetch_openml(src.did, src.cache_dir, opts);
        out.name = "openml-" + std::to_string(src.did);
        break;
    }
    }
    return out;
}

void check_firewall(const Dataset& optim, std::span<const std::size_t> test_ids) {
    std::vector<std::size_t> a = optim.row_ids();
    std::vector<std::size_t> b(test_ids.begin(), test_ids.end());
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::vector<std::size_t> both;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(both));
    if (!both.empty())
        fail(ErrorKind::runtime, "test firewall: the optimization set contains " + std::to_string(both.size()) +
                                     " test rows (first id " + std::to_string(both.front()) + ")");
}

// ---------------------------------------------------------------------------
// Nested resampling

namespace {

struct FoldData {
    std::size_t fold = 0;
    std::vector<std::size_t> optim_idx;
    std::vector<std::size_t> test_idx;
    std::unique_ptr<Evaluator> evaluator;
    double rho = 0.5;
};

// Refits on all of D_optim and scores on D_test.
double test_error(const Learner& learner, const Dataset& full, const FoldData& fd, const FeatureMask& mask,
                  const HyperValues& hp) {
    const auto pred = learner.train_predict(full, mask, fd.optim_idx, fd.test_idx, hp);
    std::vector<std::uint8_t> truth(fd.test_idx.size());
    for (std::size_t i = 0; i < truth.size(); ++i) truth[i] = full.label(fd.test_idx[i]);
    return mmce(truth, pred);
}

struct MethodOutput {
    Trace trace;
    ParetoReport report;
    std::size_t evaluations = 0;
};

MethodOutput dispatch(const std::string& method, const ExperimentConfig& cfg, const FoldData& fd, std::uint64_t seed) {
    const Evaluator& ev = *fd.evaluator;
    const Problem prob = Problem::from(ev, cfg.workers);
    MethodOutput out;
    if (method == "random-search") {
        auto r = run_random_search(prob, cfg.budget, fd.rho, seed);
        out.report = trace_pareto_report(r.trace);
        out.evaluations = r.evaluations;
        out.trace = std::move(r.trace);
        return out;
    }
    if (auto bo = bo_variant_from_string(method)) {
        auto r = run_bo(prob, *bo, cfg.budget, seed, cfg.bo);
        out.report = bo_pareto_report(r);
        out.evaluations = r.evaluations;
        out.trace = std::move(r.trace);
        return out;
    }
    auto variant = ga_variant_from_string(method);
    require(variant.has_value(), "unknown method '" + method + "'");
    GaOperators ops = operators_for(*variant, fd.rho);
    ops.mu = cfg.ga.mu;
    ops.offspring = cfg.ga.offspring;
    ops.p_crossover = cfg.ga.p_crossover;
    ops.p_mutation = cfg.ga.p_mutation;
    ops.gene_p = cfg.ga.gene_p;
    ops.eta = cfg.ga.eta;
    ops.weight_sd = cfg.ga.weight_sd;

    std::size_t budget = cfg.budget;
    Trace prefix;
    if (*variant == GaVariant::ga_mo_fe_nj) {
        auto pre = run_nj_pretune(prob, cfg.pretune_budget, derive_seed(seed, {1}), cfg.bo);
        Configuration frozen;
        frozen.hyperparams = pre.hyperparams;
        frozen.mask = FeatureMask(ev.data().cols(), true);
        const auto bad = validate(ev.space(), frozen);
        require(bad.empty(), "pretuned hyperparameters are invalid");
        ops.frozen_hyperparams = pre.hyperparams;
        budget -= pre.evaluations;
        prefix = std::move(pre.trace);
    }
    auto r = run_nsga2(prob, ops, budget, derive_seed(seed, {2}));
    out.report = ga_pareto_report(r);
    const std::size_t offset = prefix.size();
    for (auto& p : out.report.points) p.eval_index += offset;
    out.evaluations = r.evaluations + offset;
    out.report.eval_budget_at_report = out.evaluations;
    out.trace = std::move(prefix);
    for (auto& rec : r.trace.records) {
        rec.eval_index += offset;
        out.trace.records.push_back(std::move(rec));
    }
    out.trace.generations = r.trace.generations;
    return out;
}

MethodRun run_method(const std::string& method, const ExperimentConfig& cfg, const Dataset& full, const FoldData& fd) {
    Evaluator& ev = *fd.evaluator;
    ev.reset_count();
    MethodOutput mo = dispatch(method, cfg, fd, method_seed(cfg.seed, fd.fold, method));
    if (ev.evaluations() > cfg.budget)
        fail(ErrorKind::runtime, method + " used " + std::to_string(ev.evaluations()) + " evaluations, budget " +
                                     std::to_string(cfg.budget));

    MethodRun run;
    run.method = method;
    run.fold = fd.fold;
    run.evaluations = mo.evaluations;
    const Learner& learner = ev.learner();

    run.front.resize(mo.report.points.size());
    parallel_for(run.front.size(), cfg.workers, [&](std::size_t i) {
        const auto& pt = mo.report.points[i];
        run.front[i].point = pt;
        run.front[i].test_perf = test_error(learner, full, fd, pt.mask, pt.config.hyperparams);
    });
    std::vector<double> test_perf;
    std::vector<Point2> optim_pts;
    for (const auto& f : run.front) {
        test_perf.push_back(f.test_perf);
        optim_pts.push_back(to_point(f.point.optim));
    }
    run.domhv_gen = generalization_domhv(mo.report, test_perf);
    run.domhv_optim = hypervolume_2d(optim_pts);

    std::vector<std::size_t> improvements;
    double best = 2.0;
    for (std::size_t i = 0; i < mo.trace.size(); ++i) {
        if (mo.trace.records[i].objectives.perf < best) {
            best = mo.trace.records[i].objectives.perf;
            improvements.push_back(i);
        }
    }
    run.anytime.resize(improvements.size());
    parallel_for(improvements.size(), cfg.workers, [&](std::size_t k) {
        const auto& rec = mo.trace.records[improvements[k]];
        run.anytime[k] = {rec.eval_index, rec.objectives.perf,
                          test_error(learner, full, fd, rec.mask, rec.config.hyperparams)};
    });
    run.trace = std::move(mo.trace);
    return run;
}

void write_run_outputs(const std::filesystem::path& dir, const SearchSpace& space, const MethodRun& run) {
    const auto stem = run_stem(run.method, run.fold);
    {
        auto out = open_out(dir / "fronts" / (stem + ".csv"));
        out << "eval_index,optim_perf,cost,test_perf,selected,mask\n";
        for (const auto& f : run.front) {
            out << f.point.eval_index << ',' << fmt(f.point.optim.perf) << ',' << fmt(f.point.optim.cost) << ','
                << fmt(f.test_perf) << ',' << f.point.mask.weight() << ',' << f.point.mask.to_string() << '\n';
        }
    }
    {
        auto out = open_out(dir / "anytime" / (stem + ".csv"));
        out << "eval_index,optim_perf,test_perf\n";
        for (const auto& a : run.anytime) out << a.eval_index << ',' << fmt(a.optim_perf) << ',' << fmt(a.test_perf) << '\n';
    }
    write_trace_jsonl(dir / "traces" / (stem + ".jsonl"), space, run.trace);
}

std::vector<FoldData> prepare_folds(const ExperimentConfig& cfg, const Dataset& data, bool with_filters,
                                    bool with_rho) {
    const CvSplit outer = split_cv(data, cfg.outer_folds, cfg.stratified, derive_seed(cfg.seed, {0x0fe7}));
    const std::size_t n_folds = std::min(cfg.outer_folds, cfg.max_outer_folds.value_or(cfg.outer_folds));
    auto learner = make_learner(cfg.learner, cfg.space);
    std::vector<FoldData> folds;
    for (std::size_t f = 0; f < n_folds; ++f) {
        FoldData fd;
        fd.fold = f;
        fd.optim_idx = outer.train(f);
        fd.test_idx = outer.test(f);
        Dataset optim = data.subset(fd.optim_idx);
        check_firewall(optim, fd.test_idx);
        CvSplit inner = split_cv(optim, cfg.inner_folds, cfg.stratified, derive_seed(cfg.seed, {f, 0x1a1e}));
        std::optional<FilterMatrix> fm;
        if (with_filters) fm = compute_filter_matrix(optim, cfg.filters);
        if (with_rho) {
            fd.rho = cfg.geom_rate ? *cfg.geom_rate
                                   : estimate_geom_rate(optim, cfg.geom_trials, derive_seed(cfg.seed, {f, 0x9e0}),
                                                        cfg.geom_tree);
        }
        fd.evaluator = std::make_unique<Evaluator>(std::move(optim), std::move(inner), learner, cfg.space, std::move(fm));
        folds.push_back(std::move(fd));
    }
    return folds;
}

Dataset prepared_dataset(const ExperimentConfig& cfg, LoadedData& loaded) {
    if (cfg.costs) return loaded.data.with_costs(*cfg.costs);
    return loaded.data;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, bool write_outputs) {
    LoadedData loaded = load_dataset(cfg.dataset);
    const Dataset data = prepared_dataset(cfg, loaded);
    ExperimentResult result;
    result.dataset = cfg.dataset_name.empty() ? loaded.name : cfg.dataset_name;
    result.learner = learner_kind_name(cfg.learner.kind);
    result.informative = loaded.informative;

    const bool filters = std::any_of(cfg.methods.begin(), cfg.methods.end(), needs_filters);
    const bool rho = std::any_of(cfg.methods.begin(), cfg.methods.end(), needs_geom_rate);

    const auto& dir = cfg.output_dir;
    if (write_outputs) {
        for (const char* sub : {"fronts", "traces", "anytime"}) ensure_dir(dir / sub);
        auto out = open_out(dir / "config.json");
        auto j = experiment_config_to_json(cfg);
        j["name"] = result.dataset;
        out << j.dump(2) << '\n';
    }

    auto folds = prepare_folds(cfg, data, filters, rho);
    for (auto& fd : folds) {
        if (write_outputs && fd.evaluator->filters()) {
            fd.evaluator->filters()->write_csv(dir / ("filters_fold" + std::to_string(fd.fold) + ".csv"));
        }
        for (const auto& m : cfg.methods) {
            log_info("fold " + std::to_string(fd.fold) + ": " + m);
            try {
                MethodRun run = run_method(m, cfg, data, fd);
                if (write_outputs) write_run_outputs(dir, cfg.space, run);
                result.runs.push_back(std::move(run));
            } catch (const std::exception& e) {
                log_warn("fold " + std::to_string(fd.fold) + " " + m + " failed: " + e.what());
                result.failures.push_back({m, fd.fold, e.what()});
            }
        }
    }

    if (write_outputs) {
        auto out = open_out(dir / "summary.csv");
        out << "method,dataset,learner,fold,budget,domhv_gen\n";
        for (const auto& r : result.runs)
            out << r.method << ',' << result.dataset << ',' << result.learner << ',' << r.fold << ',' << r.evaluations
                << ',' << fmt(r.domhv_gen) << '\n';
        if (!result.failures.empty()) {
            auto ferr = open_out(dir / "failures.csv");
            ferr << "method,fold,message\n";
            for (const auto& f : result.failures) {
                std::string msg = f.message;
                std::replace(msg.begin(), msg.end(), ',', ';');
                std::replace(msg.begin(), msg.end(), '\n', ' ');
                ferr << f.method << ',' << f.fold << ',' << msg << '\n';
            }
        }
    }
    return result;
}

std::vector<FoldPretune> run_pretune(const ExperimentConfig& cfg) {
    LoadedData loaded = load_dataset(cfg.dataset);
    const Dataset data = prepared_dataset(cfg, loaded);
    auto folds = prepare_folds(cfg, data, false, false);
    std::vector<FoldPretune> out;
    for (auto& fd : folds) {
        fd.evaluator->reset_count();
        const Problem prob = Problem::from(*fd.evaluator, cfg.workers);
        FoldPretune fp;
        fp.fold = fd.fold;
        fp.result = run_nj_pretune(prob, cfg.pretune_budget, method_seed(cfg.seed, fd.fold, "pretune"), cfg.bo);
        out.push_back(std::move(fp));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Report

RankSummary write_report(const std::filesystem::path& dir) {
    const auto cfg_path = dir / "config.json";
    std::ifstream cin(cfg_path);
    if (!cin) fail(ErrorKind::io, "cannot read " + cfg_path.string());
    json cj;
    try {
        cj = json::parse(cin);
    } catch (const json::exception& e) {
        fail(ErrorKind::parse, cfg_path.string() + ": " + e.what());
    }
    const SearchSpace space = search_space_from_json(cj.at("search_space"));

    const auto summary_path = dir / "summary.csv";
    const auto rows = read_csv_rows(summary_path, 6);
    if (rows.empty()) fail(ErrorKind::invalid_argument, "no method results in " + dir.string());

    std::vector<ResultCell> cells;
    std::vector<std::string> methods;
    for (const auto& r : rows) {
        ResultCell c;
        c.method = r[0];
        c.dataset = r[1];
        c.learner = r[2];
        c.fold = static_cast<std::size_t>(parse_double(r[3], summary_path));
        c.domhv_gen = parse_double(r[5], summary_path);
        if (std::find(methods.begin(), methods.end(), c.method) == methods.end()) methods.push_back(c.method);
        cells.push_back(std::move(c));
    }

    const auto out_dir = dir / "report";
    ensure_dir(out_dir);

    auto fronts = open_out(out_dir / "fronts.csv");
    fronts << "method,fold,optim_perf,cost,test_perf\n";
    std::map<std::string, std::vector<std::vector<std::array<double, 3>>>> curves;
    for (const auto& c : cells) {
        const auto stem = run_stem(c.method, c.fold);
        read_trace_jsonl(dir / "traces" / (stem + ".jsonl"), space);

        const auto fpath = dir / "fronts" / (stem + ".csv");
        for (const auto& r : read_csv_rows(fpath, 6))
            fronts << c.method << ',' << c.fold << ',' << r[1] << ',' << r[2] << ',' << r[3] << '\n';

        const auto apath = dir / "anytime" / (stem + ".csv");
        std::vector<std::array<double, 3>> steps;
        for (const auto& r : read_csv_rows(apath, 3))
            steps.push_back({parse_double(r[0], apath), parse_double(r[1], apath), parse_double(r[2], apath)});
        if (steps.empty()) fail(ErrorKind::parse, apath.string() + ": no anytime records");
        curves[c.method].push_back(std::move(steps));
    }

    for (const auto& m : methods) {
        const auto& folds = curves[m];
        std::size_t last = 0;
        for (const auto& s : folds) last = std::max(last, static_cast<std::size_t>(s.back()[0]));
        auto out = open_out(out_dir / ("anytime_" + m + ".csv"));
        out << "eval_index,mean_optim_perf,mean_test_perf,folds\n";
        std::vector<std::size_t> pos(folds.size(), 0);
        for (std::size_t e = 0; e <= last; ++e) {
            double so = 0.0, st = 0.0;
            std::size_t k = 0;
            for (std::size_t f = 0; f < folds.size(); ++f) {
                const auto& s = folds[f];
                while (pos[f] + 1 < s.size() && static_cast<std::size_t>(s[pos[f] + 1][0]) <= e) ++pos[f];
                if (static_cast<std::size_t>(s[pos[f]][0]) > e) continue;
                so += s[pos[f]][1];
                st += s[pos[f]][2];
                ++k;
            }
            if (k == 0) continue;
            out << e << ',' << fmt(so / static_cast<double>(k)) << ',' << fmt(st / static_cast<double>(k)) << ','
                << k << '\n';
        }
    }

    const auto summary = rank_summary(cells);
    auto ranks = open_out(out_dir / "ranks.csv");
    ranks << "method,average_rank,inverted_rank\n";
    for (std::size_t i = 0; i < summary.methods.size(); ++i)
        ranks << summary.methods[i] << ',' << fmt(summary.average_rank[i]) << ',' << fmt(summary.inverted_rank[i]) << '\n';
    return summary;
}

}  // namespace mofs
