#include <chrono>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "sbench/bench.hpp"
#include "sbench/config.hpp"
#include "sbench/dataset.hpp"
#include "sbench/errors.hpp"
#include "sbench/learn.hpp"

namespace {

using namespace sbench;

uint64_t wall_nanos() {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

std::string path_stem(const std::string& path) {
    size_t slash = path.find_last_of('/');
    std::string base = slash == std::string::npos ? path : path.substr(slash + 1);
    size_t dot = base.find_last_of('.');
    return dot == std::string::npos ? base : base.substr(0, dot);
}

std::vector<Point> load_points(const std::string& csv) {
    DatasetSpec spec;
    spec.source = DatasetSource::file;
    spec.path = csv;
    return gen_dataset(spec);
}

struct GenArgs {
    std::string dist, out;
    uint64_t n = 0, seed = 0;
};

struct BuildArgs {
    std::string index, dataset, config, store;
};

struct RunArgs {
    std::string store, workload, dataset, out, name;
};

struct TuneArgs {
    std::string index, grid, dataset;
    double t_build = 0;
    uint64_t seed = 0;
    uint64_t probes = 200;
};

struct ReportArgs {
    std::string in, format = "csv", out;
};

void cmd_gen(const GenArgs& a) {
    DatasetSpec spec;
    spec.source = dataset_source_from_name(a.dist);
    spec.n = a.n;
    spec.seed = a.seed;
    std::vector<Point> pts = gen_dataset(spec);
    dataset_save_csv(a.out, pts);
    std::cout << "wrote " << pts.size() << " " << a.dist << " points to "
              << a.out << "\n";
}

// Trains whichever learned artifact the variant needs and the config file
// did not already supply. Training queries fall back to a seeded range
// workload when no [training_queries] section was given.
void train_missing(IndexConfigFile& icf, const std::vector<Point>& pts) {
    const TrainKnobs& k = icf.train;
    std::vector<Point> sample(
        pts.begin(), pts.begin() + std::min<uint64_t>(k.sample, pts.size()));
    auto queries = [&]() -> const std::vector<MBR>& {
        if (icf.cfg.training_queries.empty()) {
            WorkloadSpec ws;
            ws.kind = WorkloadKind::range;
            ws.count = 200;
            ws.seed = k.seed;
            icf.cfg.training_queries = gen_queries(ws, pts).boxes;
        }
        return icf.cfg.training_queries;
    };
    const QdSelector& sel = icf.cfg.selector;
    bool sel_zero =
        sel.w[0] == 0 && sel.w[1] == 0 && sel.w[2] == 0 && sel.bias == 0;
    const std::string& n = icf.cfg.name;
    if (n == "rlr" && icf.cfg.policy.is_zero())
        icf.cfg.policy = train_rlr(sample, k.epochs, k.seed);
    else if (n == "qd" && sel_zero)
        icf.cfg.selector = train_qd(sample, queries(), k.rollout_depth, k.seed);
    else if (n == "gkd")
        queries();
    else if (n == "bmtree" && icf.cfg.curve.nodes.empty())
        icf.cfg.curve = train_bmtree(sample, k.height, queries(),
                                     {RewardMode::estimated}, k.seed);
}

void cmd_build(const BuildArgs& a) {
    std::vector<Point> pts = load_points(a.dataset);
    IndexConfigFile icf;
    if (!a.config.empty()) icf = index_config_from(config_load(a.config));
    icf.cfg.name = a.index;
    if (icf.has_training_workload)
        icf.cfg.training_queries =
            gen_queries(icf.training_workload, pts).boxes;
    if (icf.has_train) train_missing(icf, pts);
    uint64_t t0 = wall_nanos();
    AnyIndex idx = build_index(icf.cfg, pts);
    uint64_t dt = wall_nanos() - t0;
    save_index(idx, a.store);
    IndexHandle h = idx.handle();
    std::cout << "built " << a.index << " over " << pts.size() << " points in "
              << dt / 1000000 << " ms: height " << h.stats().height << ", "
              << h.store().page_count() << " pages, "
              << h.store().size_bytes() << " bytes -> " << a.store << "\n";
}

void cmd_run(const RunArgs& a) {
    AnyIndex idx = load_index(a.store);
    std::vector<Point> pts = load_points(a.dataset);
    ConfigFile wf = config_load(a.workload);
    WorkloadSpec spec = workload_spec_from(wf.at("workload"));
    Workload w = gen_queries(spec, pts);
    IndexHandle h = idx.handle();
    RunReport r = run_workload(h, w);
    r.dataset_name = a.name.empty() ? path_stem(a.dataset) : a.name;
    if (a.out.empty()) {
        std::cout << report_csv({r});
    } else {
        report_emit({r}, a.out + ".csv", a.out + ".json");
        std::cout << "wrote " << a.out << ".csv and " << a.out << ".json\n";
    }
}

// Maps grid parameter names onto trainer and builder knobs for the named
// index. Cost-increasing training params: epochs, sample, height,
// rollout_depth.
IndexConfig tune_config(const std::string& index,
                        const std::map<std::string, double>& params,
                        const std::vector<Point>& pts,
                        const std::vector<MBR>& training_queries,
                        uint64_t seed) {
    IndexConfig cfg;
    cfg.name = index;
    uint64_t sample_n = pts.size();
    uint32_t epochs = 1, height = 1, depth = 0;
    for (const auto& [name, value] : params) {
        if (name == "sample")
            sample_n = static_cast<uint64_t>(value);
        else if (name == "epochs")
            epochs = static_cast<uint32_t>(value);
        else if (name == "height")
            height = static_cast<uint32_t>(value);
        else if (name == "rollout_depth")
            depth = static_cast<uint32_t>(value);
        else if (name == "fill_ratio")
            cfg.fill_ratio = value;
        else if (name == "bits")
            cfg.bits = static_cast<uint32_t>(value);
        else if (name == "grid")
            cfg.grid = static_cast<uint32_t>(value);
        else if (name == "models")
            cfg.models = static_cast<uint32_t>(value);
        else
            throw config_error("unknown tune parameter: " + name);
    }
    std::vector<Point> sample(pts.begin(),
                              pts.begin() + std::min<uint64_t>(sample_n, pts.size()));
    if (index == "rlr") {
        cfg.policy = train_rlr(sample, epochs, seed);
    } else if (index == "qd") {
        cfg.selector = train_qd(sample, training_queries, depth, seed);
        cfg.training_queries = training_queries;
    } else if (index == "gkd") {
        cfg.training_queries = training_queries;
    } else if (index == "bmtree") {
        cfg.curve = train_bmtree(sample, height, training_queries,
                                 {RewardMode::estimated}, seed);
    }
    return cfg;
}

void cmd_tune(const TuneArgs& a) {
    std::vector<Point> pts = load_points(a.dataset);
    TuneGrid grid = tune_grid_from(config_load(a.grid));
    if (a.t_build > 0) grid.t_build = a.t_build;

    WorkloadSpec probe_spec;
    probe_spec.kind = WorkloadKind::range;
    probe_spec.count = a.probes;
    probe_spec.seed = a.seed;
    Workload probe = gen_queries(probe_spec, pts);

    TuneEval eval = [&](const std::map<std::string, double>& params) {
        uint64_t t0 = wall_nanos();
        IndexConfig cfg = tune_config(a.index, params, pts, probe.boxes, a.seed);
        AnyIndex idx = build_index(cfg, pts);
        TuneOutcome out;
        out.build_cost = double(wall_nanos() - t0);
        IndexHandle h = idx.handle();
        uint64_t io = 0;
        for (const MBR& b : probe.boxes) {
            QueryResult q = range_query(h, b);
            io += q.leaf_io + q.inner_io;
        }
        out.query_cost = double(io) / double(probe.boxes.size());
        return out;
    };

    TuneResult res = grid_tune(grid, eval);
    for (const TuneRecord& rec : res.trace) {
        std::cout << "config";
        for (const auto& [k, v] : rec.config) std::cout << " " << k << "=" << v;
        if (rec.pruned) {
            std::cout << ": pruned\n";
        } else if (rec.over_limit) {
            std::cout << ": build " << rec.build_cost << " ns over limit\n";
        } else {
            std::cout << ": build " << rec.build_cost << " ns, query "
                      << rec.query_cost << " io/op\n";
        }
    }
    if (!res.found) {
        std::cout << "no configuration finished under the build limit\n";
        return;
    }
    std::cout << "best";
    for (const auto& [k, v] : res.best) std::cout << " " << k << "=" << v;
    std::cout << ": build " << res.build_cost << " ns, query "
              << res.query_cost << " io/op\n";
}

void cmd_report(const ReportArgs& a) {
    std::ifstream in(a.in);
    if (!in) throw io_error("cannot open report: " + a.in);
    nlohmann::ordered_json j;
    try {
        j = nlohmann::ordered_json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw io_error(a.in + ": " + e.what());
    }
    if (!j.is_array()) throw io_error(a.in + ": expected a report array");

    std::string text;
    if (a.format == "json") {
        text = j.dump(2) + "\n";
    } else {
        std::ostringstream csv;
        csv << "index,dataset,workload,metric,value\n";
        for (const auto& o : j)
            for (const auto& [metric, value] : o.at("metrics").items())
                csv << o.at("index").get<std::string>() << ','
                    << o.at("dataset").get<std::string>() << ','
                    << o.at("workload").get<std::string>() << ',' << metric
                    << ',' << value.get<std::string>() << '\n';
        text = csv.str();
    }
    if (a.out.empty()) {
        std::cout << text;
    } else {
        std::ofstream out(a.out);
        if (!out) throw io_error("cannot write: " + a.out);
        out << text;
        out.flush();
        if (!out) throw io_error("write failed: " + a.out);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"disk-block spatial index benchmark"};
    app.require_subcommand(1);

    GenArgs gen;
    CLI::App* g = app.add_subcommand("gen", "generate a synthetic dataset");
    g->add_option("--dist", gen.dist, "uniform, normal, or skewed")
        ->required()
        ->check(CLI::IsMember({"uniform", "normal", "skewed"}));
    g->add_option("--n", gen.n, "point count")->required();
    g->add_option("--seed", gen.seed, "generator seed");
    g->add_option("--out", gen.out, "output CSV path")->required();

    BuildArgs build;
    CLI::App* b = app.add_subcommand("build", "build an index over a dataset");
    b->add_option("--index", build.index, "index variant")
        ->required()
        ->check(CLI::IsMember(index_names()));
    b->add_option("--dataset", build.dataset, "dataset CSV")->required();
    b->add_option("--config", build.config, "index config file");
    b->add_option("--store", build.store, "output store prefix")->required();

    RunArgs run;
    CLI::App* r = app.add_subcommand("run", "run a workload against a store");
    r->add_option("--store", run.store, "store prefix from build")->required();
    r->add_option("--workload", run.workload, "workload file")->required();
    r->add_option("--dataset", run.dataset, "dataset CSV the store was built from")
        ->required();
    r->add_option("--out", run.out, "report base path (.csv/.json)");
    r->add_option("--name", run.name, "dataset label in reports");

    TuneArgs tune;
    CLI::App* t = app.add_subcommand("tune", "grid-search index parameters");
    t->add_option("--index", tune.index, "index variant")
        ->required()
        ->check(CLI::IsMember(index_names()));
    t->add_option("--grid", tune.grid, "grid file")->required();
    t->add_option("--dataset", tune.dataset, "dataset CSV")->required();
    t->add_option("--t-build", tune.t_build, "build budget in ns (overrides file)");
    t->add_option("--seed", tune.seed, "training seed");
    t->add_option("--probes", tune.probes, "probe query count");

    ReportArgs report;
    CLI::App* p = app.add_subcommand("report", "reformat a JSON report");
    p->add_option("--in", report.in, "JSON report from run")->required();
    p->add_option("--format", report.format, "csv or json")
        ->check(CLI::IsMember({"csv", "json"}));
    p->add_option("--out", report.out, "output path (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (g->parsed()) cmd_gen(gen);
        if (b->parsed()) cmd_build(build);
        if (r->parsed()) cmd_run(run);
        if (t->parsed()) cmd_tune(tune);
        if (p->parsed()) cmd_report(report);
    } catch (const config_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
