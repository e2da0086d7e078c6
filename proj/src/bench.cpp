#include "sbench/bench.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "sbench/errors.hpp"
#include "sbench/rng.hpp"
#include "sbench/text.hpp"

namespace sbench {

std::string workload_kind_name(WorkloadKind k) {
    switch (k) {
        case WorkloadKind::point: return "point";
        case WorkloadKind::range: return "range";
        case WorkloadKind::knn: return "knn";
        case WorkloadKind::join: return "join";
        case WorkloadKind::write_only: return "write_only";
        case WorkloadKind::write_heavy: return "write_heavy";
        case WorkloadKind::read_heavy: return "read_heavy";
    }
    throw config_error("bad workload kind");
}

WorkloadKind workload_kind_from_name(const std::string& name) {
    if (name == "point") return WorkloadKind::point;
    if (name == "range") return WorkloadKind::range;
    if (name == "knn") return WorkloadKind::knn;
    if (name == "join") return WorkloadKind::join;
    if (name == "write_only") return WorkloadKind::write_only;
    if (name == "write_heavy") return WorkloadKind::write_heavy;
    if (name == "read_heavy") return WorkloadKind::read_heavy;
    throw config_error("unknown workload kind: " + name);
}

namespace {

MBR dataset_bbox(const std::vector<Point>& pts) {
    MBR r = mbr_of(pts[0]);
    for (const Point& p : pts) r = mbr_union(r, mbr_of(p));
    return r;
}

uint64_t mix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Mixed streams place their minority ops at slots 9 and 19 of each
// 20-op window, so every window keeps the exact 18:2 mix.
bool minority_slot(uint64_t i) { return i % 20 == 9 || i % 20 == 19; }

std::vector<Point> fresh_points(Rng& rng, const MBR& dom, uint64_t n,
                                uint64_t first_id) {
    std::vector<Point> out;
    out.reserve(n);
    for (uint64_t i = 0; i < n; ++i) {
        double x = dom.lo_x + rng.uniform01() * (dom.hi_x - dom.lo_x);
        double y = dom.lo_y + rng.uniform01() * (dom.hi_y - dom.lo_y);
        out.push_back({x, y, first_id + i});
    }
    return out;
}

}  // namespace

Workload gen_queries(const WorkloadSpec& spec,
                     const std::vector<Point>& dataset) {
    if (dataset.empty()) throw config_error("gen_queries needs a nonempty dataset");
    if (spec.count < 1) throw config_error("workload count must be at least 1");
    if (spec.edge_frac <= 0 || spec.aspect_ratio <= 0)
        throw config_error("edge_frac and aspect_ratio must be positive");
    if (spec.kind == WorkloadKind::knn && spec.k < 1)
        throw config_error("knn workload needs k >= 1");

    Workload w;
    w.spec = spec;
    Rng rng(spec.seed);
    MBR dom = dataset_bbox(dataset);
    uint64_t n = dataset.size();

    switch (spec.kind) {
        case WorkloadKind::point:
        case WorkloadKind::knn:
            for (uint64_t i = 0; i < spec.count; ++i)
                w.points.push_back(dataset[rng.uniform_below(n)]);
            break;
        case WorkloadKind::range: {
            double extent = std::max(dom.hi_x - dom.lo_x, dom.hi_y - dom.lo_y);
            double side = spec.edge_frac * extent;
            double bw = side * std::sqrt(spec.aspect_ratio);
            double bh = side / std::sqrt(spec.aspect_ratio);
            for (uint64_t i = 0; i < spec.count; ++i) {
                const Point& c = dataset[rng.uniform_below(n)];
                MBR b{c.x - bw / 2, c.y - bh / 2, c.x + bw / 2, c.y + bh / 2};
                b.lo_x = std::max(b.lo_x, dom.lo_x);
                b.lo_y = std::max(b.lo_y, dom.lo_y);
                b.hi_x = std::min(b.hi_x, dom.hi_x);
                b.hi_y = std::min(b.hi_y, dom.hi_y);
                w.boxes.push_back(b);
            }
            break;
        }
        case WorkloadKind::join:
            break;  // self-joins carry no per-op payload
        case WorkloadKind::write_only:
            w.points = fresh_points(rng, dom, spec.count, n);
            break;
        case WorkloadKind::write_heavy:
        case WorkloadKind::read_heavy: {
            bool heavy_writes = spec.kind == WorkloadKind::write_heavy;
            uint64_t inserts = 0;
            w.ops.reserve(spec.count);
            for (uint64_t i = 0; i < spec.count; ++i) {
                bool ins = heavy_writes ? !minority_slot(i) : minority_slot(i);
                w.ops.push_back(ins ? 1 : 0);
                if (ins) ++inserts;
            }
            w.points = fresh_points(rng, dom, inserts, n);
            for (uint64_t i = 0; i < spec.count - inserts; ++i)
                w.lookups.push_back(dataset[rng.uniform_below(n)]);
            break;
        }
    }
    return w;
}

std::array<uint64_t, 99> percentile_table(std::vector<uint64_t> latencies) {
    if (latencies.empty()) throw config_error("percentiles need at least one op");
    std::sort(latencies.begin(), latencies.end());
    std::array<uint64_t, 99> out{};
    uint64_t n = latencies.size();
    for (uint64_t q = 1; q <= 99; ++q) {
        uint64_t rank = (q * n + 99) / 100;  // ceil(q*n/100), 1-based
        out[q - 1] = latencies[rank - 1];
    }
    return out;
}

RunReport run_workload(IndexHandle& h, const Workload& w) {
    const WorkloadSpec& spec = w.spec;
    if (spec.count < 1) throw config_error("empty op stream");
    bool has_writes = spec.kind == WorkloadKind::write_only ||
                      spec.kind == WorkloadKind::write_heavy ||
                      spec.kind == WorkloadKind::read_heavy;
    if (has_writes && !h.writable())
        throw config_error("write workload on a read-only index");

    RunReport r;
    r.index_name = index_variant_name(h);
    r.workload_name = workload_kind_name(spec.kind);
    uint64_t splits0 = h.stats().splits;
    IOCounters io0 = h.store().io();

    auto add_ids = [&](const std::vector<uint64_t>& ids) {
        r.result_count += ids.size();
        for (uint64_t id : ids) r.result_hash += mix64(id);
    };
    auto run_point = [&](const Point& p) {
        QueryResult q = point_query(h, p);
        r.latencies.push_back(q.wall_nanos);
        add_ids(q.ids);
    };
    auto run_insert = [&](const Point& p) {
        uint64_t t0 = h.now();
        h.insert(p);
        r.latencies.push_back(h.now() - t0);
        ++r.inserts;
    };

    switch (spec.kind) {
        case WorkloadKind::point:
            for (const Point& p : w.points) run_point(p);
            break;
        case WorkloadKind::range:
            for (const MBR& b : w.boxes) {
                QueryResult q = range_query(h, b);
                r.latencies.push_back(q.wall_nanos);
                add_ids(q.ids);
            }
            break;
        case WorkloadKind::knn:
            for (const Point& p : w.points) {
                QueryResult q = knn_query(h, p, spec.k);
                r.latencies.push_back(q.wall_nanos);
                add_ids(q.ids);
            }
            break;
        case WorkloadKind::join:
            for (uint64_t i = 0; i < spec.count; ++i) {
                JoinResult j = spatial_join(h, h, spec.eps);
                r.latencies.push_back(j.wall_nanos);
                r.result_count += j.pairs.size();
                for (const auto& [a, b] : j.pairs)
                    r.result_hash += mix64(mix64(a) * 3 + mix64(b));
            }
            break;
        case WorkloadKind::write_only:
            for (const Point& p : w.points) run_insert(p);
            break;
        case WorkloadKind::write_heavy:
        case WorkloadKind::read_heavy: {
            size_t ip = 0, lp = 0;
            for (uint8_t op : w.ops)
                op ? run_insert(w.points[ip++]) : run_point(w.lookups[lp++]);
            break;
        }
    }

    r.ops = r.latencies.size();
    r.percentiles = percentile_table(r.latencies);
    uint64_t wall_sum = std::accumulate(r.latencies.begin(), r.latencies.end(),
                                        uint64_t{0});
    r.mean_wall = double(wall_sum) / double(r.ops);

    IOCounters io1 = h.store().io();
    r.total_leaf_io = io1.leaf_reads - io0.leaf_reads;
    r.total_inner_io = io1.inner_reads - io0.inner_reads;
    r.total_writes = io1.page_writes - io0.page_writes;
    r.mean_leaf_io = double(r.total_leaf_io) / double(r.ops);
    r.mean_inner_io = double(r.total_inner_io) / double(r.ops);

    r.stats = h.stats();
    r.index_points = h.size();
    r.size_bytes = h.store().size_bytes();
    uint64_t cap = h.kind() == IndexKind::lisa || h.kind() == IndexKind::zm
                       ? kLargeLeafCap
                       : kStandardCap;
    if (r.stats.leaf_count > 0)
        r.utilization =
            double(r.index_points) / double(r.stats.leaf_count * cap);
    r.split_ratio = r.inserts > 0
                        ? double(r.stats.splits - splits0) / double(r.inserts)
                        : 0.0;

    r.provenance["index"] = r.index_name;
    r.provenance["workload"] = r.workload_name;
    r.provenance["count"] = std::to_string(spec.count);
    r.provenance["edge_frac"] = fmt_g17(spec.edge_frac);
    r.provenance["aspect_ratio"] = fmt_g17(spec.aspect_ratio);
    r.provenance["k"] = std::to_string(spec.k);
    r.provenance["eps"] = fmt_g17(spec.eps);
    r.provenance["seed"] = std::to_string(spec.seed);
    if (r.index_name == "rlr")
        r.provenance["rlr_reward"] = "probe-delta stand-in";
    return r;
}

namespace {

// One row per metric, fixed order; wall-time metrics carry the wall_
// prefix so determinism diffs can exclude them.
std::vector<std::pair<std::string, std::string>> metric_rows(
    const RunReport& r) {
    std::vector<std::pair<std::string, std::string>> rows;
    auto u = [&](const std::string& k, uint64_t v) {
        rows.emplace_back(k, std::to_string(v));
    };
    auto d = [&](const std::string& k, double v) {
        rows.emplace_back(k, fmt_g17(v));
    };
    u("ops", r.ops);
    u("result_count", r.result_count);
    u("result_hash", r.result_hash);
    u("total_leaf_io", r.total_leaf_io);
    u("total_inner_io", r.total_inner_io);
    u("total_writes", r.total_writes);
    d("mean_leaf_io", r.mean_leaf_io);
    d("mean_inner_io", r.mean_inner_io);
    d("wall_mean", r.mean_wall);
    u("wall_p1", r.percentiles[0]);
    u("wall_p25", r.percentiles[24]);
    u("wall_p50", r.percentiles[49]);
    u("wall_p75", r.percentiles[74]);
    u("wall_p90", r.percentiles[89]);
    u("wall_p99", r.percentiles[98]);
    u("height", r.stats.height);
    u("page_count", r.stats.page_count);
    u("leaf_count", r.stats.leaf_count);
    u("size_bytes", r.size_bytes);
    u("index_points", r.index_points);
    d("utilization", r.utilization);
    u("splits", r.stats.splits);
    u("adjustments", r.stats.adjustments);
    u("inserts", r.inserts);
    d("split_ratio", r.split_ratio);
    return rows;
}

}  // namespace

std::string report_csv(const std::vector<RunReport>& reports) {
    if (reports.empty()) throw config_error("no reports to emit");
    std::ostringstream out;
    out << "index,dataset,workload,metric,value\n";
    for (const RunReport& r : reports)
        for (const auto& [metric, value] : metric_rows(r))
            out << r.index_name << ',' << r.dataset_name << ','
                << r.workload_name << ',' << metric << ',' << value << '\n';
    return out.str();
}

std::string report_json(const std::vector<RunReport>& reports) {
    if (reports.empty()) throw config_error("no reports to emit");
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const RunReport& r : reports) {
        nlohmann::ordered_json o;
        o["index"] = r.index_name;
        o["dataset"] = r.dataset_name;
        o["workload"] = r.workload_name;
        nlohmann::ordered_json m;
        for (const auto& [metric, value] : metric_rows(r)) m[metric] = value;
        o["metrics"] = m;
        o["percentiles"] = r.percentiles;
        o["provenance"] = r.provenance;
        arr.push_back(o);
    }
    return arr.dump(2) + "\n";
}

void report_emit(const std::vector<RunReport>& reports,
                 const std::string& csv_path, const std::string& json_path) {
    std::ofstream c(csv_path);
    if (!c) throw io_error("cannot write report: " + csv_path);
    c << report_csv(reports);
    c.flush();
    if (!c) throw io_error("write failed: " + csv_path);
    std::ofstream j(json_path);
    if (!j) throw io_error("cannot write report: " + json_path);
    j << report_json(reports);
    j.flush();
    if (!j) throw io_error("write failed: " + json_path);
}

const std::vector<std::string>& index_names() {
    static const std::vector<std::string> names = {
        "rtree", "rstar", "rlr", "kd",     "gkd", "qd",
        "lisa",  "zr",    "zrr", "bmtree", "zm"};
    return names;
}

IndexHandle AnyIndex::handle() {
    if (dp) return IndexHandle(*dp);
    if (sp) return IndexHandle(*sp);
    if (lisa) return IndexHandle(*lisa);
    if (mp) return IndexHandle(*mp);
    if (zm) return IndexHandle(*zm);
    throw config_error("empty index holder");
}

AnyIndex build_index(const IndexConfig& cfg, const std::vector<Point>& points) {
    if (points.empty()) throw config_error("cannot build over an empty dataset");
    AnyIndex out;
    out.name = cfg.name;
    const std::string& n = cfg.name;
    if (n == "rtree" || n == "rstar" || n == "rlr") {
        out.dp = std::make_unique<DPIndex>(dp_variant_from_name(n),
                                           cfg.fill_ratio, cfg.policy);
        for (const Point& p : points) out.dp->insert(p);
    } else if (n == "kd" || n == "gkd" || n == "qd") {
        out.sp = std::make_unique<SPIndex>(sp_variant_from_name(n), points,
                                           cfg.training_queries, cfg.selector);
    } else if (n == "lisa") {
        out.lisa = std::make_unique<LisaIndex>(points, cfg.grid);
    } else if (n == "zr" || n == "zrr" || n == "bmtree") {
        if (n == "bmtree" && cfg.curve.nodes.empty())
            throw config_error("bmtree needs a trained curve");
        out.mp = std::make_unique<MPIndex>(mp_variant_from_name(n), points,
                                           cfg.bits, cfg.curve);
    } else if (n == "zm") {
        out.zm = std::make_unique<ZMIndex>(points, cfg.bits ? cfg.bits : 16,
                                           cfg.models);
    } else {
        throw config_error("unknown index: " + n);
    }
    return out;
}

void save_index(AnyIndex& idx, const std::string& prefix) {
    std::string family;
    if (idx.dp) {
        idx.dp->save(prefix);
        family = "dp";
    } else if (idx.sp) {
        idx.sp->save(prefix);
        family = "sp";
    } else if (idx.lisa) {
        idx.lisa->save(prefix);
        family = "lisa";
    } else if (idx.mp) {
        idx.mp->save(prefix);
        family = "mp";
    } else if (idx.zm) {
        idx.zm->save(prefix);
        family = "zm";
    } else {
        throw config_error("empty index holder");
    }
    sidecar_save(prefix + ".family", {{"family", family}, {"name", idx.name}});
}

AnyIndex load_index(const std::string& prefix) {
    auto kv = sidecar_load(prefix + ".family");
    if (!kv.count("family") || !kv.count("name"))
        throw io_error("malformed index sidecar: " + prefix + ".family");
    AnyIndex out;
    out.name = kv["name"];
    const std::string& family = kv["family"];
    if (family == "dp")
        out.dp = std::make_unique<DPIndex>(DPIndex::load(prefix));
    else if (family == "sp")
        out.sp = std::make_unique<SPIndex>(SPIndex::load(prefix));
    else if (family == "lisa")
        out.lisa = std::make_unique<LisaIndex>(LisaIndex::load(prefix));
    else if (family == "mp")
        out.mp = std::make_unique<MPIndex>(MPIndex::load(prefix));
    else if (family == "zm")
        out.zm = std::make_unique<ZMIndex>(ZMIndex::load(prefix));
    else
        throw io_error("unknown index family: " + family);
    return out;
}

std::string index_variant_name(IndexHandle& h) {
    switch (h.kind()) {
        case IndexKind::dp: return dp_variant_name(h.dp()->variant());
        case IndexKind::sp: return sp_variant_name(h.sp()->variant());
        case IndexKind::lisa: return "lisa";
        case IndexKind::mp: return mp_variant_name(h.mp()->variant());
        case IndexKind::zm: return "zm";
    }
    throw config_error("bad index handle");
}

}  // namespace sbench
