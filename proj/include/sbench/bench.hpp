#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "sbench/bmtree.hpp"
#include "sbench/dataset.hpp"
#include "sbench/policy.hpp"
#include "sbench/query.hpp"

namespace sbench {

enum class WorkloadKind {
    point,
    range,
    knn,
    join,
    write_only,
    write_heavy,
    read_heavy
};

std::string workload_kind_name(WorkloadKind k);
WorkloadKind workload_kind_from_name(const std::string& name);

struct WorkloadSpec {
    WorkloadKind kind = WorkloadKind::point;
    uint64_t count = 0;
    double edge_frac = 0.001;  // range edge as a fraction of the domain extent
    double aspect_ratio = 1.0;
    uint32_t k = 25;
    double eps = 0.0;
    uint64_t seed = 0;
};

// Op payloads materialized from (spec, dataset). Query centers are sampled
// from the dataset; write streams are fresh points over the data domain,
// applied after the initial build. Mixed streams fix the insert:lookup mix
// in every window of 20 ops (write_heavy 18:2, read_heavy 2:18).
struct Workload {
    WorkloadSpec spec;
    std::vector<Point> points;   // query centers, or insert payloads
    std::vector<Point> lookups;  // mixed streams: point-lookup payloads
    std::vector<MBR> boxes;      // range queries
    std::vector<uint8_t> ops;    // mixed streams: 1 = insert, 0 = lookup
};

Workload gen_queries(const WorkloadSpec& spec,
                     const std::vector<Point>& dataset);

struct RunReport {
    std::string index_name;
    std::string dataset_name;
    std::string workload_name;
    uint64_t ops = 0;
    std::vector<uint64_t> latencies;         // per-op wall nanos, op order
    std::array<uint64_t, 99> percentiles{};  // P1..P99, nearest rank
    double mean_wall = 0;
    uint64_t total_leaf_io = 0;
    uint64_t total_inner_io = 0;
    uint64_t total_writes = 0;
    double mean_leaf_io = 0;
    double mean_inner_io = 0;
    uint64_t result_count = 0;
    uint64_t result_hash = 0;  // order-insensitive over result ids
    BuildStats stats;
    uint64_t index_points = 0;
    uint64_t size_bytes = 0;
    double utilization = 0;  // points over total leaf capacity
    uint64_t inserts = 0;
    double split_ratio = 0;  // splits during the stream / inserts
    std::map<std::string, std::string> provenance;
};

// Nearest-rank percentiles: P_q = sorted[ceil(q * n / 100) - 1].
std::array<uint64_t, 99> percentile_table(std::vector<uint64_t> latencies);

RunReport run_workload(IndexHandle& h, const Workload& w);

// Long-format CSV (index,dataset,workload,metric,value) and a JSON mirror
// carrying the full percentile arrays.
std::string report_csv(const std::vector<RunReport>& reports);
std::string report_json(const std::vector<RunReport>& reports);
void report_emit(const std::vector<RunReport>& reports,
                 const std::string& csv_path, const std::string& json_path);

// Build-any-variant plumbing shared by the CLI, the tuner, and tests.

struct IndexConfig {
    std::string name;     // rtree rstar rlr kd gkd qd lisa zr zrr bmtree zm
    double fill_ratio = 0.4;
    uint32_t bits = 0;    // mapping curves and zm; 0 picks the default
    uint32_t grid = 0;    // lisa grid override
    uint32_t models = 0;  // zm stage-2 model count
    PolicyModel policy;
    QdSelector selector;
    BMTreeCurve curve;
    std::vector<MBR> training_queries;
};

const std::vector<std::string>& index_names();

// Owns whichever index the config names; handle() views it.
struct AnyIndex {
    std::unique_ptr<DPIndex> dp;
    std::unique_ptr<SPIndex> sp;
    std::unique_ptr<LisaIndex> lisa;
    std::unique_ptr<MPIndex> mp;
    std::unique_ptr<ZMIndex> zm;
    std::string name;

    IndexHandle handle();
};

AnyIndex build_index(const IndexConfig& cfg, const std::vector<Point>& points);
void save_index(AnyIndex& idx, const std::string& prefix);
AnyIndex load_index(const std::string& prefix);

std::string index_variant_name(IndexHandle& h);

}  // namespace sbench
