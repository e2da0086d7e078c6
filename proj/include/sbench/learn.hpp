#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "sbench/bmtree.hpp"
#include "sbench/geometry.hpp"
#include "sbench/policy.hpp"

namespace sbench {

// Shared trainer knobs. Defaults match the documented procedures; every
// value can be overridden per call.
struct TrainConfig {
    double eps_hi = 0.1;        // exploration rate at the first insert
    double eps_lo = 0.01;       // exploration rate at the last insert
    double alpha = 0.01;        // gradient step
    uint32_t probe_every = 64;  // inserts between probe batches
    uint32_t probe_count = 32;  // range queries per probe batch
    uint32_t beam_width = 8;    // curve merge-order beam
    int curve_bits = 8;         // resolution of trained curves
    uint32_t cell_threshold = 400;  // quadtree cell split threshold (points)
    double fill_ratio = 0.4;
};

// Reward evaluation for curve training. measured builds the candidate
// index and runs the training queries; estimated computes expected blocks
// touched analytically from partition boundaries and never executes a
// query against an intermediate index.
enum class RewardMode { measured, estimated };

struct RewardEstimator {
    RewardMode mode = RewardMode::measured;
};

// Epsilon-greedy temporal-difference training of the R-tree policy over
// one insertion build per epoch. Reward is the probe-batch I/O delta
// against a running baseline. If the trained policy does not beat the
// plain R-tree on the probe workload, zero weights are returned, which
// reproduce the R-tree build exactly.
PolicyModel train_rlr(const std::vector<Point>& sample, uint32_t epochs,
                      uint64_t seed, const TrainConfig& cfg = {});

// Greedy-rollout scoring of candidate cuts: each decision scores every
// candidate by the blocks the training workload skips after a depth-d
// greedy continuation, then fits the selector to the scores by least
// squares. depth 0 reduces to the greedy scoring rule.
QdSelector train_qd(const std::vector<Point>& sample,
                    const std::vector<MBR>& training_queries,
                    uint32_t rollout_depth, uint64_t seed = 0,
                    const TrainConfig& cfg = {});

// Block cost of a region under greedy continuation of the cut rule for
// `rem` more levels: the building block of the rollout scores. `charged`
// holds the queries billed to this region; a query pays a side when its
// low edge is <= the cut value (left) or its high edge is beyond it
// (right).
double qd_greedy_cost(const std::vector<Point>& pts, const MBR& region,
                      const std::vector<MBR>& charged,
                      const std::vector<MBR>& all_queries, int depth,
                      uint32_t rem);

// Quadtree-partitions the space on the sample (cells above the density
// threshold split, up to `height` bit levels), then beam-searches the bit
// merge order of each partition, maximizing the chosen reward. Returns
// the stitched piecewise curve.
BMTreeCurve train_bmtree(const std::vector<Point>& sample, uint32_t height,
                         const std::vector<MBR>& training_queries,
                         const RewardEstimator& reward, uint64_t seed,
                         const TrainConfig& cfg = {});

// Grid tuner.
struct TuneParam {
    std::string name;
    std::vector<double> values;
    bool cost_increasing = false;  // epochs, sample size, height
};

struct TuneGrid {
    std::vector<TuneParam> params;
    double t_build = 0;  // build-cost limit
};

struct TuneOutcome {
    double build_cost = 0;
    double query_cost = 0;
};

using TuneEval = std::function<TuneOutcome(const std::map<std::string, double>&)>;

struct TuneRecord {
    std::map<std::string, double> config;
    double build_cost = 0;
    double query_cost = 0;
    bool over_limit = false;
    bool pruned = false;
};

struct TuneResult {
    bool found = false;
    std::map<std::string, double> best;
    double build_cost = 0;
    double query_cost = 0;
    std::vector<TuneRecord> trace;  // every config in generation order
};

// Walks the Cartesian product of the parameter lists in declaration
// order. A config is skipped without evaluation when it dominates an
// already-failed config in every cost-increasing parameter; a config
// whose build cost reaches t_build is discarded. Returns the surviving
// config with the lowest query cost (ties: earliest).
TuneResult grid_tune(const TuneGrid& grid, const TuneEval& eval);

}  // namespace sbench
