#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sbench/index_dp.hpp"
#include "sbench/storage.hpp"

namespace sbench {

// Grid + learned shard mapping over large leaves: equi-depth GxG grid,
// mapped value M(p) = cell_index + normalized x offset inside the cell,
// points sorted by M and cut into shards of 10,000 stored as 59-page runs.
// The shard model is the monotone piecewise-linear interpolation of
// (shard start M, shard id); every evaluation charges one inner I/O.
class LisaIndex {
public:
    struct OverflowRun {
        PageId first = 0;
        uint64_t count = 0;
        std::vector<std::pair<double, double>> page_ranges;  // in-memory skip table
    };
    struct Shard {
        PageId first = 0;
        uint64_t count = 0;
        uint64_t sorted_count = 0;  // prefix kept in M order since build
        double m_lo = 0, m_hi = 0;
        std::vector<std::pair<double, double>> page_ranges;
        std::vector<OverflowRun> overflow;
    };

    explicit LisaIndex(const std::vector<Point>& points, uint32_t grid_override = 0);

    void insert(const Point& p);

    double map_value(const Point& p) const;  // M(p); pure arithmetic
    double model_eval(double m);             // charges 1 inner I/O
    size_t shard_of(double m);               // floor(model_eval), clamped

    // Candidate shard ids; model evaluations are charged.
    std::vector<size_t> lookup_point(const Point& p);
    std::vector<size_t> lookup_range(const MBR& box);

    // Full query paths (shard candidates, page reads, filtering).
    std::vector<uint64_t> point_query_ids(const Point& p);
    std::vector<uint64_t> range_query_ids(const MBR& box);
    std::vector<Point> range_query_points(const MBR& box);

    BlockStore& store() { return store_; }
    const BlockStore& store() const { return store_; }
    uint64_t size() const { return n_; }
    uint32_t grid() const { return grid_; }
    size_t shard_count() const { return shards_.size(); }
    const Shard& shard(size_t k) const { return shards_[k]; }
    const std::vector<double>& model_knots() const { return shard_starts_; }
    const BuildStats& stats() const;
    const MBR& domain() const { return domain_; }

    void check_invariants() const;

    void save(const std::string& prefix) const;
    static LisaIndex load(const std::string& prefix);

private:
    LisaIndex() = default;

    uint32_t cell_x(double x) const;
    uint32_t cell_y(double y) const;
    double x_offset(uint32_t cx, double x) const;
    void append_to_run(PageId first, uint64_t* count,
                       std::vector<std::pair<double, double>>* ranges,
                       const Point& p, double m);
    void collect_pages(const Shard& s, double m_lo, double m_hi,
                       std::vector<PageId>* out) const;
    void rebuild_page_ranges();

    BlockStore store_;
    uint32_t grid_ = 0;
    MBR domain_;
    std::vector<double> bx_, by_;          // G-1 internal boundaries per axis
    std::vector<double> shard_starts_;     // model knots, one per shard
    std::vector<Shard> shards_;
    uint64_t n_ = 0;
    mutable BuildStats stats_;
};

}  // namespace sbench
