#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sbench/index_dp.hpp"
#include "sbench/policy.hpp"
#include "sbench/storage.hpp"

namespace sbench {

enum class SPVariant { kd, gkd, qd };

std::string sp_variant_name(SPVariant v);
SPVariant sp_variant_from_name(const std::string& name);

constexpr uint64_t kLeafFlag = uint64_t{1} << 63;

inline bool payload_is_leaf(uint64_t payload) { return payload & kLeafFlag; }
inline PageId payload_page(uint64_t payload) { return payload & ~kLeafFlag; }

struct CutCandidate {
    int axis = 0;
    double value = 0.0;
    bool from_query = false;
};

// Lower median by coordinate, ties by id.
double lower_median(std::span<const Point> pts, int axis);

// Query-boundary cuts strictly inside the region plus the kd median of
// kd_axis. Candidates that would leave one side empty are dropped.
std::vector<CutCandidate> cut_candidates(std::span<const Point> pts,
                                         const MBR& region, int kd_axis,
                                         const std::vector<MBR>& queries);

// Expected leaf blocks accessed by `queries` if the region were cut at c:
// sum over queries of ceil(side_n/B) per intersected side.
double cut_cost(std::span<const Point> pts, const MBR& region,
                const CutCandidate& c, const std::vector<MBR>& queries);

// The gkd rule: minimum cut_cost, ties by distance to the kd median.
size_t greedy_cut_index(const std::vector<CutCandidate>& cands,
                        std::span<const Point> pts, const MBR& region,
                        const std::vector<MBR>& queries);

// Features the qd selector scores: provenance, normalized blocks-skipped
// estimate, balance ratio.
void qd_cut_features(const std::vector<CutCandidate>& cands, size_t idx,
                     std::span<const Point> pts, const MBR& region,
                     const std::vector<MBR>& queries, double out[3]);

// Space-partitioning tree over standard 4 KB pages: binary cut nodes with
// absolute child regions, point leaves of capacity B.
class SPIndex {
public:
    SPIndex(SPVariant variant, const std::vector<Point>& points,
            std::vector<MBR> training_queries = {}, QdSelector selector = {});

    void insert(const Point& p);

    BlockStore& store() { return store_; }
    const BlockStore& store() const { return store_; }
    PageId root() const { return root_; }
    bool root_is_leaf() const { return stats_.height == 1; }
    uint64_t size() const { return n_; }
    uint32_t height() const { return stats_.height; }
    SPVariant variant() const { return variant_; }
    const BuildStats& stats() const;
    const MBR& domain() const { return domain_; }
    const std::vector<MBR>& training_queries() const { return training_queries_; }

    // Region partition, capacity, and point-containment checks on raw pages.
    void check_invariants() const;

    void save(const std::string& prefix) const;
    static SPIndex load(const std::string& prefix);

private:
    SPIndex(SPVariant variant, std::vector<MBR> queries, QdSelector selector);

    CutCandidate choose_cut(std::span<const Point> pts, const MBR& region,
                            int depth) const;
    uint64_t build_rec(std::vector<Point>& pts, size_t lo, size_t hi,
                       const MBR& region, int depth);
    void walk_check(PageId id, bool is_leaf, const MBR& region, uint32_t depth,
                    uint64_t* leaves, uint32_t* max_depth) const;

    BlockStore store_;
    SPVariant variant_;
    QdSelector selector_;
    std::vector<MBR> training_queries_;
    PageId root_ = 0;
    MBR domain_;
    uint64_t n_ = 0;
    mutable BuildStats stats_;
};

}  // namespace sbench
