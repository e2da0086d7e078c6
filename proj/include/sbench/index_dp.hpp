#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "sbench/policy.hpp"
#include "sbench/storage.hpp"

namespace sbench {

enum class DPVariant { rtree, rstar, rlr };

std::string dp_variant_name(DPVariant v);
DPVariant dp_variant_from_name(const std::string& name);

struct BuildStats {
    uint64_t splits = 0;
    uint64_t adjustments = 0;  // rewrites that modify existing entry rects
    uint32_t height = 0;
    uint64_t page_count = 0;
    uint64_t leaf_count = 0;
};

MBR entries_mbr(const std::vector<Entry>& entries);

// Free split/choose procedures, shared by the tree code and the trainers.
using SplitPair = std::pair<std::vector<Entry>, std::vector<Entry>>;

SplitPair quadratic_split(const std::vector<Entry>& entries, uint32_t min_fill);
SplitPair rstar_split(const std::vector<Entry>& entries, uint32_t min_fill);
// Distributions along the R*-chosen axis; the RLR policy picks among them.
std::vector<SplitPair> rstar_candidate_splits(const std::vector<Entry>& entries,
                                              uint32_t min_fill);

size_t rtree_choose(const std::vector<Entry>& children, const MBR& rect);
size_t rstar_choose_leaf_level(const std::vector<Entry>& children, const MBR& rect);

// Children ranked by the rtree rule: area enlargement, then area, then page id.
std::vector<size_t> rtree_ranked(const std::vector<Entry>& children, const MBR& rect);

// Indices of the 30% of entries farthest from the node MBR center,
// farthest first (the R* reinsertion set).
std::vector<size_t> rstar_reinsert_pick(const std::vector<Entry>& entries);

// Features the RLR policy scores, exposed for the trainer.
void rlr_choose_features(const std::vector<Entry>& children, size_t cand,
                         const MBR& rect, double child_occupancy, double out[4]);
void rlr_split_features(const std::vector<Entry>& entries, const SplitPair& cand,
                        double out[4]);

// Trainer plumbing: sees the feature rows of every rlr decision and the
// policy's pick, returns the candidate to take. For splits, SIZE_MAX
// means the tie fallback (quadratic split); for subtree choice the pick
// indexes the ranked candidate list.
using RlrHook = std::function<size_t(
    bool is_split, const std::vector<std::array<double, 4>>& feats, size_t pick)>;

// Insertion-built R-tree family over standard 4 KB nodes.
class DPIndex {
public:
    explicit DPIndex(DPVariant variant, double fill_ratio = 0.4,
                     PolicyModel policy = {});

    void set_rlr_hook(RlrHook hook) { rlr_hook_ = std::move(hook); }

    void insert(const Point& p);

    BlockStore& store() { return store_; }
    const BlockStore& store() const { return store_; }
    PageId root() const { return root_; }
    bool empty() const { return n_ == 0; }
    uint64_t size() const { return n_; }
    uint32_t height() const { return stats_.height; }
    DPVariant variant() const { return variant_; }
    double fill_ratio() const { return fill_ratio_; }
    const BuildStats& stats() const;

    // Containment, balance, and min-fill checks via raw page walks
    // (no I/O charged). Throws on violation.
    void check_invariants() const;

    void save(const std::string& prefix) const;
    static DPIndex load(const std::string& prefix);
    // Wrap an externally bulk-loaded page image (mapping-based builds).
    static DPIndex adopt(DPVariant variant, double fill_ratio, BlockStore store,
                         PageId root, uint64_t n, const BuildStats& stats);

private:
    struct InsRes {
        MBR mbr;
        bool mbr_changed = false;
        std::optional<Entry> sibling;
    };

    uint32_t min_fill() const;
    size_t choose_child(const NodePage& node, const MBR& rect, uint16_t level);
    SplitPair split_entries(const std::vector<Entry>& entries);
    InsRes insert_rec(PageId id, uint16_t level, const Entry& e,
                      uint16_t target_level);
    void insert_entry(const Entry& e, uint16_t target_level);
    void walk_check(PageId id, uint16_t level, const MBR* expected) const;

    BlockStore store_;
    DPVariant variant_;
    double fill_ratio_;
    PolicyModel policy_;
    RlrHook rlr_hook_;
    PageId root_ = 0;
    uint64_t n_ = 0;
    bool packed_ = false;  // bulk-loaded image, min fill not required
    mutable BuildStats stats_;
    std::set<uint16_t> reinserted_levels_;  // per top-level insert
    std::vector<std::pair<Entry, uint16_t>> pending_reinserts_;
};

}  // namespace sbench
