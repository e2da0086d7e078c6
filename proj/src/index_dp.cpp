#include "sbench/index_dp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "sbench/errors.hpp"

namespace sbench {

namespace {

constexpr double kRstarReinsertFrac = 0.3;

bool mbr_equal(const MBR& a, const MBR& b) {
    return a.lo_x == b.lo_x && a.lo_y == b.lo_y && a.hi_x == b.hi_x &&
           a.hi_y == b.hi_y;
}

double enlargement(const MBR& a, const MBR& b) {
    return mbr_area(mbr_union(a, b)) - mbr_area(a);
}

Point mbr_center(const MBR& r) {
    return {(r.lo_x + r.hi_x) / 2.0, (r.lo_y + r.hi_y) / 2.0, 0};
}

}  // namespace

std::string dp_variant_name(DPVariant v) {
    switch (v) {
        case DPVariant::rtree: return "rtree";
        case DPVariant::rstar: return "rstar";
        case DPVariant::rlr: return "rlr";
    }
    return "?";
}

DPVariant dp_variant_from_name(const std::string& name) {
    if (name == "rtree") return DPVariant::rtree;
    if (name == "rstar") return DPVariant::rstar;
    if (name == "rlr") return DPVariant::rlr;
    throw config_error("unknown DP variant: " + name);
}

MBR entries_mbr(const std::vector<Entry>& entries) {
    MBR m = entries.front().rect;
    for (size_t i = 1; i < entries.size(); ++i) m = mbr_union(m, entries[i].rect);
    return m;
}

namespace {

// Area-first enlargement with a margin tie-break, so degenerate
// (zero-area) entry sets still split spatially.
struct Enl {
    double area;
    double margin;
};

Enl enl2(const MBR& m, const MBR& r) {
    MBR u = mbr_union(m, r);
    return {mbr_area(u) - mbr_area(m), mbr_margin(u) - mbr_margin(m)};
}

bool enl_less(const Enl& a, const Enl& b) {
    if (a.area != b.area) return a.area < b.area;
    return a.margin < b.margin;
}

}  // namespace

SplitPair quadratic_split(const std::vector<Entry>& entries, uint32_t min_fill) {
    size_t n = entries.size();
    size_t s1 = 0, s2 = 1;
    Enl worst{-std::numeric_limits<double>::infinity(), 0};
    for (size_t i = 0; i + 1 < n; ++i)
        for (size_t j = i + 1; j < n; ++j) {
            MBR u = mbr_union(entries[i].rect, entries[j].rect);
            Enl d{mbr_area(u) - mbr_area(entries[i].rect) - mbr_area(entries[j].rect),
                  mbr_margin(u) - mbr_margin(entries[i].rect) -
                      mbr_margin(entries[j].rect)};
            if (enl_less(worst, d)) {
                worst = d;
                s1 = i;
                s2 = j;
            }
        }

    std::vector<bool> assigned(n, false);
    std::vector<Entry> g1{entries[s1]}, g2{entries[s2]};
    MBR m1 = entries[s1].rect, m2 = entries[s2].rect;
    assigned[s1] = assigned[s2] = true;
    size_t remaining = n - 2;

    auto take_all = [&](std::vector<Entry>& g, MBR& m) {
        for (size_t i = 0; i < n; ++i)
            if (!assigned[i]) {
                g.push_back(entries[i]);
                m = mbr_union(m, entries[i].rect);
                assigned[i] = true;
            }
        remaining = 0;
    };

    while (remaining > 0) {
        if (g1.size() + remaining <= min_fill) {
            take_all(g1, m1);
            break;
        }
        if (g2.size() + remaining <= min_fill) {
            take_all(g2, m2);
            break;
        }
        size_t best = n;
        Enl diff_best{-1.0, -1.0};
        Enl bd1{0, 0}, bd2{0, 0};
        for (size_t i = 0; i < n; ++i) {
            if (assigned[i]) continue;
            Enl d1 = enl2(m1, entries[i].rect);
            Enl d2 = enl2(m2, entries[i].rect);
            Enl diff{std::abs(d1.area - d2.area), std::abs(d1.margin - d2.margin)};
            if (enl_less(diff_best, diff)) {
                diff_best = diff;
                best = i;
                bd1 = d1;
                bd2 = d2;
            }
        }
        bool to_g1;
        if (bd1.area != bd2.area || bd1.margin != bd2.margin) {
            to_g1 = enl_less(bd1, bd2);
        } else if (mbr_area(m1) != mbr_area(m2)) {
            to_g1 = mbr_area(m1) < mbr_area(m2);
        } else if (mbr_margin(m1) != mbr_margin(m2)) {
            to_g1 = mbr_margin(m1) < mbr_margin(m2);
        } else {
            to_g1 = g1.size() <= g2.size();
        }
        if (to_g1) {
            g1.push_back(entries[best]);
            m1 = mbr_union(m1, entries[best].rect);
        } else {
            g2.push_back(entries[best]);
            m2 = mbr_union(m2, entries[best].rect);
        }
        assigned[best] = true;
        --remaining;
    }
    return {std::move(g1), std::move(g2)};
}

namespace {

// Distributions for one axis, both sort orders, split positions in
// [min_fill, n - min_fill]. Returns the summed margins.
double axis_distributions(const std::vector<Entry>& entries, int axis,
                          uint32_t min_fill, std::vector<SplitPair>* out) {
    size_t n = entries.size();
    std::vector<Entry> by_lo = entries, by_hi = entries;
    auto lo_of = [axis](const Entry& e) { return axis == 0 ? e.rect.lo_x : e.rect.lo_y; };
    auto hi_of = [axis](const Entry& e) { return axis == 0 ? e.rect.hi_x : e.rect.hi_y; };
    std::sort(by_lo.begin(), by_lo.end(), [&](const Entry& a, const Entry& b) {
        if (lo_of(a) != lo_of(b)) return lo_of(a) < lo_of(b);
        if (hi_of(a) != hi_of(b)) return hi_of(a) < hi_of(b);
        return a.payload < b.payload;
    });
    std::sort(by_hi.begin(), by_hi.end(), [&](const Entry& a, const Entry& b) {
        if (hi_of(a) != hi_of(b)) return hi_of(a) < hi_of(b);
        if (lo_of(a) != lo_of(b)) return lo_of(a) < lo_of(b);
        return a.payload < b.payload;
    });

    double margin_sum = 0.0;
    for (const std::vector<Entry>* sorted : {&by_lo, &by_hi}) {
        std::vector<MBR> pre(n), suf(n);
        pre[0] = (*sorted)[0].rect;
        for (size_t i = 1; i < n; ++i) pre[i] = mbr_union(pre[i - 1], (*sorted)[i].rect);
        suf[n - 1] = (*sorted)[n - 1].rect;
        for (size_t i = n - 1; i-- > 0;) suf[i] = mbr_union(suf[i + 1], (*sorted)[i].rect);
        for (size_t k = min_fill; k + min_fill <= n; ++k) {
            margin_sum += mbr_margin(pre[k - 1]) + mbr_margin(suf[k]);
            if (out) {
                SplitPair p;
                p.first.assign(sorted->begin(), sorted->begin() + k);
                p.second.assign(sorted->begin() + k, sorted->end());
                out->push_back(std::move(p));
            }
        }
    }
    return margin_sum;
}

int rstar_split_axis(const std::vector<Entry>& entries, uint32_t min_fill) {
    double mx = axis_distributions(entries, 0, min_fill, nullptr);
    double my = axis_distributions(entries, 1, min_fill, nullptr);
    return my < mx ? 1 : 0;
}

}  // namespace

std::vector<SplitPair> rstar_candidate_splits(const std::vector<Entry>& entries,
                                              uint32_t min_fill) {
    int axis = rstar_split_axis(entries, min_fill);
    std::vector<SplitPair> out;
    axis_distributions(entries, axis, min_fill, &out);
    return out;
}

SplitPair rstar_split(const std::vector<Entry>& entries, uint32_t min_fill) {
    std::vector<SplitPair> cands = rstar_candidate_splits(entries, min_fill);
    size_t best = 0;
    double best_overlap = std::numeric_limits<double>::infinity();
    double best_area = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < cands.size(); ++i) {
        MBR b1 = entries_mbr(cands[i].first), b2 = entries_mbr(cands[i].second);
        double ov = mbr_overlap_area(b1, b2);
        double ar = mbr_area(b1) + mbr_area(b2);
        if (ov < best_overlap || (ov == best_overlap && ar < best_area)) {
            best = i;
            best_overlap = ov;
            best_area = ar;
        }
    }
    return cands[best];
}

std::vector<size_t> rtree_ranked(const std::vector<Entry>& children, const MBR& rect) {
    std::vector<size_t> idx(children.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::vector<double> enl(children.size()), area(children.size());
    for (size_t i = 0; i < children.size(); ++i) {
        enl[i] = enlargement(children[i].rect, rect);
        area[i] = mbr_area(children[i].rect);
    }
    std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
        if (enl[a] != enl[b]) return enl[a] < enl[b];
        if (area[a] != area[b]) return area[a] < area[b];
        return children[a].payload < children[b].payload;
    });
    return idx;
}

size_t rtree_choose(const std::vector<Entry>& children, const MBR& rect) {
    return rtree_ranked(children, rect)[0];
}

size_t rstar_choose_leaf_level(const std::vector<Entry>& children, const MBR& rect) {
    size_t best = 0;
    double best_ov = std::numeric_limits<double>::infinity();
    double best_enl = std::numeric_limits<double>::infinity();
    double best_area = std::numeric_limits<double>::infinity();
    uint64_t best_payload = 0;
    for (size_t i = 0; i < children.size(); ++i) {
        MBR grown = mbr_union(children[i].rect, rect);
        double ov = 0.0;
        for (size_t j = 0; j < children.size(); ++j) {
            if (j == i) continue;
            ov += mbr_overlap_area(grown, children[j].rect) -
                  mbr_overlap_area(children[i].rect, children[j].rect);
        }
        double enl = enlargement(children[i].rect, rect);
        double area = mbr_area(children[i].rect);
        bool better;
        if (ov != best_ov)
            better = ov < best_ov;
        else if (enl != best_enl)
            better = enl < best_enl;
        else if (area != best_area)
            better = area < best_area;
        else
            better = children[i].payload < best_payload;
        if (i == 0 || better) {
            best = i;
            best_ov = ov;
            best_enl = enl;
            best_area = area;
            best_payload = children[i].payload;
        }
    }
    return best;
}

std::vector<size_t> rstar_reinsert_pick(const std::vector<Entry>& entries) {
    Point center = mbr_center(entries_mbr(entries));
    std::vector<size_t> idx(entries.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::vector<double> d(entries.size());
    for (size_t i = 0; i < entries.size(); ++i)
        d[i] = dist(mbr_center(entries[i].rect), center);
    std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
        if (d[a] != d[b]) return d[a] > d[b];
        return entries[a].payload < entries[b].payload;
    });
    size_t take = static_cast<size_t>(kRstarReinsertFrac * double(entries.size()));
    idx.resize(take);
    return idx;
}

void rlr_choose_features(const std::vector<Entry>& children, size_t cand,
                         const MBR& rect, double child_occupancy, double out[4]) {
    const MBR& cur = children[cand].rect;
    MBR grown = mbr_union(cur, rect);
    out[0] = mbr_area(grown) - mbr_area(cur);
    out[1] = mbr_margin(grown) - mbr_margin(cur);
    double ov = 0.0;
    for (size_t j = 0; j < children.size(); ++j) {
        if (j == cand) continue;
        ov += mbr_overlap_area(grown, children[j].rect) -
              mbr_overlap_area(cur, children[j].rect);
    }
    out[2] = ov;
    out[3] = child_occupancy;
}

void rlr_split_features(const std::vector<Entry>& entries, const SplitPair& cand,
                        double out[4]) {
    MBR orig = entries_mbr(entries);
    MBR b1 = entries_mbr(cand.first), b2 = entries_mbr(cand.second);
    out[0] = mbr_area(b1) + mbr_area(b2) - mbr_area(orig);
    out[1] = mbr_margin(b1) + mbr_margin(b2) - mbr_margin(orig);
    out[2] = mbr_overlap_area(b1, b2);
    out[3] = double(std::min(cand.first.size(), cand.second.size())) /
             double(entries.size());
}

DPIndex::DPIndex(DPVariant variant, double fill_ratio, PolicyModel policy)
    : variant_(variant), fill_ratio_(fill_ratio), policy_(std::move(policy)) {
    if (fill_ratio_ <= 0.0 || fill_ratio_ > 0.5)
        throw config_error("fill_ratio must be in (0, 0.5]");
}

uint32_t DPIndex::min_fill() const {
    return static_cast<uint32_t>(std::ceil(fill_ratio_ * kStandardCap));
}

const BuildStats& DPIndex::stats() const {
    stats_.page_count = store_.page_count();
    return stats_;
}

void DPIndex::insert(const Point& p) {
    reinserted_levels_.clear();
    Entry e{mbr_of(p), p.id};
    if (n_ == 0) {
        NodePage leaf;
        leaf.level = 0;
        leaf.entries.push_back(e);
        root_ = store_.write_page(leaf);
        stats_.height = 1;
        stats_.leaf_count = 1;
        n_ = 1;
        return;
    }
    insert_entry(e, 0);
    n_ += 1;
    for (size_t i = 0; i < pending_reinserts_.size(); ++i) {
        auto item = pending_reinserts_[i];
        insert_entry(item.first, item.second);
    }
    pending_reinserts_.clear();
}

void DPIndex::insert_entry(const Entry& e, uint16_t target_level) {
    uint16_t root_level = static_cast<uint16_t>(stats_.height - 1);
    InsRes r = insert_rec(root_, root_level, e, target_level);
    if (r.sibling) {
        NodePage new_root;
        new_root.level = static_cast<uint16_t>(root_level + 1);
        new_root.entries.push_back(Entry{r.mbr, root_});
        new_root.entries.push_back(*r.sibling);
        root_ = store_.write_page(new_root);
        stats_.height += 1;
    }
}

size_t DPIndex::choose_child(const NodePage& node, const MBR& rect, uint16_t level) {
    switch (variant_) {
        case DPVariant::rtree:
            return rtree_choose(node.entries, rect);
        case DPVariant::rstar:
            return level == 1 ? rstar_choose_leaf_level(node.entries, rect)
                              : rtree_choose(node.entries, rect);
        case DPVariant::rlr: {
            std::vector<size_t> ranked = rtree_ranked(node.entries, rect);
            size_t k = std::min<size_t>(2, ranked.size());
            if (k < 2) return ranked[0];
            std::vector<std::array<double, 4>> feats(k);
            for (size_t i = 0; i < k; ++i) {
                size_t ci = ranked[i];
                IoClass cls = level - 1 > 0 ? IoClass::inner : IoClass::leaf;
                NodePage child = store_.read_page(node.entries[ci].payload, cls);
                double occ = double(child.count()) / double(kStandardCap);
                rlr_choose_features(node.entries, ci, rect, occ, feats[i].data());
            }
            size_t pick = 0;
            double best = policy_.choose.score(feats[0].data());
            bool tie = false;
            for (size_t i = 1; i < k; ++i) {
                double s = policy_.choose.score(feats[i].data());
                if (s > best) {
                    best = s;
                    pick = i;
                    tie = false;
                } else if (s == best) {
                    tie = true;
                }
            }
            if (tie) pick = 0;  // ranked head is the rtree rule's choice
            if (rlr_hook_) pick = rlr_hook_(false, feats, pick);
            return ranked[pick];
        }
    }
    return 0;
}

SplitPair DPIndex::split_entries(const std::vector<Entry>& entries) {
    switch (variant_) {
        case DPVariant::rtree:
            return quadratic_split(entries, min_fill());
        case DPVariant::rstar:
            return rstar_split(entries, min_fill());
        case DPVariant::rlr: {
            std::vector<SplitPair> cands = rstar_candidate_splits(entries, min_fill());
            if (cands.empty()) return quadratic_split(entries, min_fill());
            std::vector<std::array<double, 4>> feats(cands.size());
            for (size_t i = 0; i < cands.size(); ++i)
                rlr_split_features(entries, cands[i], feats[i].data());
            size_t pick = 0;
            double best = policy_.split.score(feats[0].data());
            bool tie = false;
            for (size_t i = 1; i < cands.size(); ++i) {
                double s = policy_.split.score(feats[i].data());
                if (s > best) {
                    best = s;
                    pick = i;
                    tie = false;
                } else if (s == best) {
                    tie = true;
                }
            }
            if (tie) pick = SIZE_MAX;  // fall back to the rtree split
            if (rlr_hook_) pick = rlr_hook_(true, feats, pick);
            if (pick == SIZE_MAX) return quadratic_split(entries, min_fill());
            return cands[pick];
        }
    }
    return {};
}

DPIndex::InsRes DPIndex::insert_rec(PageId id, uint16_t level, const Entry& e,
                                    uint16_t target_level) {
    NodePage node = store_.read_page(id, level > 0 ? IoClass::inner : IoClass::leaf);
    MBR before = entries_mbr(node.entries);
    bool dirty = false, rect_adjusted = false;

    if (level == target_level) {
        node.entries.push_back(e);
        dirty = true;
    } else {
        size_t ci = choose_child(node, e.rect, level);
        InsRes child = insert_rec(node.entries[ci].payload,
                                  static_cast<uint16_t>(level - 1), e, target_level);
        if (child.mbr_changed) {
            node.entries[ci].rect = child.mbr;
            dirty = true;
            rect_adjusted = true;
        }
        if (child.sibling) {
            node.entries.push_back(*child.sibling);
            dirty = true;
        }
    }

    if (node.entries.size() > kStandardCap) {
        bool can_reinsert = variant_ == DPVariant::rstar && id != root_ &&
                            !reinserted_levels_.count(level);
        if (can_reinsert) {
            reinserted_levels_.insert(level);
            std::vector<size_t> picked = rstar_reinsert_pick(node.entries);
            std::vector<bool> removed(node.entries.size(), false);
            for (size_t i : picked) {
                pending_reinserts_.emplace_back(node.entries[i], level);
                removed[i] = true;
            }
            std::vector<Entry> kept;
            kept.reserve(node.entries.size() - picked.size());
            for (size_t i = 0; i < node.entries.size(); ++i)
                if (!removed[i]) kept.push_back(node.entries[i]);
            node.entries = std::move(kept);
            store_.rewrite_page(id, node);
            stats_.adjustments += 1;
            MBR after = entries_mbr(node.entries);
            return {after, !mbr_equal(after, before), std::nullopt};
        }

        SplitPair halves = split_entries(node.entries);
        stats_.splits += 1;
        NodePage left = node;
        left.entries = halves.first;
        store_.rewrite_page(id, left);
        stats_.adjustments += 1;
        NodePage right = node;
        right.entries = halves.second;
        PageId rid = store_.write_page(right);
        if (level == 0) stats_.leaf_count += 1;
        MBR lm = entries_mbr(halves.first);
        MBR rm = entries_mbr(halves.second);
        return {lm, true, Entry{rm, rid}};
    }

    if (dirty) {
        store_.rewrite_page(id, node);
        if (rect_adjusted) stats_.adjustments += 1;
    }
    MBR after = entries_mbr(node.entries);
    return {after, !mbr_equal(after, before), std::nullopt};
}

void DPIndex::walk_check(PageId id, uint16_t level, const MBR* expected) const {
    NodePage node = deserialize_page(store_.raw(id));
    if (node.level != level) {
        // level mismatch anywhere means some leaf sits at the wrong depth
        std::ostringstream os;
        os << "page " << id << " level " << node.level << ", expected " << level;
        throw error(os.str());
    }
    if (node.cls != NodeClass::standard) throw error("DP node with wrong class");
    if (node.entries.empty()) throw error("empty DP node");
    if (node.entries.size() > kStandardCap) throw error("overfull DP node");
    if (!packed_ && id != root_ && node.entries.size() < min_fill())
        throw error("underfull DP node");  // packed builds may end with a short tail
    if (expected && !mbr_equal(entries_mbr(node.entries), *expected))
        throw error("containment violation: parent rect != child union");
    if (level == 0) return;
    for (const Entry& ent : node.entries)
        walk_check(ent.payload, static_cast<uint16_t>(level - 1), &ent.rect);
}

void DPIndex::check_invariants() const {
    if (n_ == 0) return;
    walk_check(root_, static_cast<uint16_t>(stats_.height - 1), nullptr);
}

void DPIndex::save(const std::string& prefix) const {
    store_.save(prefix + ".pages");
    std::map<std::string, std::string> kv;
    kv["kind"] = "dp";
    kv["variant"] = dp_variant_name(variant_);
    kv["fill_ratio"] = std::to_string(fill_ratio_);
    kv["root"] = std::to_string(root_);
    kv["n"] = std::to_string(n_);
    kv["height"] = std::to_string(stats_.height);
    kv["splits"] = std::to_string(stats_.splits);
    kv["adjustments"] = std::to_string(stats_.adjustments);
    kv["leaf_count"] = std::to_string(stats_.leaf_count);
    sidecar_save(prefix + ".meta", kv);
}

DPIndex DPIndex::adopt(DPVariant variant, double fill_ratio, BlockStore store,
                       PageId root, uint64_t n, const BuildStats& stats) {
    DPIndex idx(variant, fill_ratio);
    idx.store_ = std::move(store);
    idx.root_ = root;
    idx.n_ = n;
    idx.stats_ = stats;
    idx.packed_ = true;
    return idx;
}

DPIndex DPIndex::load(const std::string& prefix) {
    auto kv = sidecar_load(prefix + ".meta");
    if (kv.at("kind") != "dp") throw config_error("sidecar is not a DP index");
    DPIndex idx(dp_variant_from_name(kv.at("variant")),
                std::stod(kv.at("fill_ratio")));
    idx.store_ = BlockStore::load(prefix + ".pages");
    idx.root_ = std::stoull(kv.at("root"));
    idx.n_ = std::stoull(kv.at("n"));
    idx.stats_.height = static_cast<uint32_t>(std::stoul(kv.at("height")));
    idx.stats_.splits = std::stoull(kv.at("splits"));
    idx.stats_.adjustments = std::stoull(kv.at("adjustments"));
    idx.stats_.leaf_count = std::stoull(kv.at("leaf_count"));
    return idx;
}

}  // namespace sbench
