#include "sbench/index_sp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "sbench/errors.hpp"
#include "sbench/text.hpp"

namespace sbench {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double coord(const Point& p, int axis) { return axis == 0 ? p.x : p.y; }

double lo_of(const MBR& r, int axis) { return axis == 0 ? r.lo_x : r.lo_y; }
double hi_of(const MBR& r, int axis) { return axis == 0 ? r.hi_x : r.hi_y; }

size_t count_le(std::span<const Point> pts, int axis, double v) {
    size_t n = 0;
    for (const Point& p : pts)
        if (coord(p, axis) <= v) ++n;
    return n;
}

double blocks(size_t n) { return std::ceil(double(n) / double(kStandardCap)); }

MBR whole_plane() { return {-kInf, -kInf, kInf, kInf}; }

}  // namespace

std::string sp_variant_name(SPVariant v) {
    switch (v) {
        case SPVariant::kd: return "kd";
        case SPVariant::gkd: return "gkd";
        case SPVariant::qd: return "qd";
    }
    return "?";
}

SPVariant sp_variant_from_name(const std::string& name) {
    if (name == "kd") return SPVariant::kd;
    if (name == "gkd") return SPVariant::gkd;
    if (name == "qd") return SPVariant::qd;
    throw config_error("unknown SP variant: " + name);
}

double lower_median(std::span<const Point> pts, int axis) {
    std::vector<size_t> idx(pts.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    size_t mid = (pts.size() - 1) / 2;
    std::nth_element(idx.begin(), idx.begin() + mid, idx.end(),
                     [&](size_t a, size_t b) {
                         double ca = coord(pts[a], axis), cb = coord(pts[b], axis);
                         if (ca != cb) return ca < cb;
                         return pts[a].id < pts[b].id;
                     });
    return coord(pts[idx[mid]], axis);
}

std::vector<CutCandidate> cut_candidates(std::span<const Point> pts,
                                         const MBR& region, int kd_axis,
                                         const std::vector<MBR>& queries) {
    std::vector<CutCandidate> out;
    std::set<std::pair<int, double>> seen;
    auto try_add = [&](int axis, double v, bool from_query) {
        if (!(lo_of(region, axis) < v && v < hi_of(region, axis))) return;
        if (!seen.insert({axis, v}).second) return;
        size_t nl = count_le(pts, axis, v);
        if (nl == 0 || nl == pts.size()) return;
        out.push_back({axis, v, from_query});
    };
    for (const MBR& q : queries) {
        if (!mbr_intersects(q, region)) continue;
        try_add(0, q.lo_x, true);
        try_add(0, q.hi_x, true);
        try_add(1, q.lo_y, true);
        try_add(1, q.hi_y, true);
    }
    try_add(kd_axis, lower_median(pts, kd_axis), false);
    return out;
}

double cut_cost(std::span<const Point> pts, const MBR& region,
                const CutCandidate& c, const std::vector<MBR>& queries) {
    size_t nl = count_le(pts, c.axis, c.value);
    size_t nr = pts.size() - nl;
    double bl = blocks(nl), br = blocks(nr);
    double cost = 0.0;
    for (const MBR& q : queries) {
        if (!mbr_intersects(q, region)) continue;
        if (lo_of(q, c.axis) <= c.value) cost += bl;
        if (hi_of(q, c.axis) > c.value) cost += br;
    }
    return cost;
}

size_t greedy_cut_index(const std::vector<CutCandidate>& cands,
                        std::span<const Point> pts, const MBR& region,
                        const std::vector<MBR>& queries) {
    double med[2] = {lower_median(pts, 0), lower_median(pts, 1)};
    size_t best = 0;
    double best_cost = kInf, best_med_dist = kInf;
    for (size_t i = 0; i < cands.size(); ++i) {
        double cost = cut_cost(pts, region, cands[i], queries);
        double md = std::abs(cands[i].value - med[cands[i].axis]);
        if (cost < best_cost || (cost == best_cost && md < best_med_dist)) {
            best = i;
            best_cost = cost;
            best_med_dist = md;
        }
    }
    return best;
}

void qd_cut_features(const std::vector<CutCandidate>& cands, size_t idx,
                     std::span<const Point> pts, const MBR& region,
                     const std::vector<MBR>& queries, double out[3]) {
    const CutCandidate& c = cands[idx];
    size_t hit = 0;
    for (const MBR& q : queries)
        if (mbr_intersects(q, region)) ++hit;
    double baseline = double(hit) * blocks(pts.size());
    double cost = cut_cost(pts, region, c, queries);
    size_t nl = count_le(pts, c.axis, c.value);
    out[0] = c.from_query ? 1.0 : 0.0;
    out[1] = baseline > 0 ? (baseline - cost) / baseline : 0.0;
    out[2] = double(std::min(nl, pts.size() - nl)) / double(pts.size());
}

SPIndex::SPIndex(SPVariant variant, std::vector<MBR> queries, QdSelector selector)
    : variant_(variant), selector_(selector), training_queries_(std::move(queries)) {}

SPIndex::SPIndex(SPVariant variant, const std::vector<Point>& points,
                 std::vector<MBR> training_queries, QdSelector selector)
    : SPIndex(variant, std::move(training_queries), selector) {
    if (points.empty()) throw config_error("SP build needs a nonempty point list");
    if (variant_ != SPVariant::kd && training_queries_.empty())
        throw config_error(sp_variant_name(variant_) +
                           " needs at least one training query");
    domain_ = mbr_of(points.front());
    for (const Point& p : points) domain_ = mbr_union(domain_, mbr_of(p));
    std::vector<Point> pts = points;
    uint64_t payload = build_rec(pts, 0, pts.size(), whole_plane(), 0);
    root_ = payload_page(payload);
    n_ = points.size();
}

CutCandidate SPIndex::choose_cut(std::span<const Point> pts, const MBR& region,
                                 int depth) const {
    int kd_axis = depth % 2;
    auto median_cut = [&]() -> CutCandidate {
        for (int a : {kd_axis, 1 - kd_axis}) {
            double m = lower_median(pts, a);
            size_t nl = count_le(pts, a, m);
            if (nl > 0 && nl < pts.size()) return {a, m, false};
        }
        throw config_error("cannot split a region holding more than B duplicates");
    };
    if (variant_ == SPVariant::kd) return median_cut();

    std::vector<CutCandidate> cands =
        cut_candidates(pts, region, kd_axis, training_queries_);
    if (cands.empty()) return median_cut();
    if (variant_ == SPVariant::gkd)
        return cands[greedy_cut_index(cands, pts, region, training_queries_)];

    // qd: selector argmax, exact tie falls back to the greedy rule
    double best = 0.0;
    size_t best_idx = 0;
    bool tie = false;
    for (size_t i = 0; i < cands.size(); ++i) {
        double f[3];
        qd_cut_features(cands, i, pts, region, training_queries_, f);
        double s = selector_.score(f);
        if (i == 0 || s > best) {
            best = s;
            best_idx = i;
            tie = false;
        } else if (s == best) {
            tie = true;
        }
    }
    if (tie)
        return cands[greedy_cut_index(cands, pts, region, training_queries_)];
    return cands[best_idx];
}

uint64_t SPIndex::build_rec(std::vector<Point>& pts, size_t lo, size_t hi,
                            const MBR& region, int depth) {
    size_t n = hi - lo;
    if (n <= kStandardCap) {
        NodePage leaf;
        leaf.level = 0;
        for (size_t i = lo; i < hi; ++i)
            leaf.entries.push_back({mbr_of(pts[i]), pts[i].id});
        PageId id = store_.write_page(leaf);
        stats_.leaf_count += 1;
        stats_.height = std::max(stats_.height, uint32_t(depth + 1));
        return id | kLeafFlag;
    }
    std::span<const Point> span(pts.data() + lo, n);
    CutCandidate c = choose_cut(span, region, depth);
    auto mid_it = std::stable_partition(
        pts.begin() + lo, pts.begin() + hi,
        [&](const Point& p) { return coord(p, c.axis) <= c.value; });
    size_t mid = size_t(mid_it - pts.begin());

    MBR left_region = region, right_region = region;
    if (c.axis == 0) {
        left_region.hi_x = c.value;
        right_region.lo_x = c.value;
    } else {
        left_region.hi_y = c.value;
        right_region.lo_y = c.value;
    }
    uint64_t left = build_rec(pts, lo, mid, left_region, depth + 1);
    uint64_t right = build_rec(pts, mid, hi, right_region, depth + 1);

    NodePage cut;
    cut.level = 1;
    cut.aux = uint64_t(c.axis);
    cut.entries.push_back({left_region, left});
    cut.entries.push_back({right_region, right});
    return store_.write_page(cut);
}

void SPIndex::insert(const Point& p) {
    domain_ = mbr_union(domain_, mbr_of(p));
    PageId cur = root_;
    bool cur_is_leaf = root_is_leaf();
    MBR region = whole_plane();
    int depth = 0;
    PageId parent = 0;
    bool has_parent = false;
    size_t parent_side = 0;
    NodePage parent_node;

    while (!cur_is_leaf) {
        NodePage node = store_.read_page(cur, IoClass::inner);
        int axis = int(node.aux);
        double t = hi_of(node.entries[0].rect, axis);
        size_t side = coord(p, axis) <= t ? 0 : 1;
        parent = cur;
        parent_node = node;
        parent_side = side;
        has_parent = true;
        region = node.entries[side].rect;
        cur_is_leaf = payload_is_leaf(node.entries[side].payload);
        cur = payload_page(node.entries[side].payload);
        ++depth;
    }

    NodePage leaf = store_.read_page(cur, IoClass::leaf);
    leaf.entries.push_back({mbr_of(p), p.id});
    if (leaf.entries.size() <= kStandardCap) {
        store_.rewrite_page(cur, leaf);
        n_ += 1;
        return;
    }

    std::vector<Point> pts;
    pts.reserve(leaf.entries.size());
    for (const Entry& e : leaf.entries)
        pts.push_back({e.rect.lo_x, e.rect.lo_y, e.payload});
    CutCandidate c = choose_cut(pts, region, depth);
    auto mid_it = std::stable_partition(pts.begin(), pts.end(), [&](const Point& q) {
        return coord(q, c.axis) <= c.value;
    });
    size_t mid = size_t(mid_it - pts.begin());

    MBR left_region = region, right_region = region;
    if (c.axis == 0) {
        left_region.hi_x = c.value;
        right_region.lo_x = c.value;
    } else {
        left_region.hi_y = c.value;
        right_region.lo_y = c.value;
    }
    NodePage left;
    left.level = 0;
    for (size_t i = 0; i < mid; ++i)
        left.entries.push_back({mbr_of(pts[i]), pts[i].id});
    NodePage right;
    right.level = 0;
    for (size_t i = mid; i < pts.size(); ++i)
        right.entries.push_back({mbr_of(pts[i]), pts[i].id});

    store_.rewrite_page(cur, left);
    PageId right_id = store_.write_page(right);
    NodePage cut;
    cut.level = 1;
    cut.aux = uint64_t(c.axis);
    cut.entries.push_back({left_region, cur | kLeafFlag});
    cut.entries.push_back({right_region, right_id | kLeafFlag});
    PageId cut_id = store_.write_page(cut);

    if (has_parent) {
        parent_node.entries[parent_side].payload = cut_id;
        store_.rewrite_page(parent, parent_node);
    } else {
        root_ = cut_id;
    }
    stats_.splits += 1;
    stats_.leaf_count += 1;
    stats_.height = std::max(stats_.height, uint32_t(depth + 2));
    n_ += 1;
}

const BuildStats& SPIndex::stats() const {
    stats_.page_count = store_.page_count();
    return stats_;
}

void SPIndex::walk_check(PageId id, bool is_leaf, const MBR& region,
                         uint32_t depth, uint64_t* leaves,
                         uint32_t* max_depth) const {
    NodePage node = deserialize_page(store_.raw(id));
    *max_depth = std::max(*max_depth, depth + 1);
    if (is_leaf) {
        if (node.level != 0) throw error("SP leaf with nonzero level");
        if (node.entries.empty()) throw error("empty SP leaf");
        if (node.entries.size() > kStandardCap) throw error("overfull SP leaf");
        for (const Entry& e : node.entries)
            if (!mbr_contains(region, Point{e.rect.lo_x, e.rect.lo_y, 0}))
                throw error("SP point outside its leaf region");
        *leaves += 1;
        return;
    }
    if (node.entries.size() != 2) throw error("SP cut node without 2 children");
    int axis = int(node.aux);
    if (axis != 0 && axis != 1) throw error("SP cut node with bad axis");
    const MBR& l = node.entries[0].rect;
    const MBR& r = node.entries[1].rect;
    double t = hi_of(l, axis);
    if (t != lo_of(r, axis)) throw error("SP children do not share the cut line");
    MBR expect_l = region, expect_r = region;
    if (axis == 0) {
        expect_l.hi_x = t;
        expect_r.lo_x = t;
    } else {
        expect_l.hi_y = t;
        expect_r.lo_y = t;
    }
    auto same = [](const MBR& a, const MBR& b) {
        return a.lo_x == b.lo_x && a.lo_y == b.lo_y && a.hi_x == b.hi_x &&
               a.hi_y == b.hi_y;
    };
    if (!same(l, expect_l) || !same(r, expect_r))
        throw error("SP child regions do not partition the parent region");
    walk_check(payload_page(node.entries[0].payload),
               payload_is_leaf(node.entries[0].payload), l, depth + 1, leaves,
               max_depth);
    walk_check(payload_page(node.entries[1].payload),
               payload_is_leaf(node.entries[1].payload), r, depth + 1, leaves,
               max_depth);
}

void SPIndex::check_invariants() const {
    uint64_t leaves = 0;
    uint32_t max_depth = 0;
    walk_check(root_, root_is_leaf(), whole_plane(), 0, &leaves, &max_depth);
    if (leaves != stats_.leaf_count) throw error("SP leaf count mismatch");
    if (max_depth != stats_.height) throw error("SP height mismatch");
}

void SPIndex::save(const std::string& prefix) const {
    store_.save(prefix + ".pages");
    std::map<std::string, std::string> kv;
    kv["kind"] = "sp";
    kv["variant"] = sp_variant_name(variant_);
    kv["root"] = std::to_string(root_);
    kv["n"] = std::to_string(n_);
    kv["height"] = std::to_string(stats_.height);
    kv["splits"] = std::to_string(stats_.splits);
    kv["leaf_count"] = std::to_string(stats_.leaf_count);
    kv["domain"] = fmt_mbr(domain_);
    kv["nq"] = std::to_string(training_queries_.size());
    for (size_t i = 0; i < training_queries_.size(); ++i)
        kv["q." + std::to_string(i)] = fmt_mbr(training_queries_[i]);
    for (int i = 0; i < 3; ++i)
        kv["sel.w" + std::to_string(i)] = fmt_g17(selector_.w[i]);
    kv["sel.bias"] = fmt_g17(selector_.bias);
    kv["sel.depth"] = std::to_string(selector_.rollout_depth);
    sidecar_save(prefix + ".meta", kv);
}

SPIndex SPIndex::load(const std::string& prefix) {
    auto kv = sidecar_load(prefix + ".meta");
    if (kv.at("kind") != "sp") throw config_error("sidecar is not an SP index");
    std::vector<MBR> queries;
    size_t nq = std::stoull(kv.at("nq"));
    for (size_t i = 0; i < nq; ++i)
        queries.push_back(parse_mbr(kv.at("q." + std::to_string(i))));
    QdSelector sel;
    for (int i = 0; i < 3; ++i) sel.w[i] = std::stod(kv.at("sel.w" + std::to_string(i)));
    sel.bias = std::stod(kv.at("sel.bias"));
    sel.rollout_depth = uint32_t(std::stoul(kv.at("sel.depth")));

    SPIndex idx(sp_variant_from_name(kv.at("variant")), std::move(queries), sel);
    idx.store_ = BlockStore::load(prefix + ".pages");
    idx.root_ = std::stoull(kv.at("root"));
    idx.n_ = std::stoull(kv.at("n"));
    idx.stats_.height = uint32_t(std::stoul(kv.at("height")));
    idx.stats_.splits = std::stoull(kv.at("splits"));
    idx.stats_.leaf_count = std::stoull(kv.at("leaf_count"));
    idx.domain_ = parse_mbr(kv.at("domain"));
    return idx;
}

}  // namespace sbench
