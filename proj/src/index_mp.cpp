#include "sbench/index_mp.hpp"

#include <algorithm>
#include <cmath>

#include "sbench/errors.hpp"
#include "sbench/text.hpp"

namespace sbench {

namespace {

uint32_t log2_ceil(uint64_t n) {
    uint32_t b = 1;
    while ((uint64_t(1) << b) < n) ++b;
    return b;
}

}  // namespace

std::string mp_variant_name(MPVariant v) {
    switch (v) {
        case MPVariant::zr: return "zr";
        case MPVariant::zrr: return "zrr";
        case MPVariant::bmtree: return "bmtree";
    }
    return "?";
}

MPVariant mp_variant_from_name(const std::string& name) {
    if (name == "zr") return MPVariant::zr;
    if (name == "zrr") return MPVariant::zrr;
    if (name == "bmtree") return MPVariant::bmtree;
    throw config_error("unknown MP variant: " + name);
}

MPIndex::MPIndex(MPVariant variant, DPIndex core)
    : variant_(variant), core_(std::move(core)) {}

MPIndex::MPIndex(MPVariant variant, const std::vector<Point>& points,
                 uint32_t bits, BMTreeCurve curve)
    : variant_(variant), curve_(std::move(curve)), core_(DPVariant::rtree, 0.4) {
    if (points.empty()) throw config_error("MP build needs a nonempty point list");
    if (variant_ == MPVariant::bmtree && curve_.nodes.empty())
        curve_ = bmtree_interleave(bits ? int(bits) : 8);
    switch (variant_) {
        case MPVariant::zr: bits_ = bits ? bits : 16; break;
        case MPVariant::zrr: bits_ = bits ? bits : log2_ceil(points.size()); break;
        case MPVariant::bmtree: bits_ = uint32_t(curve_.bits); break;
    }
    domain_ = mbr_of(points.front());
    for (const Point& p : points) domain_ = mbr_union(domain_, mbr_of(p));

    std::vector<std::pair<uint64_t, Point>> keyed;
    keyed.reserve(points.size());
    if (variant_ == MPVariant::zrr) {
        for (const RankedPoint& r : rank_space(points))
            keyed.push_back({z_interleave(uint32_t(r.rank_x), uint32_t(r.rank_y),
                                          int(bits_)),
                             r.p});
    } else {
        for (const Point& p : points) keyed.push_back({build_key(p), p});
    }
    std::sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first < b.first;
        return a.second.id < b.second.id;
    });

    BlockStore store;
    std::vector<Entry> level;
    for (size_t at = 0; at < keyed.size(); at += kStandardCap) {
        NodePage leaf;
        leaf.level = 0;
        size_t end = std::min(keyed.size(), at + kStandardCap);
        for (size_t i = at; i < end; ++i)
            leaf.entries.push_back({mbr_of(keyed[i].second), keyed[i].second.id});
        PageId id = store.write_page(leaf);
        level.push_back({entries_mbr(leaf.entries), id});
    }
    BuildStats stats;
    stats.leaf_count = level.size();
    uint16_t h = 1;
    while (level.size() > 1) {
        std::vector<Entry> next;
        for (size_t at = 0; at < level.size(); at += kStandardCap) {
            NodePage node;
            node.level = h;
            size_t end = std::min(level.size(), at + kStandardCap);
            node.entries.assign(level.begin() + at, level.begin() + end);
            PageId id = store.write_page(node);
            next.push_back({entries_mbr(node.entries), id});
        }
        level = std::move(next);
        ++h;
    }
    stats.height = h;
    core_ = DPIndex::adopt(DPVariant::rtree, 0.4, std::move(store),
                           level.front().payload, points.size(), stats);
}

uint64_t MPIndex::build_key(const Point& p) const {
    switch (variant_) {
        case MPVariant::zr: return z_encode(p, int(bits_), domain_).value;
        case MPVariant::bmtree: return bmtree_eval(curve_, p, domain_).value;
        case MPVariant::zrr:
            throw config_error("rank-space keys exist only for the build set");
    }
    return 0;
}

void MPIndex::insert(const Point& p) { core_.insert(p); }

void MPIndex::save(const std::string& prefix) const {
    core_.store().save(prefix + ".pages");
    if (variant_ == MPVariant::bmtree) bmtree_save(curve_, prefix + ".curve");
    std::map<std::string, std::string> kv;
    kv["kind"] = "mp";
    kv["variant"] = mp_variant_name(variant_);
    kv["bits"] = std::to_string(bits_);
    kv["domain"] = fmt_mbr(domain_);
    kv["root"] = std::to_string(core_.root());
    kv["n"] = std::to_string(core_.size());
    const BuildStats& st = core_.stats();
    kv["height"] = std::to_string(st.height);
    kv["splits"] = std::to_string(st.splits);
    kv["adjustments"] = std::to_string(st.adjustments);
    kv["leaf_count"] = std::to_string(st.leaf_count);
    sidecar_save(prefix + ".meta", kv);
}

MPIndex MPIndex::load(const std::string& prefix) {
    auto kv = sidecar_load(prefix + ".meta");
    if (kv.at("kind") != "mp") throw config_error("sidecar is not an MP index");
    BuildStats stats;
    stats.height = uint32_t(std::stoul(kv.at("height")));
    stats.splits = std::stoull(kv.at("splits"));
    stats.adjustments = std::stoull(kv.at("adjustments"));
    stats.leaf_count = std::stoull(kv.at("leaf_count"));
    DPIndex core = DPIndex::adopt(DPVariant::rtree, 0.4,
                                  BlockStore::load(prefix + ".pages"),
                                  std::stoull(kv.at("root")),
                                  std::stoull(kv.at("n")), stats);
    MPIndex idx(mp_variant_from_name(kv.at("variant")), std::move(core));
    idx.bits_ = uint32_t(std::stoul(kv.at("bits")));
    idx.domain_ = parse_mbr(kv.at("domain"));
    if (idx.variant_ == MPVariant::bmtree)
        idx.curve_ = bmtree_load(prefix + ".curve");
    return idx;
}

}  // namespace sbench
