#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cstdio>
#include <cstring>
#include <map>

#include "doctest.h"
#include "sbench/errors.hpp"
#include "sbench/index_dp.hpp"
#include "sbench/rng.hpp"

using namespace sbench;

namespace {

std::vector<Point> uniform_points(uint64_t n, uint64_t seed) {
    Rng rng(seed);
    std::vector<Point> pts;
    pts.reserve(n);
    for (uint64_t i = 0; i < n; ++i)
        pts.push_back({rng.uniform01(), rng.uniform01(), i});
    return pts;
}

bool find_point(const BlockStore& st, PageId id, const Point& p) {
    NodePage n = deserialize_page(st.raw(id));
    if (n.level == 0) {
        for (const Entry& e : n.entries)
            if (e.payload == p.id && e.rect.lo_x == p.x && e.rect.lo_y == p.y)
                return true;
        return false;
    }
    for (const Entry& e : n.entries)
        if (mbr_contains(e.rect, p) && find_point(st, e.payload, p)) return true;
    return false;
}

void collect_leaf_mbrs(const BlockStore& st, PageId id, std::vector<MBR>* out) {
    NodePage n = deserialize_page(st.raw(id));
    if (n.level == 0) {
        out->push_back(entries_mbr(n.entries));
        return;
    }
    for (const Entry& e : n.entries) collect_leaf_mbrs(st, e.payload, out);
}

std::vector<Entry> random_entries(uint64_t n, uint64_t seed) {
    Rng rng(seed);
    std::vector<Entry> es;
    for (uint64_t i = 0; i < n; ++i) {
        double x = rng.uniform01(), y = rng.uniform01();
        es.push_back({{x, y, x + rng.uniform01() * 0.05, y + rng.uniform01() * 0.05}, i});
    }
    return es;
}

std::multiset<uint64_t> payloads(const std::vector<Entry>& es) {
    std::multiset<uint64_t> s;
    for (const Entry& e : es) s.insert(e.payload);
    return s;
}

}  // namespace

TEST_CASE("insert into empty index") {
    DPIndex idx(DPVariant::rtree);
    idx.insert({0.5, 0.5, 42});
    CHECK(idx.height() == 1);
    CHECK(idx.size() == 1);
    NodePage root = deserialize_page(idx.store().raw(idx.root()));
    CHECK(root.level == 0);
    CHECK(root.entries.size() == 1);
    CHECK(root.entries[0].payload == 42);
    idx.check_invariants();
}

TEST_CASE("B+1 inserts cause exactly one split") {
    DPIndex idx(DPVariant::rtree);
    auto pts = uniform_points(kStandardCap + 1, 5);
    for (const Point& p : pts) idx.insert(p);
    CHECK(idx.stats().splits == 1);
    CHECK(idx.height() == 2);
    CHECK(idx.stats().leaf_count == 2);
    idx.check_invariants();
}

TEST_CASE("collinear overflow splits into disjoint halves") {
    for (DPVariant v : {DPVariant::rtree, DPVariant::rstar, DPVariant::rlr}) {
        CAPTURE(dp_variant_name(v));
        DPIndex idx(v);
        for (uint64_t i = 0; i <= kStandardCap; ++i)
            idx.insert({double(i), 0.0, i});
        REQUIRE(idx.height() == 2);
        std::vector<MBR> leaves;
        collect_leaf_mbrs(idx.store(), idx.root(), &leaves);
        REQUIRE(leaves.size() == 2);
        bool disjoint = leaves[0].hi_x < leaves[1].lo_x || leaves[1].hi_x < leaves[0].lo_x;
        CHECK(disjoint);
        idx.check_invariants();
    }
}

TEST_CASE("split procedures preserve the entry multiset and min fill") {
    for (uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
        auto es = random_entries(kStandardCap + 1, seed);
        auto want = payloads(es);
        for (auto split_fn : {quadratic_split, rstar_split}) {
            SplitPair halves = split_fn(es, 40);
            CHECK(halves.first.size() >= 40);
            CHECK(halves.second.size() >= 40);
            CHECK(halves.first.size() + halves.second.size() == es.size());
            auto got = payloads(halves.first);
            for (uint64_t p : payloads(halves.second)) got.insert(p);
            CHECK(got == want);
        }
    }
}

TEST_CASE("rstar split never overlaps more than the quadratic split") {
    // two tight clusters plus an outlier: topological split keeps clusters apart
    std::vector<Entry> es;
    Rng rng(7);
    for (uint64_t i = 0; i < 50; ++i) {
        double x = rng.uniform01() * 0.1, y = rng.uniform01();
        es.push_back({{x, y, x + 0.01, y + 0.01}, i});
    }
    for (uint64_t i = 50; i < 100; ++i) {
        double x = 0.9 + rng.uniform01() * 0.1, y = rng.uniform01();
        es.push_back({{x, y, x + 0.01, y + 0.01}, i});
    }
    es.push_back({{0.5, 0.5, 0.52, 0.52}, 100});

    SplitPair q = quadratic_split(es, 40);
    SplitPair r = rstar_split(es, 40);
    double q_ov = mbr_overlap_area(entries_mbr(q.first), entries_mbr(q.second));
    double r_ov = mbr_overlap_area(entries_mbr(r.first), entries_mbr(r.second));
    CHECK(r_ov <= q_ov + 1e-12);
}

TEST_CASE("choose_subtree rules") {
    std::vector<Entry> kids = {{{0, 0, 1, 1}, 10}, {{2, 2, 3, 3}, 11}};
    MBR inside{0.5, 0.5, 0.5, 0.5};
    CHECK(rtree_choose(kids, inside) == 0);
    CHECK(rstar_choose_leaf_level(kids, inside) == 0);

    // enlargement 0.5 vs 0.1
    std::vector<Entry> pair = {{{0, 0, 1, 1}, 1}, {{1.6, 0, 2.6, 1}, 2}};
    MBR q{1.5, 0.5, 1.5, 0.5};
    CHECK(rtree_choose(pair, q) == 1);

    // exact tie falls to lower page id
    std::vector<Entry> tied = {{{0, 0, 1, 1}, 9}, {{0, 0, 1, 1}, 3}};
    CHECK(tied[rtree_choose(tied, inside)].payload == 3);
}

TEST_CASE("zero-weight rlr reproduces the rtree build page for page") {
    auto pts = uniform_points(3000, 17);
    DPIndex rt(DPVariant::rtree);
    DPIndex rl(DPVariant::rlr);
    for (const Point& p : pts) {
        rt.insert(p);
        rl.insert(p);
    }
    CHECK(rt.root() == rl.root());
    CHECK(rt.height() == rl.height());
    CHECK(rt.stats().splits == rl.stats().splits);
    CHECK(rt.stats().adjustments == rl.stats().adjustments);
    REQUIRE(rt.store().page_count() == rl.store().page_count());
    for (PageId id = 0; id < rt.store().page_count(); ++id)
        CHECK(std::memcmp(rt.store().raw(id), rl.store().raw(id), kPageSize) == 0);
}

TEST_CASE("reinsertion picks the farthest 30 percent") {
    std::vector<Entry> es;
    for (uint64_t i = 0; i < 71; ++i) es.push_back({{0, 0, 0, 0}, i});
    // 30 outliers on an origin-centred square boundary, distance 10 in x or y
    for (uint64_t i = 0; i < 30; ++i) {
        double ang = 2.0 * M_PI * double(i) / 30.0;
        double x = 10.0 * std::cos(ang), y = 10.0 * std::sin(ang);
        es.push_back({{x, y, x, y}, 1000 + i});
    }
    auto picked = rstar_reinsert_pick(es);
    REQUIRE(picked.size() == 30);
    for (size_t idx : picked) CHECK(es[idx].payload >= 1000);
}

TEST_CASE("10k builds: recall, invariants, adjustment ordering") {
    auto pts = uniform_points(10000, 23);
    std::map<std::string, uint64_t> adjustments;
    for (DPVariant v : {DPVariant::rtree, DPVariant::rstar, DPVariant::rlr}) {
        CAPTURE(dp_variant_name(v));
        DPIndex idx(v);
        for (const Point& p : pts) idx.insert(p);
        idx.check_invariants();
        CHECK(idx.size() == pts.size());
        bool all_found = true;
        for (const Point& p : pts)
            if (!find_point(idx.store(), idx.root(), p)) {
                all_found = false;
                break;
            }
        CHECK(all_found);
        adjustments[dp_variant_name(v)] = idx.stats().adjustments;
        CHECK(idx.stats().height >= 3);
    }
    CHECK(adjustments["rstar"] > adjustments["rtree"]);
    CHECK(adjustments["rlr"] >= adjustments["rtree"]);
}

TEST_CASE("nonzero policy still yields a valid tree") {
    PolicyModel pol;
    pol.choose.w[0] = -1.0;
    pol.choose.w[1] = -0.5;
    pol.choose.w[2] = -2.0;
    pol.choose.w[3] = 0.3;
    pol.split.w[0] = -0.7;
    pol.split.w[2] = -1.3;
    pol.split.w[3] = 0.9;
    DPIndex idx(DPVariant::rlr, 0.4, pol);
    auto pts = uniform_points(5000, 31);
    for (const Point& p : pts) idx.insert(p);
    idx.check_invariants();
    for (uint64_t i = 0; i < pts.size(); i += 97)
        CHECK(find_point(idx.store(), idx.root(), pts[i]));
}

TEST_CASE("save and load round trip") {
    auto pts = uniform_points(1000, 41);
    DPIndex idx(DPVariant::rstar);
    for (const Point& p : pts) idx.insert(p);

    idx.save("dp_test_idx");
    DPIndex back = DPIndex::load("dp_test_idx");
    CHECK(back.root() == idx.root());
    CHECK(back.height() == idx.height());
    CHECK(back.stats().splits == idx.stats().splits);
    CHECK(back.stats().adjustments == idx.stats().adjustments);
    CHECK(back.size() == idx.size());
    REQUIRE(back.store().page_count() == idx.store().page_count());
    for (PageId id = 0; id < idx.store().page_count(); ++id)
        CHECK(std::memcmp(back.store().raw(id), idx.store().raw(id), kPageSize) == 0);
    back.check_invariants();
    for (uint64_t i = 0; i < pts.size(); i += 53)
        CHECK(find_point(back.store(), back.root(), pts[i]));
    std::remove("dp_test_idx.pages");
    std::remove("dp_test_idx.meta");
}

TEST_CASE("fill ratio bounds are validated") {
    CHECK_THROWS_AS(DPIndex(DPVariant::rtree, 0.0), config_error);
    CHECK_THROWS_AS(DPIndex(DPVariant::rtree, 0.6), config_error);
}
