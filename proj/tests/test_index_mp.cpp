#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cstring>
#include <vector>

#include "sbench/errors.hpp"
#include "sbench/index_mp.hpp"
#include "sbench/rng.hpp"
#include "sbench/zm.hpp"

using namespace sbench;

namespace {

std::vector<Point> random_points(size_t n, uint64_t seed) {
    Rng rng(seed);
    std::vector<Point> pts;
    pts.reserve(n);
    for (size_t i = 0; i < n; ++i)
        pts.push_back({rng.uniform01(), rng.uniform01(), i});
    return pts;
}

void tree_range(const BlockStore& st, PageId id, uint16_t level, const MBR& box,
                std::vector<uint64_t>* out) {
    NodePage node = deserialize_page(st.raw(id));
    if (level == 0) {
        for (const Entry& e : node.entries)
            if (mbr_contains(box, {e.rect.lo_x, e.rect.lo_y, 0}))
                out->push_back(e.payload);
        return;
    }
    for (const Entry& e : node.entries)
        if (mbr_intersects(e.rect, box))
            tree_range(st, e.payload, uint16_t(level - 1), box, out);
}

std::vector<uint64_t> mp_range(const MPIndex& idx, const MBR& box) {
    std::vector<uint64_t> out;
    tree_range(idx.store(), idx.root(), uint16_t(idx.height() - 1), box, &out);
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<uint64_t> brute_range(const std::vector<Point>& pts, const MBR& box) {
    std::vector<uint64_t> out;
    for (const Point& p : pts)
        if (mbr_contains(box, p)) out.push_back(p.id);
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<uint64_t> brute_knn(const std::vector<Point>& pts, const Point& q,
                                uint32_t k) {
    std::vector<Point> c = pts;
    std::sort(c.begin(), c.end(), [&](const Point& a, const Point& b) {
        double da = dist(a, q), db = dist(b, q);
        if (da != db) return da < db;
        return a.id < b.id;
    });
    std::vector<uint64_t> out;
    for (uint32_t i = 0; i < k && i < c.size(); ++i) out.push_back(c[i].id);
    return out;
}

bool stores_equal(const BlockStore& a, const BlockStore& b) {
    if (a.page_count() != b.page_count()) return false;
    for (PageId i = 0; i < a.page_count(); ++i)
        if (std::memcmp(a.raw(i), b.raw(i), kPageSize) != 0) return false;
    return true;
}

}  // namespace

TEST_CASE("bulk load packs full leaves in key order") {
    auto pts = random_points(250, 211);
    MPIndex idx(MPVariant::zr, pts);
    CHECK(idx.bits() == 16);
    CHECK(idx.height() == 2);
    CHECK(idx.stats().leaf_count == 3);
    CHECK(idx.stats().splits == 0);
    CHECK(idx.stats().adjustments == 0);
    idx.check_invariants();

    std::vector<std::pair<uint64_t, uint64_t>> keyed;  // (key, id)
    for (const Point& p : pts) keyed.push_back({idx.build_key(p), p.id});
    std::sort(keyed.begin(), keyed.end());
    size_t at = 0;
    for (PageId leaf = 0; leaf < 3; ++leaf) {
        NodePage page = deserialize_page(idx.store().raw(leaf));
        CHECK(page.level == 0);
        CHECK(page.entries.size() == (leaf < 2 ? 100 : 50));
        for (const Entry& e : page.entries) {
            CHECK(e.payload == keyed[at].second);
            CHECK(e.rect.lo_x == e.rect.hi_x);
            ++at;
        }
    }
}

TEST_CASE("packing arithmetic at one hundred thousand points") {
    auto pts = random_points(100000, 223);
    MPIndex idx(MPVariant::zr, pts);
    CHECK(idx.stats().leaf_count == 1000);
    CHECK(idx.height() == 3);
    CHECK(idx.stats().page_count == 1011);  // 1000 + 10 + 1
    double util = double(idx.size()) /
                  (double(kStandardCap) * double(idx.stats().leaf_count));
    CHECK(util >= 1.0 - double(kStandardCap - 1) / double(idx.size()));
    idx.check_invariants();
}

TEST_CASE("rank space keys use ceil log2 n bits and keep leaf order") {
    Rng rng(227);
    std::vector<Point> pts;
    for (size_t i = 0; i < 300; ++i)
        pts.push_back({double(i % 10), rng.uniform01(), i});  // heavy x ties
    MPIndex idx(MPVariant::zrr, pts);
    CHECK(idx.bits() == 9);  // 2^8 < 300 <= 2^9
    auto ranked = rank_space(pts);
    std::vector<std::pair<uint64_t, uint64_t>> keyed;
    for (const RankedPoint& r : ranked)
        keyed.push_back({z_interleave(uint32_t(r.rank_x), uint32_t(r.rank_y), 9),
                         r.p.id});
    std::sort(keyed.begin(), keyed.end());
    size_t at = 0;
    for (PageId leaf = 0; leaf < 3; ++leaf) {
        NodePage page = deserialize_page(idx.store().raw(leaf));
        for (const Entry& e : page.entries) CHECK(e.payload == keyed[at++].second);
    }
    CHECK(at == 300);
    idx.check_invariants();
}

TEST_CASE("default bmtree curve reproduces plain interleaving") {
    auto pts = random_points(500, 229);
    MPIndex bm(MPVariant::bmtree, pts);
    CHECK(bm.bits() == 8);
    MPIndex zr(MPVariant::zr, pts, 8);
    CHECK(stores_equal(bm.store(), zr.store()));
}

TEST_CASE("a y-major curve reorders the leaves") {
    auto pts = random_points(400, 233);
    BMTreeCurve ymajor = bmtree_uniform(
        8, {{1, 1}, {1, 2}, {1, 3}, {1, 4}, {1, 5}, {1, 6}, {1, 7}, {1, 8},
            {0, 1}, {0, 2}, {0, 3}, {0, 4}, {0, 5}, {0, 6}, {0, 7}, {0, 8}});
    MPIndex idx(MPVariant::bmtree, pts, 0, ymajor);
    std::vector<std::pair<uint64_t, uint64_t>> keyed;
    for (const Point& p : pts)
        keyed.push_back({bmtree_eval(ymajor, p, idx.domain()).value, p.id});
    std::sort(keyed.begin(), keyed.end());
    size_t at = 0;
    for (PageId leaf = 0; leaf < 4; ++leaf) {
        NodePage page = deserialize_page(idx.store().raw(leaf));
        for (const Entry& e : page.entries) CHECK(e.payload == keyed[at++].second);
    }
    MPIndex zr(MPVariant::zr, pts, 8);
    CHECK_FALSE(stores_equal(idx.store(), zr.store()));
}

TEST_CASE("inserting into a full packed leaf splits immediately") {
    auto pts = random_points(300, 239);
    MPIndex idx(MPVariant::zr, pts);
    CHECK(idx.stats().leaf_count == 3);
    CHECK(idx.stats().splits == 0);
    idx.insert({0.5, 0.5, 10000});
    CHECK(idx.stats().splits == 1);  // every leaf was at fill 1.0
    CHECK(idx.stats().leaf_count == 4);
    idx.check_invariants();
    auto extra = random_points(500, 241);
    std::vector<Point> all = pts;
    all.push_back({0.5, 0.5, 10000});
    for (size_t i = 0; i < extra.size(); ++i) {
        Point p = extra[i];
        p.id = 20000 + i;
        idx.insert(p);
        all.push_back(p);
    }
    idx.check_invariants();
    MBR q{0.2, 0.2, 0.7, 0.7};
    CHECK(mp_range(idx, q) == brute_range(all, q));
}

TEST_CASE("a partial last leaf absorbs an insert without splitting") {
    std::vector<Point> pts;
    for (size_t i = 0; i < 150; ++i)
        pts.push_back({double(i), double(i % 7), i});
    MPIndex idx(MPVariant::zr, pts);
    CHECK(idx.stats().leaf_count == 2);
    NodePage last = deserialize_page(idx.store().raw(1));
    REQUIRE(last.entries.size() == 50);
    MBR inside = entries_mbr(last.entries);
    Point p{(inside.lo_x + inside.hi_x) / 2, (inside.lo_y + inside.hi_y) / 2, 9999};
    idx.insert(p);
    CHECK(idx.stats().splits == 0);
    CHECK(idx.size() == 151);
    idx.check_invariants();
}

TEST_CASE("write-heavy inserts keep the mapping trees consistent") {
    auto pts = random_points(2000, 251);
    for (MPVariant v : {MPVariant::zr, MPVariant::zrr, MPVariant::bmtree}) {
        MPIndex idx(v, pts);
        std::vector<Point> all = pts;
        auto extra = random_points(2000, 257);
        for (size_t i = 0; i < extra.size(); ++i) {
            Point p = extra[i];
            p.id = 50000 + i;
            idx.insert(p);
            all.push_back(p);
        }
        CHECK(idx.stats().splits > 0);
        idx.check_invariants();
        MBR q{0.1, 0.3, 0.45, 0.8};
        CHECK(mp_range(idx, q) == brute_range(all, q));
    }
}

TEST_CASE("range results agree across every mapping variant") {
    auto pts = random_points(5000, 263);
    MPIndex zr(MPVariant::zr, pts);
    MPIndex zrr(MPVariant::zrr, pts);
    MPIndex bm(MPVariant::bmtree, pts);
    ZMIndex zm(pts);
    Rng rng(269);
    for (int i = 0; i < 12; ++i) {
        MBR q{rng.uniform01() * 0.9, rng.uniform01() * 0.9, 0, 0};
        q.hi_x = q.lo_x + 0.01 + rng.uniform01() * 0.3;
        q.hi_y = q.lo_y + 0.01 + rng.uniform01() * 0.3;
        auto want = brute_range(pts, q);
        CHECK(mp_range(zr, q) == want);
        CHECK(mp_range(zrr, q) == want);
        CHECK(mp_range(bm, q) == want);
        CHECK(zm.range_query_ids(q) == want);
    }
}

TEST_CASE("mp save and load round trip is byte exact") {
    auto pts = random_points(1200, 271);
    BMTreeCurve ymajor = bmtree_uniform(
        4, {{1, 1}, {1, 2}, {1, 3}, {1, 4}, {0, 1}, {0, 2}, {0, 3}, {0, 4}});
    MPIndex idx(MPVariant::bmtree, pts, 0, ymajor);
    for (int i = 0; i < 50; ++i) {
        Point p = random_points(1, 273 + i)[0];
        p.id = 90000 + i;
        idx.insert(p);
    }
    idx.save("/tmp/mp_rt");
    MPIndex back = MPIndex::load("/tmp/mp_rt");
    CHECK(stores_equal(idx.store(), back.store()));
    CHECK(back.variant() == MPVariant::bmtree);
    CHECK(back.root() == idx.root());
    CHECK(back.size() == idx.size());
    CHECK(back.bits() == idx.bits());
    CHECK(back.curve().nodes.size() == idx.curve().nodes.size());
    CHECK(back.stats().splits == idx.stats().splits);
    back.check_invariants();
    MBR q{0.25, 0.25, 0.75, 0.75};
    CHECK(mp_range(back, q) == mp_range(idx, q));
}

TEST_CASE("two point rmi admits a perfect linear fit") {
    std::vector<Point> pts = {{0.0, 0.0, 0}, {1.0, 0.0, 1}};
    ZMIndex idx(pts, 1, 1);
    CHECK(idx.stage2_count() == 1);
    CHECK(idx.stage2_model(0).err == 0);
    idx.check_invariants();
    CHECK(idx.point_query_ids({0.0, 0.0, 9}) == std::vector<uint64_t>{0});
    CHECK(idx.point_query_ids({1.0, 0.0, 9}) == std::vector<uint64_t>{1});
}

TEST_CASE("single stage-2 model matches the closed-form regression") {
    auto pts = random_points(400, 277);
    ZMIndex idx(pts, 16, 1);
    // side computation of the least-squares fit over (key, position)
    std::vector<uint64_t> keys;
    for (const Point& p : pts) keys.push_back(idx.key_of(p));
    std::sort(keys.begin(), keys.end());
    double n = double(keys.size()), sx = 0, sy = 0;
    for (size_t i = 0; i < keys.size(); ++i) {
        sx += double(keys[i]);
        sy += double(i);
    }
    double mx = sx / n, my = sy / n, sxx = 0, sxy = 0;
    for (size_t i = 0; i < keys.size(); ++i) {
        double dx = double(keys[i]) - mx;
        sxx += dx * dx;
        sxy += dx * (double(i) - my);
    }
    double b = sxy / sxx, a = my - b * mx;
    CHECK(idx.stage2_model(0).b == doctest::Approx(b).epsilon(1e-12));
    CHECK(idx.stage2_model(0).a == doctest::Approx(a).epsilon(1e-9));
    uint64_t err = 0;
    for (size_t i = 0; i < keys.size(); ++i) {
        auto pred = int64_t(std::llround(a + b * double(keys[i])));
        pred = std::clamp<int64_t>(pred, 0, int64_t(keys.size()) - 1);
        uint64_t d = uint64_t(std::abs(pred - int64_t(i)));
        err = std::max(err, d);
    }
    CHECK(idx.stage2_model(0).err == err);
}

TEST_CASE("error bounds hold for every indexed key across stages") {
    auto pts = random_points(30000, 281);
    ZMIndex idx(pts, 16, 8);
    CHECK(idx.stage2_count() == 8);
    idx.check_invariants();
    for (size_t i = 0; i < pts.size(); i += 257) {
        auto ids = idx.point_query_ids(pts[i]);
        CHECK(std::count(ids.begin(), ids.end(), pts[i].id) == 1);
    }
}

TEST_CASE("point lookups read only the error window") {
    auto pts = random_points(30000, 283);
    ZMIndex idx(pts, 16, 8);
    for (size_t i = 0; i < pts.size(); i += 1531) {
        uint64_t key = idx.key_of(pts[i]);
        idx.store().io_reset();
        auto pr = idx.predict(key);
        uint64_t window_pages = 2 + (2 * pr.err) / kPointsPerPage;
        idx.store().io_reset();
        auto ids = idx.point_query_ids(pts[i]);
        CHECK(std::count(ids.begin(), ids.end(), pts[i].id) == 1);
        CHECK(idx.store().io().inner_reads == 2);
        CHECK(idx.store().io().leaf_reads <= window_pages);
    }
}

TEST_CASE("zm range queries match brute force") {
    auto pts = random_points(30000, 293);
    ZMIndex idx(pts, 16, 8);
    Rng rng(307);
    for (int i = 0; i < 20; ++i) {
        MBR q{rng.uniform01() - 0.1, rng.uniform01() - 0.1, 0, 0};
        q.hi_x = q.lo_x + 0.01 + rng.uniform01() * 0.25;
        q.hi_y = q.lo_y + 0.01 + rng.uniform01() * 0.25;
        CHECK(idx.range_query_ids(q) == brute_range(pts, q));
    }
    MBR all{-2, -2, 3, 3};
    CHECK(idx.range_query_ids(all).size() == pts.size());
    MBR outside{5, 5, 6, 6};
    CHECK(idx.range_query_ids(outside).empty());
}

TEST_CASE("zm point queries miss cleanly") {
    auto pts = random_points(1000, 311);
    ZMIndex idx(pts);
    CHECK(idx.point_query_ids({0.123456789, 0.987654321, 0}).empty());
    CHECK(idx.point_query_ids({7.0, 7.0, 0}).empty());  // outside the domain
}

TEST_CASE("zm knn by range expansion matches brute force") {
    auto pts = random_points(5000, 313);
    ZMIndex idx(pts, 16, 4);
    Rng rng(317);
    for (int i = 0; i < 10; ++i) {
        Point q{rng.uniform01(), rng.uniform01(), 0};
        for (uint32_t k : {1u, 10u, 100u})
            CHECK(idx.knn_ids(q, k) == brute_knn(pts, q, k));
    }
    Point far{3.0, -2.0, 0};
    CHECK(idx.knn_ids(far, 5) == brute_knn(pts, far, 5));
    CHECK(idx.knn_ids(far, 0).empty());
    CHECK(idx.knn_ids(far, 6000).size() == 5000);
}

TEST_CASE("zm model evaluations charge two inner reads") {
    auto pts = random_points(30000, 331);
    ZMIndex idx(pts, 16, 8);
    idx.store().io_reset();
    idx.predict(12345);
    CHECK(idx.store().io().inner_reads == 2);
    CHECK(idx.store().io().leaf_reads == 0);
    idx.store().io_reset();
    idx.range_query_ids({0.4, 0.4, 0.45, 0.45});
    CHECK(idx.store().io().inner_reads >= 2);
    CHECK(idx.store().io().leaf_reads >= 1);
}

TEST_CASE("zm stays far smaller than the packed tree at scale") {
    auto pts = random_points(100000, 337);
    ZMIndex zm(pts);
    CHECK(zm.stats().leaf_count == 10);
    CHECK(zm.stats().page_count == 590);
    CHECK(zm.stage2_count() == 2);
    zm.check_invariants();
}

TEST_CASE("zm save and load round trip is byte exact") {
    auto pts = random_points(12000, 347);
    ZMIndex idx(pts, 16, 4);
    idx.save("/tmp/zm_rt");
    ZMIndex back = ZMIndex::load("/tmp/zm_rt");
    CHECK(back.size() == idx.size());
    CHECK(back.bits() == idx.bits());
    CHECK(back.stage2_count() == idx.stage2_count());
    CHECK(back.store().page_count() == idx.store().page_count());
    for (PageId i = 0; i < idx.store().page_count(); ++i)
        CHECK(std::memcmp(idx.store().raw(i), back.store().raw(i), kPageSize) == 0);
    for (size_t j = 0; j < idx.stage2_count(); ++j) {
        CHECK(back.stage2_model(j).a == idx.stage2_model(j).a);
        CHECK(back.stage2_model(j).b == idx.stage2_model(j).b);
        CHECK(back.stage2_model(j).err == idx.stage2_model(j).err);
    }
    back.check_invariants();
    MBR q{0.3, 0.3, 0.6, 0.6};
    CHECK(back.range_query_ids(q) == idx.range_query_ids(q));
}

TEST_CASE("mapping builds reject empty input") {
    std::vector<Point> none;
    CHECK_THROWS_AS(MPIndex(MPVariant::zr, none), config_error);
    CHECK_THROWS_AS(ZMIndex{none}, config_error);
}
