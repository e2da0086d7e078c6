#include "sbench/query.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <queue>

#include "sbench/errors.hpp"

namespace sbench {

namespace {

constexpr double kPi = 3.14159265358979323846;

uint64_t steady_nanos() {
    return uint64_t(std::chrono::duration_cast<std::chrono::nanoseconds>(
                        std::chrono::steady_clock::now().time_since_epoch())
                        .count());
}

struct IoDelta {
    const BlockStore* store;
    IOCounters before;
    explicit IoDelta(BlockStore& s) : store(&s), before(s.io()) {}
    uint64_t leaf() const { return store->io().leaf_reads - before.leaf_reads; }
    uint64_t inner() const { return store->io().inner_reads - before.inner_reads; }
};

// Uniform node view: a reference plus typed children.
struct Ref {
    PageId page = 0;
    uint16_t level = 0;  // dp/mp only
    bool leaf = false;
};

struct Child {
    MBR rect;
    bool is_point = false;
    uint64_t id = 0;  // record id for points
    Ref ref;          // child node otherwise
};

Ref root_ref(IndexHandle& h) {
    switch (h.kind()) {
        case IndexKind::dp:
            return {h.dp()->root(), uint16_t(h.dp()->height() - 1),
                    h.dp()->height() == 1};
        case IndexKind::mp:
            return {h.mp()->root(), uint16_t(h.mp()->height() - 1),
                    h.mp()->height() == 1};
        case IndexKind::sp:
            return {h.sp()->root(), 0, h.sp()->root_is_leaf()};
        default:
            throw config_error("tree traversal on a non-tree index");
    }
}

std::vector<Child> read_children(IndexHandle& h, const Ref& r) {
    std::vector<Child> out;
    if (h.kind() == IndexKind::sp) {
        NodePage node =
            h.store().read_page(r.page, r.leaf ? IoClass::leaf : IoClass::inner);
        for (const Entry& e : node.entries) {
            if (r.leaf)
                out.push_back({e.rect, true, e.payload, {}});
            else
                out.push_back({e.rect, false, 0,
                               {payload_page(e.payload), 0,
                                payload_is_leaf(e.payload)}});
        }
        return out;
    }
    NodePage node =
        h.store().read_page(r.page, r.level == 0 ? IoClass::leaf : IoClass::inner);
    for (const Entry& e : node.entries) {
        if (r.level == 0)
            out.push_back({e.rect, true, e.payload, {}});
        else
            out.push_back({e.rect, false, 0,
                           {e.payload, uint16_t(r.level - 1), r.level == 1}});
    }
    return out;
}

void tree_collect(IndexHandle& h, const Ref& r, const MBR& box,
                  bool contains_only, std::vector<uint64_t>* out) {
    for (const Child& c : read_children(h, r)) {
        if (c.is_point) {
            if (mbr_contains(box, {c.rect.lo_x, c.rect.lo_y, 0}))
                out->push_back(c.id);
        } else if (contains_only
                       ? mbr_contains(c.rect, {box.lo_x, box.lo_y, 0})
                       : mbr_intersects(c.rect, box)) {
            tree_collect(h, c.ref, box, contains_only, out);
        }
    }
}

std::vector<uint64_t> dispatch_point(IndexHandle& h, const Point& q) {
    switch (h.kind()) {
        case IndexKind::lisa: return h.lisa()->point_query_ids(q);
        case IndexKind::zm: return h.zm()->point_query_ids(q);
        default: break;
    }
    std::vector<uint64_t> out;
    tree_collect(h, root_ref(h), mbr_of(q), true, &out);
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<uint64_t> dispatch_range(IndexHandle& h, const MBR& box) {
    switch (h.kind()) {
        case IndexKind::lisa: return h.lisa()->range_query_ids(box);
        case IndexKind::zm: return h.zm()->range_query_ids(box);
        default: break;
    }
    std::vector<uint64_t> out;
    tree_collect(h, root_ref(h), box, false, &out);
    std::sort(out.begin(), out.end());
    return out;
}

// Best-first: nodes sort ahead of points at equal distance so a node that
// might hold a smaller-id point at the same distance is opened first.
struct KnnItem {
    double d;
    int is_point;  // 0 node, 1 point
    uint64_t key;  // page id or record id
    Ref ref;
    bool operator>(const KnnItem& o) const {
        if (d != o.d) return d > o.d;
        if (is_point != o.is_point) return is_point > o.is_point;
        return key > o.key;
    }
};

std::vector<uint64_t> tree_knn(IndexHandle& h, const Point& q, uint64_t k) {
    std::priority_queue<KnnItem, std::vector<KnnItem>, std::greater<KnnItem>> pq;
    Ref root = root_ref(h);
    pq.push({0.0, 0, root.page, root});
    std::vector<uint64_t> out;
    while (!pq.empty() && out.size() < k) {
        KnnItem it = pq.top();
        pq.pop();
        if (it.is_point) {
            out.push_back(it.key);
            continue;
        }
        for (const Child& c : read_children(h, it.ref)) {
            if (c.is_point)
                pq.push({dist(q, {c.rect.lo_x, c.rect.lo_y, 0}), 1, c.id, {}});
            else
                pq.push({min_dist(q, c.rect), 0, c.ref.page, c.ref});
        }
    }
    return out;
}

// Iterative expansion for the flat indices; matches the ZM stand-in.
std::vector<uint64_t> lisa_knn(LisaIndex& idx, const Point& q, uint64_t k) {
    uint64_t want = std::min<uint64_t>(k, idx.size());
    if (want == 0) return {};
    const MBR& dom = idx.domain();
    double area = mbr_area(dom);
    double r = area > 0 ? std::sqrt(double(want) * area / (kPi * double(idx.size())))
                        : 1e-9;
    if (!(r > 0)) r = 1e-9;
    while (true) {
        MBR box{q.x - r, q.y - r, q.x + r, q.y + r};
        std::vector<Point> cands = idx.range_query_points(box);
        std::sort(cands.begin(), cands.end(), [&](const Point& a, const Point& b) {
            double da = dist(a, q), db = dist(b, q);
            if (da != db) return da < db;
            return a.id < b.id;
        });
        bool whole = mbr_covers(box, dom);
        if (cands.size() >= want && (dist(cands[want - 1], q) <= r || whole)) {
            std::vector<uint64_t> out;
            for (uint64_t i = 0; i < want; ++i) out.push_back(cands[i].id);
            return out;
        }
        if (whole) {
            std::vector<uint64_t> out;
            for (const Point& p : cands) out.push_back(p.id);
            return out;
        }
        r *= 2;
    }
}

void tree_points(IndexHandle& h, const Ref& r, std::vector<Point>* out) {
    for (const Child& c : read_children(h, r)) {
        if (c.is_point)
            out->push_back({c.rect.lo_x, c.rect.lo_y, c.id});
        else
            tree_points(h, c.ref, out);
    }
}

std::vector<Point> all_points(IndexHandle& h) {
    std::vector<Point> out;
    switch (h.kind()) {
        case IndexKind::lisa: {
            LisaIndex& idx = *h.lisa();
            MBR dom = idx.domain();
            out = idx.range_query_points(
                {dom.lo_x - 1, dom.lo_y - 1, dom.hi_x + 1, dom.hi_y + 1});
            break;
        }
        case IndexKind::zm: {
            ZMIndex& idx = *h.zm();
            for (PageId p = 0; p < idx.store().page_count(); ++p) {
                NodePage page = idx.store().read_page(p, IoClass::leaf);
                out.insert(out.end(), page.points.begin(), page.points.end());
            }
            break;
        }
        default:
            tree_points(h, root_ref(h), &out);
    }
    return out;
}

void join_rec(IndexHandle& a, const Child& ca, IndexHandle& b, const Child& cb,
              double eps, std::vector<std::pair<uint64_t, uint64_t>>* out) {
    if (!mbr_intersects(mbr_expand(ca.rect, eps), cb.rect)) return;
    if (ca.is_point && cb.is_point) {
        out->push_back({ca.id, cb.id});
        return;
    }
    if (ca.is_point) {
        for (const Child& c : read_children(b, cb.ref))
            join_rec(a, ca, b, c, eps, out);
        return;
    }
    if (cb.is_point) {
        for (const Child& c : read_children(a, ca.ref))
            join_rec(a, c, b, cb, eps, out);
        return;
    }
    std::vector<Child> as = read_children(a, ca.ref);
    std::vector<Child> bs = read_children(b, cb.ref);
    for (const Child& x : as)
        for (const Child& y : bs) join_rec(a, x, b, y, eps, out);
}

}  // namespace

MBR mbr_expand(const MBR& r, double eps) {
    return {r.lo_x - eps, r.lo_y - eps, r.hi_x + eps, r.hi_y + eps};
}

BlockStore& IndexHandle::store() {
    switch (kind_) {
        case IndexKind::dp: return dp_->store();
        case IndexKind::sp: return sp_->store();
        case IndexKind::lisa: return lisa_->store();
        case IndexKind::mp: return mp_->store();
        case IndexKind::zm: return zm_->store();
    }
    throw config_error("bad index handle");
}

uint64_t IndexHandle::size() const {
    switch (kind_) {
        case IndexKind::dp: return dp_->size();
        case IndexKind::sp: return sp_->size();
        case IndexKind::lisa: return lisa_->size();
        case IndexKind::mp: return mp_->size();
        case IndexKind::zm: return zm_->size();
    }
    return 0;
}

const BuildStats& IndexHandle::stats() const {
    switch (kind_) {
        case IndexKind::dp: return dp_->stats();
        case IndexKind::sp: return sp_->stats();
        case IndexKind::lisa: return lisa_->stats();
        case IndexKind::mp: return mp_->stats();
        case IndexKind::zm: return zm_->stats();
    }
    throw config_error("bad index handle");
}

void IndexHandle::insert(const Point& p) {
    switch (kind_) {
        case IndexKind::dp: dp_->insert(p); return;
        case IndexKind::sp: sp_->insert(p); return;
        case IndexKind::lisa: lisa_->insert(p); return;
        case IndexKind::mp: mp_->insert(p); return;
        case IndexKind::zm:
            throw config_error("zm index is read-only after build");
    }
}

uint64_t IndexHandle::now() const { return clock_ ? clock_() : steady_nanos(); }

QueryResult point_query(IndexHandle& h, const Point& q) {
    IoDelta io(h.store());
    uint64_t t0 = h.now();
    QueryResult r;
    r.ids = dispatch_point(h, q);
    r.wall_nanos = h.now() - t0;
    r.leaf_io = io.leaf();
    r.inner_io = io.inner();
    return r;
}

QueryResult range_query(IndexHandle& h, const MBR& box) {
    IoDelta io(h.store());
    uint64_t t0 = h.now();
    QueryResult r;
    r.ids = dispatch_range(h, box);
    r.wall_nanos = h.now() - t0;
    r.leaf_io = io.leaf();
    r.inner_io = io.inner();
    return r;
}

QueryResult knn_query(IndexHandle& h, const Point& q, uint32_t k) {
    IoDelta io(h.store());
    uint64_t t0 = h.now();
    QueryResult r;
    switch (h.kind()) {
        case IndexKind::lisa: r.ids = lisa_knn(*h.lisa(), q, k); break;
        case IndexKind::zm: r.ids = h.zm()->knn_ids(q, k); break;
        default: r.ids = tree_knn(h, q, std::min<uint64_t>(k, h.size()));
    }
    r.wall_nanos = h.now() - t0;
    r.leaf_io = io.leaf();
    r.inner_io = io.inner();
    return r;
}

JoinResult spatial_join(IndexHandle& a, IndexHandle& b, double eps) {
    if (eps < 0) throw config_error("spatial join needs eps >= 0");
    bool same_store = &a.store() == &b.store();
    IoDelta ioa(a.store());
    IoDelta iob(b.store());
    uint64_t t0 = a.now();
    JoinResult r;
    if (a.is_tree() && b.is_tree()) {
        std::vector<Child> as = read_children(a, root_ref(a));
        std::vector<Child> bs = read_children(b, root_ref(b));
        for (const Child& x : as)
            for (const Child& y : bs) join_rec(a, x, b, y, eps, &r.pairs);
    } else {
        for (const Point& p : all_points(a)) {
            MBR probe = mbr_expand(mbr_of(p), eps);
            for (uint64_t id : dispatch_range(b, probe)) r.pairs.push_back({p.id, id});
        }
    }
    std::sort(r.pairs.begin(), r.pairs.end());
    r.wall_nanos = a.now() - t0;
    r.leaf_io = ioa.leaf() + (same_store ? 0 : iob.leaf());
    r.inner_io = ioa.inner() + (same_store ? 0 : iob.inner());
    return r;
}

}  // namespace sbench
