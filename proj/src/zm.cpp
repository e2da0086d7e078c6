#include "sbench/zm.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sbench/errors.hpp"
#include "sbench/text.hpp"

namespace sbench {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Least-squares line through (key, position) pairs.
ZMIndex::LinearModel fit_line(const std::vector<std::pair<uint64_t, uint64_t>>& kp) {
    ZMIndex::LinearModel m;
    if (kp.empty()) return m;
    double n = double(kp.size());
    double sx = 0, sy = 0;
    for (const auto& [k, p] : kp) {
        sx += double(k);
        sy += double(p);
    }
    double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0;
    for (const auto& [k, p] : kp) {
        double dx = double(k) - mx;
        sxx += dx * dx;
        sxy += dx * (double(p) - my);
    }
    m.b = sxx > 0 ? sxy / sxx : 0.0;
    m.a = my - m.b * mx;
    return m;
}

uint64_t clamp_pos(double v, uint64_t n) {
    if (!(v > 0)) return 0;
    uint64_t p = uint64_t(std::llround(v));
    return p >= n ? n - 1 : p;
}

}  // namespace

ZMIndex::ZMIndex(const std::vector<Point>& points, uint32_t bits, uint32_t m)
    : bits_(bits) {
    if (points.empty()) throw config_error("zm build needs a nonempty point list");
    n_ = points.size();
    uint32_t mm = m ? m : uint32_t(std::max<uint64_t>(1, n_ / 50000));

    domain_ = mbr_of(points.front());
    for (const Point& p : points) domain_ = mbr_union(domain_, mbr_of(p));

    std::vector<std::pair<uint64_t, Point>> keyed;
    keyed.reserve(n_);
    for (const Point& p : points) keyed.push_back({key_of(p), p});
    std::sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first < b.first;
        return a.second.id < b.second.id;
    });

    for (uint64_t at = 0; at < n_; at += kLargeLeafCap) {
        PageId first = store_.alloc_pages(kLargeLeafPages);
        uint64_t end = std::min(n_, at + kLargeLeafCap);
        for (uint64_t page_at = at; page_at < end; page_at += kPointsPerPage) {
            NodePage page;
            page.level = 0;
            page.cls = NodeClass::large_leaf;
            uint64_t page_end = std::min(end, page_at + kPointsPerPage);
            for (uint64_t i = page_at; i < page_end; ++i)
                page.points.push_back(keyed[i].second);
            store_.rewrite_page(first + (page_at - at) / kPointsPerPage, page);
        }
    }

    std::vector<std::pair<uint64_t, uint64_t>> all;
    all.reserve(n_);
    for (uint64_t i = 0; i < n_; ++i) all.push_back({keyed[i].first, i});
    root_ = fit_line(all);

    std::vector<std::vector<std::pair<uint64_t, uint64_t>>> routed(mm);
    models_.resize(mm);
    {
        // route() needs models_.size(); fill buckets with the root model set
        for (const auto& [k, p] : all) routed[route(k)].push_back({k, p});
    }
    for (uint32_t j = 0; j < mm; ++j) {
        models_[j] = fit_line(routed[j]);
        uint64_t err = 0;
        for (const auto& [k, p] : routed[j]) {
            uint64_t pred = clamp_pos(models_[j].a + models_[j].b * double(k), n_);
            err = std::max(err, pred > p ? pred - p : p - pred);
        }
        models_[j].err = err;
    }
    stats_.height = 2;
    stats_.leaf_count = (n_ + kLargeLeafCap - 1) / kLargeLeafCap;
}

uint64_t ZMIndex::key_of(const Point& p) const {
    return z_encode(p, int(bits_), domain_).value;
}

size_t ZMIndex::route(uint64_t key) const {
    double t = root_.a + root_.b * double(key);
    double fm = t / double(n_) * double(models_.size());
    auto j = int64_t(std::floor(fm));
    return size_t(std::clamp<int64_t>(j, 0, int64_t(models_.size()) - 1));
}

ZMIndex::Prediction ZMIndex::raw_predict(uint64_t key) const {
    const LinearModel& m = models_[route(key)];
    return {clamp_pos(m.a + m.b * double(key), n_), m.err};
}

ZMIndex::Prediction ZMIndex::predict(uint64_t key) {
    store_.count_inner(2);  // root model + one stage-2 model
    return raw_predict(key);
}

PageId ZMIndex::page_of(uint64_t pos) const {
    return (pos / kLargeLeafCap) * kLargeLeafPages +
           (pos % kLargeLeafCap) / kPointsPerPage;
}

Point ZMIndex::point_at(uint64_t pos, PageCache* pc) {
    PageId id = page_of(pos);
    auto it = pc->pages.find(id);
    if (it == pc->pages.end())
        it = pc->pages.emplace(id, store_.read_page(id, IoClass::leaf)).first;
    return it->second.points[(pos % kLargeLeafCap) % kPointsPerPage];
}

uint64_t ZMIndex::key_at(uint64_t pos, PageCache* pc) {
    return key_of(point_at(pos, pc));
}

uint64_t ZMIndex::locate_lower_bound(uint64_t key, PageCache* pc) {
    Prediction pr = predict(key);
    uint64_t lo = pr.pos > pr.err ? pr.pos - pr.err : 0;
    uint64_t hi = std::min(n_ - 1, pr.pos + pr.err);
    uint64_t step = pr.err + 1;
    while (lo > 0 && key_at(lo, pc) >= key) {
        lo = lo > step ? lo - step : 0;
        step <<= 1;
    }
    step = pr.err + 1;
    while (hi < n_ - 1 && key_at(hi, pc) < key) {
        hi = std::min(n_ - 1, hi + step);
        step <<= 1;
    }
    if (key_at(hi, pc) < key) return n_;
    if (key_at(lo, pc) >= key) return lo;  // reachable only at lo == 0
    while (hi - lo > 1) {
        uint64_t mid = lo + (hi - lo) / 2;
        if (key_at(mid, pc) < key) lo = mid;
        else hi = mid;
    }
    return hi;
}

std::vector<uint64_t> ZMIndex::point_query_ids(const Point& p) {
    if (!mbr_contains(domain_, p)) return {};
    uint64_t key = key_of(p);
    Prediction pr = predict(key);
    uint64_t lo = pr.pos > pr.err ? pr.pos - pr.err : 0;
    uint64_t hi = std::min(n_ - 1, pr.pos + pr.err);
    PageCache pc;
    std::vector<uint64_t> out;
    for (uint64_t pos = lo; pos <= hi; ++pos) {
        Point q = point_at(pos, &pc);
        if (q.x == p.x && q.y == p.y) out.push_back(q.id);
    }
    std::sort(out.begin(), out.end());
    return out;
}

void ZMIndex::decompose(uint64_t prefix, int level, uint32_t cx_lo, uint32_t cx_hi,
                        uint32_t cy_lo, uint32_t cy_hi, const uint32_t qcell[4],
                        std::vector<std::pair<uint64_t, uint64_t>>* runs) {
    if (cx_hi < qcell[0] || cx_lo > qcell[1] || cy_hi < qcell[2] ||
        cy_lo > qcell[3])
        return;
    int rem = 2 * int(bits_) - level;
    uint64_t klo = prefix << rem;
    uint64_t khi = klo + ((uint64_t(1) << rem) - 1);
    if (cx_lo >= qcell[0] && cx_hi <= qcell[1] && cy_lo >= qcell[2] &&
        cy_hi <= qcell[3]) {
        runs->push_back({klo, khi});
        return;
    }
    if (rem == 0) {
        runs->push_back({klo, khi});
        return;
    }
    // stop refining once the run is predicted to live inside one page
    if (page_of(predict(klo).pos) == page_of(predict(khi).pos)) {
        runs->push_back({klo, khi});
        return;
    }
    if (level % 2 == 0) {  // x bit next
        uint32_t mid = cx_lo + (cx_hi - cx_lo) / 2;
        decompose(prefix << 1, level + 1, cx_lo, mid, cy_lo, cy_hi, qcell, runs);
        decompose(prefix << 1 | 1, level + 1, mid + 1, cx_hi, cy_lo, cy_hi, qcell,
                  runs);
    } else {
        uint32_t mid = cy_lo + (cy_hi - cy_lo) / 2;
        decompose(prefix << 1, level + 1, cx_lo, cx_hi, cy_lo, mid, qcell, runs);
        decompose(prefix << 1 | 1, level + 1, cx_lo, cx_hi, mid + 1, cy_hi, qcell,
                  runs);
    }
}

void ZMIndex::collect_range(const MBR& box, std::vector<Point>* out) {
    MBR clip{std::max(box.lo_x, domain_.lo_x), std::max(box.lo_y, domain_.lo_y),
             std::min(box.hi_x, domain_.hi_x), std::min(box.hi_y, domain_.hi_y)};
    if (!mbr_valid(clip)) return;
    uint32_t qcell[4] = {quantize(clip.lo_x, domain_.lo_x, domain_.hi_x, int(bits_)),
                         quantize(clip.hi_x, domain_.lo_x, domain_.hi_x, int(bits_)),
                         quantize(clip.lo_y, domain_.lo_y, domain_.hi_y, int(bits_)),
                         quantize(clip.hi_y, domain_.lo_y, domain_.hi_y, int(bits_))};
    std::vector<std::pair<uint64_t, uint64_t>> runs;
    uint32_t top = (uint32_t(1) << bits_) - 1;
    decompose(0, 0, 0, top, 0, top, qcell, &runs);
    std::sort(runs.begin(), runs.end());
    std::vector<std::pair<uint64_t, uint64_t>> merged;
    for (const auto& r : runs) {
        if (!merged.empty() && r.first <= merged.back().second + 1)
            merged.back().second = std::max(merged.back().second, r.second);
        else
            merged.push_back(r);
    }
    PageCache pc;
    for (const auto& [klo, khi] : merged) {
        for (uint64_t pos = locate_lower_bound(klo, &pc); pos < n_; ++pos) {
            Point p = point_at(pos, &pc);
            if (key_of(p) > khi) break;
            if (mbr_contains(box, p)) out->push_back(p);
        }
    }
}

std::vector<uint64_t> ZMIndex::range_query_ids(const MBR& box) {
    std::vector<Point> pts;
    collect_range(box, &pts);
    std::vector<uint64_t> out;
    out.reserve(pts.size());
    for (const Point& p : pts) out.push_back(p.id);
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<uint64_t> ZMIndex::knn_ids(const Point& q, uint32_t k) {
    if (k == 0) return {};
    uint64_t want = std::min<uint64_t>(k, n_);
    double area = mbr_area(domain_);
    double r = area > 0 ? std::sqrt(double(want) * area / (kPi * double(n_)))
                        : 1e-9;
    if (!(r > 0)) r = 1e-9;
    while (true) {
        MBR box{q.x - r, q.y - r, q.x + r, q.y + r};
        std::vector<Point> cands;
        collect_range(box, &cands);
        std::sort(cands.begin(), cands.end(), [&](const Point& a, const Point& b) {
            double da = dist(a, q), db = dist(b, q);
            if (da != db) return da < db;
            return a.id < b.id;
        });
        bool whole = mbr_covers(box, domain_);
        if (cands.size() >= want && (dist(cands[want - 1], q) <= r || whole)) {
            std::vector<uint64_t> out;
            for (uint64_t i = 0; i < want; ++i) out.push_back(cands[i].id);
            return out;
        }
        if (whole && cands.size() < want) {
            std::vector<uint64_t> out;
            for (const Point& p : cands) out.push_back(p.id);
            return out;
        }
        r *= 2;
    }
}

const BuildStats& ZMIndex::stats() const {
    stats_.page_count = store_.page_count();
    return stats_;
}

void ZMIndex::check_invariants() const {
    uint64_t prev_key = 0;
    uint64_t prev_id = 0;
    for (uint64_t pos = 0; pos < n_; ++pos) {
        NodePage page = deserialize_page(store_.raw(page_of(pos)));
        uint64_t in_run = pos % kLargeLeafCap;
        uint64_t slot = in_run % kPointsPerPage;
        if (slot >= page.points.size()) throw error("zm page fill mismatch");
        const Point& p = page.points[slot];
        uint64_t key = key_of(p);
        if (pos > 0 && (key < prev_key || (key == prev_key && p.id < prev_id)))
            throw error("zm keys out of order");
        Prediction pr = raw_predict(key);
        uint64_t diff = pr.pos > pos ? pr.pos - pos : pos - pr.pos;
        if (diff > pr.err) throw error("zm error bound violated");
        prev_key = key;
        prev_id = p.id;
    }
    uint64_t runs = (n_ + kLargeLeafCap - 1) / kLargeLeafCap;
    if (store_.page_count() != runs * kLargeLeafPages)
        throw error("zm page count mismatch");
}

void ZMIndex::save(const std::string& prefix) const {
    store_.save(prefix + ".pages");
    std::map<std::string, std::string> kv;
    kv["kind"] = "zm";
    kv["n"] = std::to_string(n_);
    kv["bits"] = std::to_string(bits_);
    kv["m"] = std::to_string(models_.size());
    kv["domain"] = fmt_mbr(domain_);
    kv["root"] = fmt_g17(root_.a) + " " + fmt_g17(root_.b);
    for (size_t j = 0; j < models_.size(); ++j)
        kv["s." + std::to_string(j)] = fmt_g17(models_[j].a) + " " +
                                       fmt_g17(models_[j].b) + " " +
                                       std::to_string(models_[j].err);
    sidecar_save(prefix + ".meta", kv);
}

ZMIndex ZMIndex::load(const std::string& prefix) {
    auto kv = sidecar_load(prefix + ".meta");
    if (kv.at("kind") != "zm") throw config_error("sidecar is not a zm index");
    ZMIndex idx;
    idx.store_ = BlockStore::load(prefix + ".pages");
    idx.n_ = std::stoull(kv.at("n"));
    idx.bits_ = uint32_t(std::stoul(kv.at("bits")));
    idx.domain_ = parse_mbr(kv.at("domain"));
    {
        std::istringstream is(kv.at("root"));
        is >> idx.root_.a >> idx.root_.b;
    }
    size_t m = std::stoull(kv.at("m"));
    for (size_t j = 0; j < m; ++j) {
        std::istringstream is(kv.at("s." + std::to_string(j)));
        LinearModel lm;
        is >> lm.a >> lm.b >> lm.err;
        idx.models_.push_back(lm);
    }
    idx.stats_.height = 2;
    idx.stats_.leaf_count = (idx.n_ + kLargeLeafCap - 1) / kLargeLeafCap;
    return idx;
}

}  // namespace sbench
