#include "sbench/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sbench/errors.hpp"

namespace sbench {

MBR mbr_union(const MBR& a, const MBR& b) {
    return {std::min(a.lo_x, b.lo_x), std::min(a.lo_y, b.lo_y),
            std::max(a.hi_x, b.hi_x), std::max(a.hi_y, b.hi_y)};
}

bool mbr_valid(const MBR& r) {
    return std::isfinite(r.lo_x) && std::isfinite(r.lo_y) &&
           std::isfinite(r.hi_x) && std::isfinite(r.hi_y) &&
           r.lo_x <= r.hi_x && r.lo_y <= r.hi_y;
}

bool mbr_intersects(const MBR& a, const MBR& b) {
    return a.lo_x <= b.hi_x && b.lo_x <= a.hi_x &&
           a.lo_y <= b.hi_y && b.lo_y <= a.hi_y;
}

bool mbr_contains(const MBR& r, const Point& p) {
    return r.lo_x <= p.x && p.x <= r.hi_x && r.lo_y <= p.y && p.y <= r.hi_y;
}

bool mbr_covers(const MBR& outer, const MBR& inner) {
    return outer.lo_x <= inner.lo_x && outer.lo_y <= inner.lo_y &&
           inner.hi_x <= outer.hi_x && inner.hi_y <= outer.hi_y;
}

double mbr_area(const MBR& r) {
    return (r.hi_x - r.lo_x) * (r.hi_y - r.lo_y);
}

double mbr_margin(const MBR& r) {
    return 2.0 * ((r.hi_x - r.lo_x) + (r.hi_y - r.lo_y));
}

double mbr_overlap_area(const MBR& a, const MBR& b) {
    double w = std::min(a.hi_x, b.hi_x) - std::max(a.lo_x, b.lo_x);
    double h = std::min(a.hi_y, b.hi_y) - std::max(a.lo_y, b.lo_y);
    if (w < 0.0 || h < 0.0) return 0.0;
    return w * h;
}

MbrMetrics mbr_metrics(const MBR& a, const MBR& b) {
    MBR u = mbr_union(a, b);
    MbrMetrics m;
    m.area_enlargement = mbr_area(u) - mbr_area(a);
    m.margin_enlargement = mbr_margin(u) - mbr_margin(a);
    m.overlap_area = mbr_overlap_area(a, b);
    return m;
}

double dist(const Point& a, const Point& b) {
    double dx = a.x - b.x;
    double dy = a.y - b.y;
    return std::sqrt(dx * dx + dy * dy);
}

double min_dist(const Point& q, const MBR& r) {
    double dx = 0.0;
    if (q.x < r.lo_x) dx = r.lo_x - q.x;
    else if (q.x > r.hi_x) dx = q.x - r.hi_x;
    double dy = 0.0;
    if (q.y < r.lo_y) dy = r.lo_y - q.y;
    else if (q.y > r.hi_y) dy = q.y - r.hi_y;
    return std::sqrt(dx * dx + dy * dy);
}

uint32_t quantize(double v, double lo, double hi, int bits) {
    uint64_t cells = uint64_t{1} << bits;
    if (hi <= lo) return 0;
    double t = (v - lo) / (hi - lo);
    auto c = static_cast<int64_t>(t * static_cast<double>(cells));
    if (c < 0) c = 0;
    if (c >= static_cast<int64_t>(cells)) c = static_cast<int64_t>(cells) - 1;
    return static_cast<uint32_t>(c);
}

uint64_t z_interleave(uint32_t cx, uint32_t cy, int bits) {
    uint64_t key = 0;
    for (int i = bits - 1; i >= 0; --i) {
        key = (key << 1) | ((cx >> i) & 1u);
        key = (key << 1) | ((cy >> i) & 1u);
    }
    return key;
}

SFCKey z_encode(const Point& p, int bits, const MBR& domain) {
    if (bits < 1 || bits > 31) throw domain_error("z_encode: bits out of range");
    if (!mbr_contains(domain, p)) throw domain_error("z_encode: point outside domain");
    uint32_t cx = quantize(p.x, domain.lo_x, domain.hi_x, bits);
    uint32_t cy = quantize(p.y, domain.lo_y, domain.hi_y, bits);
    return {z_interleave(cx, cy, bits), bits};
}

std::vector<RankedPoint> rank_space(const std::vector<Point>& points) {
    size_t n = points.size();
    std::vector<size_t> order(n);
    std::vector<RankedPoint> out(n);
    for (size_t i = 0; i < n; ++i) out[i].p = points[i];

    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (points[a].x != points[b].x) return points[a].x < points[b].x;
        return points[a].id < points[b].id;
    });
    for (size_t r = 0; r < n; ++r) out[order[r]].rank_x = r;

    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (points[a].y != points[b].y) return points[a].y < points[b].y;
        return points[a].id < points[b].id;
    });
    for (size_t r = 0; r < n; ++r) out[order[r]].rank_y = r;

    return out;
}

}  // namespace sbench
