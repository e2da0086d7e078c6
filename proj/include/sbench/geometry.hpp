#pragma once

#include <cstdint>
#include <vector>

namespace sbench {

struct Point {
    double x = 0.0;
    double y = 0.0;
    uint64_t id = 0;
};

struct MBR {
    double lo_x = 0.0;
    double lo_y = 0.0;
    double hi_x = 0.0;
    double hi_y = 0.0;
};

struct SFCKey {
    uint64_t value = 0;
    int bits = 0;  // resolution per dimension, <= 31
};

inline MBR mbr_of(const Point& p) { return {p.x, p.y, p.x, p.y}; }

MBR mbr_union(const MBR& a, const MBR& b);
bool mbr_valid(const MBR& r);
bool mbr_intersects(const MBR& a, const MBR& b);  // boundaries inclusive
bool mbr_contains(const MBR& r, const Point& p);  // boundaries inclusive
bool mbr_covers(const MBR& outer, const MBR& inner);

double mbr_area(const MBR& r);
double mbr_margin(const MBR& r);
double mbr_overlap_area(const MBR& a, const MBR& b);

struct MbrMetrics {
    double area_enlargement = 0.0;
    double margin_enlargement = 0.0;
    double overlap_area = 0.0;
};
MbrMetrics mbr_metrics(const MBR& a, const MBR& b);

double dist(const Point& a, const Point& b);
double min_dist(const Point& q, const MBR& r);

// Quantize a coordinate inside [lo, hi] to a cell index in [0, 2^bits).
// The upper edge maps to the top cell.
uint32_t quantize(double v, double lo, double hi, int bits);

// Interleave cell coordinates MSB first, x bit before y bit.
uint64_t z_interleave(uint32_t cx, uint32_t cy, int bits);

SFCKey z_encode(const Point& p, int bits, const MBR& domain);

struct RankedPoint {
    Point p;
    uint64_t rank_x = 0;
    uint64_t rank_y = 0;
};

// 0-based position of each point in the per-axis sorted order,
// ties broken by record id.
std::vector<RankedPoint> rank_space(const std::vector<Point>& points);

}  // namespace sbench
