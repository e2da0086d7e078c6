#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sbench/bmtree.hpp"
#include "sbench/index_dp.hpp"
#include "sbench/storage.hpp"

namespace sbench {

enum class MPVariant { zr, zrr, bmtree };

std::string mp_variant_name(MPVariant v);
MPVariant mp_variant_from_name(const std::string& name);

// Mapping-based family: sort by a 1-D key, pack leaves to exactly B,
// bulk-load parents level by level. Inserts reuse the rtree insertion
// path; key order is allowed to decay afterwards.
class MPIndex {
public:
    // bits = 0 picks the default: 16 for zr, ceil(log2 n) for zrr,
    // the curve's own resolution for bmtree.
    MPIndex(MPVariant variant, const std::vector<Point>& points,
            uint32_t bits = 0, BMTreeCurve curve = {});

    void insert(const Point& p);

    uint64_t build_key(const Point& p) const;  // zr and bmtree only

    BlockStore& store() { return core_.store(); }
    const BlockStore& store() const { return core_.store(); }
    PageId root() const { return core_.root(); }
    uint64_t size() const { return core_.size(); }
    uint32_t height() const { return core_.height(); }
    MPVariant variant() const { return variant_; }
    uint32_t bits() const { return bits_; }
    const MBR& domain() const { return domain_; }
    const BMTreeCurve& curve() const { return curve_; }
    const BuildStats& stats() const { return core_.stats(); }
    DPIndex& core() { return core_; }
    const DPIndex& core() const { return core_; }

    void check_invariants() const { core_.check_invariants(); }

    void save(const std::string& prefix) const;
    static MPIndex load(const std::string& prefix);

private:
    MPIndex(MPVariant variant, DPIndex core);

    MPVariant variant_;
    uint32_t bits_ = 0;
    MBR domain_;
    BMTreeCurve curve_;
    DPIndex core_;
};

}  // namespace sbench
