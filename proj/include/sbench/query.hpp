#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "sbench/index_dp.hpp"
#include "sbench/index_mp.hpp"
#include "sbench/index_sp.hpp"
#include "sbench/lisa.hpp"
#include "sbench/zm.hpp"

namespace sbench {

enum class IndexKind { dp, sp, lisa, mp, zm };

// Non-owning dispatcher over the five index families. Every node access
// flows through the owning index's storage counters; queries report the
// counter delta they caused.
class IndexHandle {
public:
    explicit IndexHandle(DPIndex& idx) : kind_(IndexKind::dp), dp_(&idx) {}
    explicit IndexHandle(SPIndex& idx) : kind_(IndexKind::sp), sp_(&idx) {}
    explicit IndexHandle(LisaIndex& idx) : kind_(IndexKind::lisa), lisa_(&idx) {}
    explicit IndexHandle(MPIndex& idx) : kind_(IndexKind::mp), mp_(&idx) {}
    explicit IndexHandle(ZMIndex& idx) : kind_(IndexKind::zm), zm_(&idx) {}

    IndexKind kind() const { return kind_; }
    bool is_tree() const {
        return kind_ == IndexKind::dp || kind_ == IndexKind::sp ||
               kind_ == IndexKind::mp;
    }
    bool writable() const { return kind_ != IndexKind::zm; }

    BlockStore& store();
    uint64_t size() const;
    const BuildStats& stats() const;
    void insert(const Point& p);  // throws config_error for zm

    // Injectable time source for deterministic latency tests.
    void set_clock(std::function<uint64_t()> clock) { clock_ = std::move(clock); }
    uint64_t now() const;

    DPIndex* dp() { return dp_; }
    SPIndex* sp() { return sp_; }
    LisaIndex* lisa() { return lisa_; }
    MPIndex* mp() { return mp_; }
    ZMIndex* zm() { return zm_; }

private:
    IndexKind kind_;
    DPIndex* dp_ = nullptr;
    SPIndex* sp_ = nullptr;
    LisaIndex* lisa_ = nullptr;
    MPIndex* mp_ = nullptr;
    ZMIndex* zm_ = nullptr;
    std::function<uint64_t()> clock_;
};

struct QueryResult {
    std::vector<uint64_t> ids;
    uint64_t leaf_io = 0;
    uint64_t inner_io = 0;
    uint64_t wall_nanos = 0;
};

struct JoinResult {
    std::vector<std::pair<uint64_t, uint64_t>> pairs;
    uint64_t leaf_io = 0;
    uint64_t inner_io = 0;
    uint64_t wall_nanos = 0;
};

QueryResult point_query(IndexHandle& h, const Point& q);
QueryResult range_query(IndexHandle& h, const MBR& box);
// k > N returns all N ids (degenerate contract); ties broken by id.
QueryResult knn_query(IndexHandle& h, const Point& q, uint32_t k);
// All pairs whose eps-expanded rectangles intersect. Tree pairs run a
// synchronized descent; ZM or LISA on either side falls back to an
// index-nested-loop of range queries.
JoinResult spatial_join(IndexHandle& a, IndexHandle& b, double eps);

MBR mbr_expand(const MBR& r, double eps);

}  // namespace sbench
