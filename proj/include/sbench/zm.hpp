#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sbench/index_dp.hpp"
#include "sbench/storage.hpp"

namespace sbench {

// ZM index: points sorted by Z-value and packed into large-leaf runs of
// 10,000 (59 pages each), searched through a two-stage RMI. Each RMI
// prediction executes the root and one stage-2 model: 2 inner I/O.
// Read-only after build; the mapping family handles inserts elsewhere.
class ZMIndex {
public:
    struct LinearModel {
        double a = 0, b = 0;  // position ~ a + b * key
        uint64_t err = 0;     // max |rounded prediction - true position|
    };

    explicit ZMIndex(const std::vector<Point>& points, uint32_t bits = 16,
                     uint32_t m = 0);  // m = 0 picks max(1, n / 50000)

    struct Prediction {
        uint64_t pos = 0;
        uint64_t err = 0;
    };
    Prediction predict(uint64_t key);  // charges 2 inner reads

    std::vector<uint64_t> point_query_ids(const Point& p);
    std::vector<uint64_t> range_query_ids(const MBR& box);
    std::vector<uint64_t> knn_ids(const Point& q, uint32_t k);

    uint64_t key_of(const Point& p) const;

    BlockStore& store() { return store_; }
    const BlockStore& store() const { return store_; }
    uint64_t size() const { return n_; }
    uint32_t bits() const { return bits_; }
    uint32_t stage2_count() const { return uint32_t(models_.size()); }
    const LinearModel& root_model() const { return root_; }
    const LinearModel& stage2_model(size_t j) const { return models_[j]; }
    const MBR& domain() const { return domain_; }
    const BuildStats& stats() const;

    void check_invariants() const;

    void save(const std::string& prefix) const;
    static ZMIndex load(const std::string& prefix);

private:
    struct PageCache {  // one per query: each page charged once
        std::map<PageId, NodePage> pages;
    };

    ZMIndex() = default;

    Prediction raw_predict(uint64_t key) const;  // no I/O charge
    size_t route(uint64_t key) const;
    PageId page_of(uint64_t pos) const;
    Point point_at(uint64_t pos, PageCache* pc);
    uint64_t key_at(uint64_t pos, PageCache* pc);
    uint64_t locate_lower_bound(uint64_t key, PageCache* pc);
    void collect_range(const MBR& box, std::vector<Point>* out);
    void decompose(uint64_t prefix, int level, uint32_t cx_lo, uint32_t cx_hi,
                   uint32_t cy_lo, uint32_t cy_hi, const uint32_t qcell[4],
                   std::vector<std::pair<uint64_t, uint64_t>>* runs);

    BlockStore store_;
    MBR domain_;
    uint32_t bits_ = 16;
    uint64_t n_ = 0;
    LinearModel root_;
    std::vector<LinearModel> models_;
    mutable BuildStats stats_;
};

}  // namespace sbench
