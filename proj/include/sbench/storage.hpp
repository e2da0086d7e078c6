#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sbench/geometry.hpp"

namespace sbench {

using PageId = uint64_t;

constexpr size_t kPageSize = 4096;
constexpr size_t kHeaderBytes = 16;
constexpr uint32_t kStandardCap = 100;      // B, entries per standard node
constexpr uint32_t kEntryBytes = 40;        // rect (4 x f64) + payload u64
constexpr uint32_t kPointEntryBytes = 24;   // x, y f64 + id u64
constexpr uint32_t kPointsPerPage = 170;    // (4096 - 16) / 24
constexpr uint32_t kLargeLeafCap = 10000;   // logical large-leaf capacity
constexpr uint32_t kLargeLeafPages = 59;    // ceil(10000 * 24 / 4080)

enum class NodeClass : uint8_t { standard = 0, large_leaf = 1 };
enum class IoClass { leaf, inner };

struct Entry {
    MBR rect;
    uint64_t payload = 0;  // child page id if level > 0, record id if leaf
};

// One 4096-byte page. Standard pages hold Entry records, large-leaf pages
// hold raw point records. aux is a free header slot (overflow chain link).
struct NodePage {
    uint16_t level = 0;  // 0 = leaf
    NodeClass cls = NodeClass::standard;
    uint64_t aux = 0;
    std::vector<Entry> entries;
    std::vector<Point> points;

    uint32_t count() const {
        return cls == NodeClass::standard ? static_cast<uint32_t>(entries.size())
                                          : static_cast<uint32_t>(points.size());
    }
};

struct IOCounters {
    uint64_t leaf_reads = 0;
    uint64_t inner_reads = 0;
    uint64_t page_writes = 0;
};

void serialize_page(const NodePage& page, uint8_t* buf);  // buf: kPageSize bytes
NodePage deserialize_page(const uint8_t* buf);
uint64_t page_checksum(const uint8_t* buf);  // FNV-1a over the whole block

// Append-only page store with in-place rewrite. Pages live in memory;
// save/load move the whole image to/from disk. All logical I/O flows
// through the counters. Every read transfers and verifies the full
// 4096-byte block, as a block device would, regardless of occupancy.
class BlockStore {
public:
    BlockStore() = default;

    PageId write_page(const NodePage& page);          // append
    void rewrite_page(PageId id, const NodePage& page);
    NodePage read_page(PageId id, IoClass cls);
    PageId alloc_pages(uint64_t n);                   // zeroed large-leaf pages

    uint64_t page_count() const { return pages_.size(); }
    uint64_t size_bytes() const { return pages_.size() * kPageSize; }

    const IOCounters& io() const { return io_; }
    void io_reset() { io_ = IOCounters{}; }
    // Model evaluations (learned indices) charge I/O without touching pages.
    void count_inner(uint64_t n = 1) { io_.inner_reads += n; }
    void count_leaf(uint64_t n = 1) { io_.leaf_reads += n; }

    void save(const std::string& path) const;
    static BlockStore load(const std::string& path);

    const uint8_t* raw(PageId id) const;  // no I/O charge; tests and save only

private:
    void check_id(PageId id) const;

    std::vector<std::array<uint8_t, kPageSize>> pages_;
    std::vector<uint64_t> sums_;  // per-block media checksums, not persisted
    IOCounters io_;
};

// Sidecar metadata: flat text, `key = value` per line.
void sidecar_save(const std::string& path,
                  const std::map<std::string, std::string>& kv);
std::map<std::string, std::string> sidecar_load(const std::string& path);

}  // namespace sbench
