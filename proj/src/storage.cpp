#include "sbench/storage.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "sbench/errors.hpp"

namespace sbench {

namespace {

void put_u16(uint8_t* p, uint16_t v) {
    p[0] = static_cast<uint8_t>(v);
    p[1] = static_cast<uint8_t>(v >> 8);
}

uint16_t get_u16(const uint8_t* p) {
    return static_cast<uint16_t>(p[0] | (uint16_t(p[1]) << 8));
}

void put_u64(uint8_t* p, uint64_t v) {
    for (int i = 0; i < 8; ++i) p[i] = static_cast<uint8_t>(v >> (8 * i));
}

uint64_t get_u64(const uint8_t* p) {
    uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

void put_f64(uint8_t* p, double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64(p, bits);
}

double get_f64(const uint8_t* p) {
    uint64_t bits = get_u64(p);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

void check_capacity(const NodePage& page) {
    if (page.cls == NodeClass::standard) {
        if (!page.points.empty())
            throw layout_error("standard page cannot hold point records");
        if (page.entries.size() > kStandardCap) {
            std::ostringstream os;
            os << "standard node overflow: " << page.entries.size()
               << " entries, capacity " << kStandardCap;
            throw layout_error(os.str());
        }
    } else {
        if (!page.entries.empty())
            throw layout_error("large-leaf page cannot hold entry records");
        if (page.points.size() > kPointsPerPage) {
            std::ostringstream os;
            os << "large-leaf page overflow: " << page.points.size()
               << " points, capacity " << kPointsPerPage;
            throw layout_error(os.str());
        }
    }
}

}  // namespace

void serialize_page(const NodePage& page, uint8_t* buf) {
    check_capacity(page);
    std::memset(buf, 0, kPageSize);
    put_u16(buf, page.level);
    put_u16(buf + 2, static_cast<uint16_t>(page.count()));
    buf[4] = static_cast<uint8_t>(page.cls);
    put_u64(buf + 5, page.aux);
    uint8_t* p = buf + kHeaderBytes;
    if (page.cls == NodeClass::standard) {
        for (const Entry& e : page.entries) {
            put_f64(p, e.rect.lo_x);
            put_f64(p + 8, e.rect.lo_y);
            put_f64(p + 16, e.rect.hi_x);
            put_f64(p + 24, e.rect.hi_y);
            put_u64(p + 32, e.payload);
            p += kEntryBytes;
        }
    } else {
        for (const Point& pt : page.points) {
            put_f64(p, pt.x);
            put_f64(p + 8, pt.y);
            put_u64(p + 16, pt.id);
            p += kPointEntryBytes;
        }
    }
}

uint64_t page_checksum(const uint8_t* buf) {
    uint64_t h = 1469598103934665603ull;
    for (size_t i = 0; i < kPageSize; i += 8) {
        uint64_t w;
        std::memcpy(&w, buf + i, 8);
        h = (h ^ w) * 1099511628211ull;
    }
    return h;
}

NodePage deserialize_page(const uint8_t* buf) {
    NodePage page;
    page.level = get_u16(buf);
    uint16_t count = get_u16(buf + 2);
    if (buf[4] > 1) throw layout_error("unknown node class tag");
    page.cls = static_cast<NodeClass>(buf[4]);
    page.aux = get_u64(buf + 5);
    const uint8_t* p = buf + kHeaderBytes;
    if (page.cls == NodeClass::standard) {
        if (count > kStandardCap) throw layout_error("corrupt page: count > capacity");
        page.entries.reserve(count);
        for (uint16_t i = 0; i < count; ++i) {
            Entry e;
            e.rect.lo_x = get_f64(p);
            e.rect.lo_y = get_f64(p + 8);
            e.rect.hi_x = get_f64(p + 16);
            e.rect.hi_y = get_f64(p + 24);
            e.payload = get_u64(p + 32);
            page.entries.push_back(e);
            p += kEntryBytes;
        }
    } else {
        if (count > kPointsPerPage) throw layout_error("corrupt page: count > capacity");
        page.points.reserve(count);
        for (uint16_t i = 0; i < count; ++i) {
            Point pt;
            pt.x = get_f64(p);
            pt.y = get_f64(p + 8);
            pt.id = get_u64(p + 16);
            page.points.push_back(pt);
            p += kPointEntryBytes;
        }
    }
    return page;
}

PageId BlockStore::write_page(const NodePage& page) {
    pages_.emplace_back();
    serialize_page(page, pages_.back().data());
    sums_.push_back(page_checksum(pages_.back().data()));
    io_.page_writes += 1;
    return pages_.size() - 1;
}

void BlockStore::rewrite_page(PageId id, const NodePage& page) {
    check_id(id);
    serialize_page(page, pages_[id].data());
    sums_[id] = page_checksum(pages_[id].data());
    io_.page_writes += 1;
}

NodePage BlockStore::read_page(PageId id, IoClass cls) {
    check_id(id);
    if (cls == IoClass::leaf)
        io_.leaf_reads += 1;
    else
        io_.inner_reads += 1;
    if (page_checksum(pages_[id].data()) != sums_[id]) {
        std::ostringstream os;
        os << "page " << id << " failed checksum verification";
        throw io_error(os.str());
    }
    return deserialize_page(pages_[id].data());
}

PageId BlockStore::alloc_pages(uint64_t n) {
    PageId first = pages_.size();
    NodePage empty;
    empty.cls = NodeClass::large_leaf;
    uint64_t sum = 0;
    for (uint64_t i = 0; i < n; ++i) {
        pages_.emplace_back();
        serialize_page(empty, pages_.back().data());
        if (i == 0) sum = page_checksum(pages_.back().data());
        sums_.push_back(sum);
    }
    io_.page_writes += n;
    return first;
}

const uint8_t* BlockStore::raw(PageId id) const {
    check_id(id);
    return pages_[id].data();
}

void BlockStore::check_id(PageId id) const {
    if (id >= pages_.size()) {
        std::ostringstream os;
        os << "page " << id << " not found (store has " << pages_.size() << ")";
        throw io_error(os.str());
    }
}

void BlockStore::save(const std::string& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw io_error("cannot open store file for write: " + path);
    for (const auto& page : pages_)
        f.write(reinterpret_cast<const char*>(page.data()), kPageSize);
    if (!f) throw io_error("short write on store file: " + path);
}

BlockStore BlockStore::load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw io_error("cannot open store file: " + path);
    f.seekg(0, std::ios::end);
    auto size = static_cast<uint64_t>(f.tellg());
    if (size % kPageSize != 0)
        throw io_error("store file size is not a multiple of the page size");
    f.seekg(0);
    BlockStore store;
    store.pages_.resize(size / kPageSize);
    for (auto& page : store.pages_) {
        f.read(reinterpret_cast<char*>(page.data()), kPageSize);
        if (!f) throw io_error("short read on store file: " + path);
        store.sums_.push_back(page_checksum(page.data()));
    }
    return store;
}

void sidecar_save(const std::string& path,
                  const std::map<std::string, std::string>& kv) {
    std::ofstream f(path);
    if (!f) throw io_error("cannot open sidecar for write: " + path);
    for (const auto& [k, v] : kv) f << k << " = " << v << "\n";
    if (!f) throw io_error("short write on sidecar: " + path);
}

std::map<std::string, std::string> sidecar_load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw io_error("cannot open sidecar: " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw io_error("bad sidecar line: " + line);
        auto trim = [](std::string s) {
            size_t a = s.find_first_not_of(" \t");
            size_t b = s.find_last_not_of(" \t");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return kv;
}

}  // namespace sbench
