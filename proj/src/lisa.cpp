#include "sbench/lisa.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "sbench/errors.hpp"
#include "sbench/text.hpp"

namespace sbench {

namespace {

uint64_t used_pages(uint64_t count) {
    return (count + kPointsPerPage - 1) / kPointsPerPage;
}

std::string join_doubles(const std::vector<double>& v) {
    std::ostringstream os;
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) os << ",";
        os << fmt_g17(v[i]);
    }
    return os.str();
}

std::vector<double> split_doubles(const std::string& s) {
    std::vector<double> out;
    std::istringstream is(s);
    std::string tok;
    while (std::getline(is, tok, ','))
        if (!tok.empty()) out.push_back(std::stod(tok));
    return out;
}

}  // namespace

LisaIndex::LisaIndex(const std::vector<Point>& points, uint32_t grid_override) {
    if (points.empty()) throw config_error("lisa build needs a nonempty point list");
    n_ = points.size();
    grid_ = grid_override
                ? grid_override
                : uint32_t(std::ceil(std::sqrt(double(n_) / double(kLargeLeafCap)))) * 2;

    domain_ = mbr_of(points.front());
    for (const Point& p : points) domain_ = mbr_union(domain_, mbr_of(p));

    // Equi-depth boundaries: G-1 internal quantiles per axis, frozen at build.
    std::vector<double> xs, ys;
    xs.reserve(n_);
    ys.reserve(n_);
    for (const Point& p : points) {
        xs.push_back(p.x);
        ys.push_back(p.y);
    }
    std::sort(xs.begin(), xs.end());
    std::sort(ys.begin(), ys.end());
    for (uint32_t i = 1; i < grid_; ++i) {
        size_t at = size_t(uint64_t(i) * n_ / grid_);
        bx_.push_back(xs[at]);
        by_.push_back(ys[at]);
    }

    std::vector<std::pair<double, Point>> mapped;
    mapped.reserve(n_);
    for (const Point& p : points) mapped.push_back({map_value(p), p});
    std::sort(mapped.begin(), mapped.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first < b.first;
        return a.second.id < b.second.id;
    });

    size_t nshards = (n_ + kLargeLeafCap - 1) / kLargeLeafCap;
    for (size_t k = 0; k < nshards; ++k) {
        size_t lo = k * kLargeLeafCap;
        size_t hi = std::min<size_t>(n_, lo + kLargeLeafCap);
        Shard s;
        s.first = store_.alloc_pages(kLargeLeafPages);
        s.count = hi - lo;
        s.sorted_count = s.count;
        s.m_lo = mapped[lo].first;
        s.m_hi = mapped[hi - 1].first;
        shard_starts_.push_back(s.m_lo);
        for (size_t at = lo; at < hi; at += kPointsPerPage) {
            NodePage page;
            page.level = 0;
            page.cls = NodeClass::large_leaf;
            size_t end = std::min(hi, at + kPointsPerPage);
            double pmin = mapped[at].first, pmax = mapped[at].first;
            for (size_t i = at; i < end; ++i) {
                page.points.push_back(mapped[i].second);
                pmin = std::min(pmin, mapped[i].first);
                pmax = std::max(pmax, mapped[i].first);
            }
            store_.rewrite_page(s.first + (at - lo) / kPointsPerPage, page);
            s.page_ranges.push_back({pmin, pmax});
        }
        shards_.push_back(std::move(s));
    }
    stats_.height = 2;
    stats_.leaf_count = shards_.size();
}

uint32_t LisaIndex::cell_x(double x) const {
    return uint32_t(std::upper_bound(bx_.begin(), bx_.end(), x) - bx_.begin());
}

uint32_t LisaIndex::cell_y(double y) const {
    return uint32_t(std::upper_bound(by_.begin(), by_.end(), y) - by_.begin());
}

double LisaIndex::x_offset(uint32_t cx, double x) const {
    double lo = cx == 0 ? domain_.lo_x : bx_[cx - 1];
    double hi = cx == grid_ - 1 ? domain_.hi_x : bx_[cx];
    if (!(hi > lo)) return 0.0;
    return std::clamp((x - lo) / (hi - lo), 0.0, 1.0);
}

double LisaIndex::map_value(const Point& p) const {
    uint32_t cx = cell_x(p.x), cy = cell_y(p.y);
    return double(uint64_t(cy) * grid_ + cx) + x_offset(cx, p.x);
}

double LisaIndex::model_eval(double m) {
    store_.count_inner(1);
    size_t s = shard_starts_.size();
    if (m <= shard_starts_.front()) return 0.0;
    size_t k = size_t(std::upper_bound(shard_starts_.begin(), shard_starts_.end(), m) -
                      shard_starts_.begin()) - 1;
    if (k >= s - 1) return double(s - 1);
    double a = shard_starts_[k], b = shard_starts_[k + 1];
    double frac = b > a ? (m - a) / (b - a) : 0.0;
    return double(k) + frac;
}

size_t LisaIndex::shard_of(double m) {
    double v = model_eval(m);
    auto k = int64_t(std::floor(v));
    return size_t(std::clamp<int64_t>(k, 0, int64_t(shards_.size()) - 1));
}

std::vector<size_t> LisaIndex::lookup_point(const Point& p) {
    return {shard_of(map_value(p))};
}

std::vector<size_t> LisaIndex::lookup_range(const MBR& box) {
    std::set<size_t> cand;
    uint32_t cx0 = cell_x(box.lo_x), cx1 = cell_x(box.hi_x);
    uint32_t cy0 = cell_y(box.lo_y), cy1 = cell_y(box.hi_y);
    for (uint32_t cy = cy0; cy <= cy1; ++cy)
        for (uint32_t cx = cx0; cx <= cx1; ++cx) {
            double base = double(uint64_t(cy) * grid_ + cx);
            double a = base + x_offset(cx, box.lo_x);
            double b = base + x_offset(cx, box.hi_x);
            size_t k0 = shard_of(a), k1 = shard_of(b);
            for (size_t k = k0; k <= k1; ++k) cand.insert(k);
        }
    return {cand.begin(), cand.end()};
}

void LisaIndex::collect_pages(const Shard& s, double m_lo, double m_hi,
                              std::vector<PageId>* out) const {
    for (size_t j = 0; j < s.page_ranges.size(); ++j)
        if (s.page_ranges[j].first <= m_hi && s.page_ranges[j].second >= m_lo)
            out->push_back(s.first + j);
    for (const OverflowRun& run : s.overflow)
        for (size_t j = 0; j < run.page_ranges.size(); ++j)
            if (run.page_ranges[j].first <= m_hi && run.page_ranges[j].second >= m_lo)
                out->push_back(run.first + j);
}

std::vector<uint64_t> LisaIndex::point_query_ids(const Point& p) {
    double m = map_value(p);
    size_t k = shard_of(m);
    std::vector<PageId> pages;
    collect_pages(shards_[k], m, m, &pages);
    std::vector<uint64_t> out;
    for (PageId id : pages) {
        NodePage page = store_.read_page(id, IoClass::leaf);
        for (const Point& q : page.points)
            if (q.x == p.x && q.y == p.y) out.push_back(q.id);
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<Point> LisaIndex::range_query_points(const MBR& box) {
    std::set<PageId> pages;
    uint32_t cx0 = cell_x(box.lo_x), cx1 = cell_x(box.hi_x);
    uint32_t cy0 = cell_y(box.lo_y), cy1 = cell_y(box.hi_y);
    for (uint32_t cy = cy0; cy <= cy1; ++cy)
        for (uint32_t cx = cx0; cx <= cx1; ++cx) {
            double base = double(uint64_t(cy) * grid_ + cx);
            double a = base + x_offset(cx, box.lo_x);
            double b = base + x_offset(cx, box.hi_x);
            size_t k0 = shard_of(a), k1 = shard_of(b);
            std::vector<PageId> got;
            for (size_t k = k0; k <= k1; ++k)
                collect_pages(shards_[k], a, b, &got);
            pages.insert(got.begin(), got.end());
        }
    std::vector<Point> out;
    for (PageId id : pages) {
        NodePage page = store_.read_page(id, IoClass::leaf);
        for (const Point& q : page.points)
            if (mbr_contains(box, q)) out.push_back(q);
    }
    std::sort(out.begin(), out.end(),
              [](const Point& a, const Point& b) { return a.id < b.id; });
    return out;
}

std::vector<uint64_t> LisaIndex::range_query_ids(const MBR& box) {
    std::vector<uint64_t> out;
    for (const Point& p : range_query_points(box)) out.push_back(p.id);
    return out;
}

void LisaIndex::append_to_run(PageId first, uint64_t* count,
                              std::vector<std::pair<double, double>>* ranges,
                              const Point& p, double m) {
    uint64_t page_idx = *count / kPointsPerPage;
    PageId id = first + page_idx;
    NodePage page = store_.read_page(id, IoClass::leaf);
    page.points.push_back(p);
    store_.rewrite_page(id, page);
    if (page_idx == ranges->size())
        ranges->push_back({m, m});
    else {
        (*ranges)[page_idx].first = std::min((*ranges)[page_idx].first, m);
        (*ranges)[page_idx].second = std::max((*ranges)[page_idx].second, m);
    }
    *count += 1;
}

void LisaIndex::insert(const Point& p) {
    double m = map_value(p);
    size_t k = shard_of(m);
    Shard& s = shards_[k];
    if (s.count < kLargeLeafCap) {
        append_to_run(s.first, &s.count, &s.page_ranges, p, m);
    } else {
        OverflowRun* target = nullptr;
        for (OverflowRun& run : s.overflow)
            if (run.count < kLargeLeafCap) {
                target = &run;
                break;
            }
        if (!target) {
            OverflowRun run;
            run.first = store_.alloc_pages(kLargeLeafPages);
            PageId prev = s.overflow.empty() ? s.first : s.overflow.back().first;
            NodePage head = deserialize_page(store_.raw(prev));
            head.aux = run.first + 1;  // chain link, 0 means none
            store_.rewrite_page(prev, head);
            s.overflow.push_back(run);
            target = &s.overflow.back();
            stats_.splits += 1;
            stats_.leaf_count += 1;
        }
        append_to_run(target->first, &target->count, &target->page_ranges, p, m);
    }
    s.m_lo = std::min(s.m_lo, m);
    s.m_hi = std::max(s.m_hi, m);
    n_ += 1;
}

const BuildStats& LisaIndex::stats() const {
    stats_.page_count = store_.page_count();
    return stats_;
}

void LisaIndex::check_invariants() const {
    if (shards_.empty()) throw error("lisa index with no shards");
    for (size_t k = 1; k < shard_starts_.size(); ++k)
        if (shard_starts_[k] < shard_starts_[k - 1])
            throw error("lisa shard model is not monotone");
    uint64_t total = 0;
    uint64_t runs = 0;
    for (size_t k = 0; k < shards_.size(); ++k) {
        const Shard& s = shards_[k];
        double next = k + 1 < shards_.size() ? shard_starts_[k + 1]
                                             : std::numeric_limits<double>::infinity();
        bool degenerate = shard_starts_[k] == next;
        auto check_run = [&](PageId first, uint64_t count,
                             const std::vector<std::pair<double, double>>& ranges) {
            if (count > kLargeLeafCap) throw error("overfull lisa run");
            if (ranges.size() != used_pages(count))
                throw error("lisa page range table out of sync");
            for (uint64_t j = 0; j < used_pages(count); ++j) {
                NodePage page = deserialize_page(store_.raw(first + j));
                if (page.cls != NodeClass::large_leaf || page.level != 0)
                    throw error("lisa run page with wrong class or level");
                uint64_t expect = std::min<uint64_t>(kPointsPerPage,
                                                     count - j * kPointsPerPage);
                if (page.points.size() != expect)
                    throw error("lisa run page with unexpected fill");
                for (const Point& p : page.points) {
                    double m = map_value(p);
                    if (m < shard_starts_[k] || (!degenerate && m >= next))
                        throw error("lisa point mapped outside its shard");
                    if (m < ranges[j].first || m > ranges[j].second)
                        throw error("lisa point outside its page range");
                }
            }
            total += count;
            runs += 1;
        };
        check_run(s.first, s.count, s.page_ranges);
        for (const OverflowRun& run : s.overflow)
            check_run(run.first, run.count, run.page_ranges);
        if (s.m_lo > s.m_hi) throw error("lisa shard with inverted value range");
    }
    if (total != n_) throw error("lisa point count mismatch");
    if (runs != stats_.leaf_count) throw error("lisa run count mismatch");
}

void LisaIndex::rebuild_page_ranges() {
    auto fill = [&](PageId first, uint64_t count,
                    std::vector<std::pair<double, double>>* ranges) {
        ranges->clear();
        for (uint64_t j = 0; j < used_pages(count); ++j) {
            NodePage page = deserialize_page(store_.raw(first + j));
            double pmin = std::numeric_limits<double>::infinity(), pmax = -pmin;
            for (const Point& p : page.points) {
                double m = map_value(p);
                pmin = std::min(pmin, m);
                pmax = std::max(pmax, m);
            }
            ranges->push_back({pmin, pmax});
        }
    };
    for (Shard& s : shards_) {
        fill(s.first, s.count, &s.page_ranges);
        for (OverflowRun& run : s.overflow)
            fill(run.first, run.count, &run.page_ranges);
    }
}

void LisaIndex::save(const std::string& prefix) const {
    store_.save(prefix + ".pages");
    std::map<std::string, std::string> kv;
    kv["kind"] = "lisa";
    kv["n"] = std::to_string(n_);
    kv["grid"] = std::to_string(grid_);
    kv["domain"] = fmt_mbr(domain_);
    kv["bx"] = join_doubles(bx_);
    kv["by"] = join_doubles(by_);
    kv["starts"] = join_doubles(shard_starts_);
    kv["splits"] = std::to_string(stats_.splits);
    kv["shards"] = std::to_string(shards_.size());
    for (size_t k = 0; k < shards_.size(); ++k) {
        const Shard& s = shards_[k];
        std::ostringstream os;
        os << s.first << " " << s.count << " " << s.sorted_count << " "
           << fmt_g17(s.m_lo) << " " << fmt_g17(s.m_hi);
        kv["shard." + std::to_string(k)] = os.str();
        std::ostringstream ov;
        for (size_t i = 0; i < s.overflow.size(); ++i) {
            if (i) ov << ",";
            ov << s.overflow[i].first << ":" << s.overflow[i].count;
        }
        kv["shard." + std::to_string(k) + ".ov"] = ov.str();
    }
    sidecar_save(prefix + ".meta", kv);
}

LisaIndex LisaIndex::load(const std::string& prefix) {
    auto kv = sidecar_load(prefix + ".meta");
    if (kv.at("kind") != "lisa") throw config_error("sidecar is not a lisa index");
    LisaIndex idx;
    idx.store_ = BlockStore::load(prefix + ".pages");
    idx.n_ = std::stoull(kv.at("n"));
    idx.grid_ = uint32_t(std::stoul(kv.at("grid")));
    idx.domain_ = parse_mbr(kv.at("domain"));
    idx.bx_ = split_doubles(kv.at("bx"));
    idx.by_ = split_doubles(kv.at("by"));
    idx.shard_starts_ = split_doubles(kv.at("starts"));
    idx.stats_.splits = std::stoull(kv.at("splits"));
    size_t nshards = std::stoull(kv.at("shards"));
    uint64_t runs = 0;
    for (size_t k = 0; k < nshards; ++k) {
        Shard s;
        std::istringstream is(kv.at("shard." + std::to_string(k)));
        is >> s.first >> s.count >> s.sorted_count >> s.m_lo >> s.m_hi;
        std::string ov = kv.at("shard." + std::to_string(k) + ".ov");
        std::istringstream os(ov);
        std::string tok;
        while (std::getline(os, tok, ',')) {
            if (tok.empty()) continue;
            OverflowRun run;
            size_t colon = tok.find(':');
            run.first = std::stoull(tok.substr(0, colon));
            run.count = std::stoull(tok.substr(colon + 1));
            s.overflow.push_back(run);
        }
        runs += 1 + s.overflow.size();
        idx.shards_.push_back(std::move(s));
    }
    idx.stats_.height = 2;
    idx.stats_.leaf_count = runs;
    idx.rebuild_page_ranges();
    return idx;
}

}  // namespace sbench
