#include "sbench/learn.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

#include "sbench/errors.hpp"
#include "sbench/index_dp.hpp"
#include "sbench/index_mp.hpp"
#include "sbench/index_sp.hpp"
#include "sbench/query.hpp"
#include "sbench/rng.hpp"
#include "sbench/storage.hpp"

namespace sbench {

namespace {

MBR points_mbr(const std::vector<Point>& pts) {
    MBR box = mbr_of(pts.front());
    for (const Point& p : pts) box = mbr_union(box, mbr_of(p));
    return box;
}

double blocks(size_t n) {
    return double((n + kStandardCap - 1) / kStandardCap);
}

// ---- least squares ------------------------------------------------------

// Solve the normal equations for y ~ w . f + b over `dim` features.
// Near-zero coefficients are snapped to exact zero so score ties that
// exist in the target survive fitting noise.
void fit_linear(const std::vector<std::array<double, 4>>& rows,
                const std::vector<double>& y, int dim, double* w, double* bias) {
    const int m = dim + 1;  // + bias column
    double a[5][5] = {};
    double rhs[5] = {};
    for (size_t r = 0; r < rows.size(); ++r) {
        double f[5];
        for (int i = 0; i < dim; ++i) f[i] = rows[r][i];
        f[dim] = 1.0;
        for (int i = 0; i < m; ++i) {
            for (int j = 0; j < m; ++j) a[i][j] += f[i] * f[j];
            rhs[i] += f[i] * y[r];
        }
    }
    double scale = 0;
    for (int i = 0; i < m; ++i) scale = std::max(scale, std::abs(a[i][i]));
    for (int col = 0; col < m; ++col) {
        int piv = col;
        for (int r = col + 1; r < m; ++r)
            if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
        if (std::abs(a[piv][col]) <= scale * 1e-12) {
            // dependent column: force its coefficient to zero
            for (int r = 0; r < m; ++r) a[r][col] = 0;
            a[col][col] = 1;
            rhs[col] = 0;
            continue;
        }
        if (piv != col) {
            for (int j = 0; j < m; ++j) std::swap(a[piv][j], a[col][j]);
            std::swap(rhs[piv], rhs[col]);
        }
        for (int r = 0; r < m; ++r) {
            if (r == col) continue;
            double k = a[r][col] / a[col][col];
            if (k == 0) continue;
            for (int j = 0; j < m; ++j) a[r][j] -= k * a[col][j];
            rhs[r] -= k * rhs[col];
        }
    }
    double sol[5];
    double mag = 0;
    for (int i = 0; i < m; ++i) {
        sol[i] = rhs[i] / a[i][i];
        mag = std::max(mag, std::abs(sol[i]));
    }
    for (int i = 0; i < m; ++i)
        if (std::abs(sol[i]) < mag * 1e-9) sol[i] = 0;
    for (int i = 0; i < dim; ++i) w[i] = sol[i];
    *bias = sol[dim];
}

// ---- probe workload -----------------------------------------------------

std::vector<MBR> make_probes(const std::vector<Point>& sample, uint32_t count,
                             Rng& rng) {
    MBR box = points_mbr(sample);
    double ex = (box.hi_x - box.lo_x) * 0.001;
    double ey = (box.hi_y - box.lo_y) * 0.001;
    std::vector<MBR> out;
    out.reserve(count);
    for (uint32_t i = 0; i < count; ++i) {
        const Point& c = sample[rng.uniform_below(sample.size())];
        out.push_back({c.x - ex / 2, c.y - ey / 2, c.x + ex / 2, c.y + ey / 2});
    }
    return out;
}

double probe_io(DPIndex& tree, const std::vector<MBR>& probes) {
    IndexHandle h(tree);
    uint64_t total = 0;
    for (const MBR& q : probes) {
        QueryResult r = range_query(h, q);
        total += r.leaf_io + r.inner_io;
    }
    return double(total);
}

}  // namespace

// ---- rlr policy ---------------------------------------------------------

PolicyModel train_rlr(const std::vector<Point>& sample, uint32_t epochs,
                      uint64_t seed, const TrainConfig& cfg) {
    if (sample.size() < 1000)
        throw config_error("rlr training needs at least 1000 sample points");
    if (epochs < 1) throw config_error("rlr training needs at least 1 epoch");

    Rng rng(seed);
    std::vector<MBR> probes = make_probes(sample, cfg.probe_count, rng);

    PolicyModel pol;
    double baseline = 0;
    uint64_t probes_done = 0;
    std::vector<std::pair<bool, std::array<double, 4>>> window;
    const uint64_t total = uint64_t(epochs) * sample.size();
    uint64_t t = 0;

    for (uint32_t e = 0; e < epochs; ++e) {
        DPIndex tree(DPVariant::rlr, cfg.fill_ratio);
        tree.set_rlr_hook([&](bool is_split,
                              const std::vector<std::array<double, 4>>& feats,
                              size_t) -> size_t {
            double frac = total > 1 ? double(t) / double(total - 1) : 1.0;
            double eps = cfg.eps_hi + (cfg.eps_lo - cfg.eps_hi) * frac;
            size_t a;
            if (rng.uniform01() < eps) {
                a = rng.uniform_below(feats.size());
            } else {
                const PolicyWeights& w = is_split ? pol.split : pol.choose;
                a = 0;
                double best = w.score(feats[0].data());
                bool tie = false;
                for (size_t i = 1; i < feats.size(); ++i) {
                    double s = w.score(feats[i].data());
                    if (s > best) {
                        best = s;
                        a = i;
                        tie = false;
                    } else if (s == best) {
                        tie = true;
                    }
                }
                if (tie) a = is_split ? SIZE_MAX : 0;
            }
            if (a != SIZE_MAX) window.push_back({is_split, feats[a]});
            return a;
        });
        for (size_t i = 0; i < sample.size(); ++i) {
            tree.insert(sample[i]);
            ++t;
            if ((i + 1) % cfg.probe_every != 0) continue;
            double io = probe_io(tree, probes);
            if (probes_done == 0) baseline = io;
            double r = (baseline - io) / std::max(baseline, 1.0);
            probes_done += 1;
            baseline += (io - baseline) / double(probes_done);
            for (const auto& [split_dec, f] : window) {
                PolicyWeights& w = split_dec ? pol.split : pol.choose;
                double delta = r - w.score(f.data());
                for (int j = 0; j < 4; ++j) w.w[j] += cfg.alpha * delta * f[j];
                w.bias += cfg.alpha * delta;
            }
            window.clear();
        }
        window.clear();
    }

    // Validation gate: the policy ships only if it beats the plain R-tree
    // on the probe workload; otherwise zero weights reproduce it exactly.
    DPIndex trained(DPVariant::rlr, cfg.fill_ratio, pol);
    DPIndex plain(DPVariant::rtree, cfg.fill_ratio);
    for (const Point& p : sample) {
        trained.insert(p);
        plain.insert(p);
    }
    if (probe_io(trained, probes) > probe_io(plain, probes)) pol = PolicyModel{};

    pol.meta = {epochs, sample.size(), seed};
    return pol;
}

// ---- qd selector --------------------------------------------------------

namespace {

struct CutSides {
    std::vector<Point> left, right;
    MBR left_region, right_region;
};

CutSides apply_cut(const std::vector<Point>& pts, const MBR& region,
                   const CutCandidate& c) {
    CutSides s;
    for (const Point& p : pts) {
        double coord = c.axis == 0 ? p.x : p.y;
        (coord <= c.value ? s.left : s.right).push_back(p);
    }
    s.left_region = region;
    s.right_region = region;
    if (c.axis == 0) {
        s.left_region.hi_x = c.value;
        s.right_region.lo_x = c.value;
    } else {
        s.left_region.hi_y = c.value;
        s.right_region.lo_y = c.value;
    }
    return s;
}

}  // namespace

double qd_greedy_cost(const std::vector<Point>& pts, const MBR& region,
                      const std::vector<MBR>& charged,
                      const std::vector<MBR>& all_queries, int depth,
                      uint32_t rem) {
    if (pts.empty() || charged.empty()) return 0;
    double base = double(charged.size()) * blocks(pts.size());
    if (rem == 0 || pts.size() <= kStandardCap) return base;
    std::vector<CutCandidate> cands =
        cut_candidates(pts, region, depth % 2, all_queries);
    if (cands.empty()) return base;
    size_t g = greedy_cut_index(cands, pts, region, all_queries);
    const CutCandidate& c = cands[g];
    CutSides s = apply_cut(pts, region, c);
    std::vector<MBR> ql, qr;
    for (const MBR& q : charged) {
        double lo = c.axis == 0 ? q.lo_x : q.lo_y;
        double hi = c.axis == 0 ? q.hi_x : q.hi_y;
        if (lo <= c.value) ql.push_back(q);
        if (hi > c.value) qr.push_back(q);
    }
    return qd_greedy_cost(s.left, s.left_region, ql, all_queries, depth + 1,
                          rem - 1) +
           qd_greedy_cost(s.right, s.right_region, qr, all_queries, depth + 1,
                          rem - 1);
}

namespace {

struct QdEpisodes {
    std::vector<std::array<double, 4>> feats;
    std::vector<double> targets;
    uint64_t decisions = 0;
};

void qd_episode_rec(const std::vector<Point>& pts, const MBR& region,
                    const std::vector<MBR>& queries, int depth,
                    uint32_t rollout_depth, QdEpisodes* out) {
    if (pts.size() <= kStandardCap) return;
    std::vector<CutCandidate> cands =
        cut_candidates(pts, region, depth % 2, queries);
    if (cands.empty()) return;

    std::vector<MBR> charged;
    for (const MBR& q : queries)
        if (mbr_intersects(q, region)) charged.push_back(q);
    double base = double(charged.size()) * blocks(pts.size());

    std::vector<double> raw(cands.size());
    std::vector<CutSides> sides(cands.size());
    for (size_t i = 0; i < cands.size(); ++i) {
        const CutCandidate& c = cands[i];
        sides[i] = apply_cut(pts, region, c);
        std::vector<MBR> ql, qr;
        for (const MBR& q : charged) {
            double lo = c.axis == 0 ? q.lo_x : q.lo_y;
            double hi = c.axis == 0 ? q.hi_x : q.hi_y;
            if (lo <= c.value) ql.push_back(q);
            if (hi > c.value) qr.push_back(q);
        }
        double after = qd_greedy_cost(sides[i].left, sides[i].left_region, ql,
                                      queries, depth + 1, rollout_depth) +
                       qd_greedy_cost(sides[i].right, sides[i].right_region,
                                      qr, queries, depth + 1, rollout_depth);
        raw[i] = base - after;
        double f[3];
        qd_cut_features(cands, i, std::span<const Point>(pts), region, queries,
                        f);
        out->feats.push_back({f[0], f[1], f[2], 0});
        out->targets.push_back(base > 0 ? raw[i] / base : 0.0);
    }
    out->decisions += 1;

    // best score; exact ties resolved toward the kd median, as the
    // greedy rule does
    double best = *std::max_element(raw.begin(), raw.end());
    size_t pick = cands.size();
    double pick_dist = 0;
    double med[2] = {lower_median(std::span<const Point>(pts), 0),
                     lower_median(std::span<const Point>(pts), 1)};
    for (size_t i = 0; i < cands.size(); ++i) {
        if (raw[i] != best) continue;
        double d = std::abs(cands[i].value - med[cands[i].axis]);
        if (pick == cands.size() || d < pick_dist) {
            pick = i;
            pick_dist = d;
        }
    }
    qd_episode_rec(sides[pick].left, sides[pick].left_region, queries,
                   depth + 1, rollout_depth, out);
    qd_episode_rec(sides[pick].right, sides[pick].right_region, queries,
                   depth + 1, rollout_depth, out);
}

}  // namespace

QdSelector train_qd(const std::vector<Point>& sample,
                    const std::vector<MBR>& training_queries,
                    uint32_t rollout_depth, uint64_t seed,
                    const TrainConfig& cfg) {
    (void)cfg;
    if (sample.empty()) throw config_error("qd training needs sample points");
    if (training_queries.empty())
        throw config_error("qd training needs at least 1 training query");

    MBR region{-std::numeric_limits<double>::infinity(),
               -std::numeric_limits<double>::infinity(),
               std::numeric_limits<double>::infinity(),
               std::numeric_limits<double>::infinity()};
    QdEpisodes ep;
    qd_episode_rec(sample, region, training_queries, 0, rollout_depth, &ep);

    QdSelector sel;
    sel.rollout_depth = rollout_depth;
    if (!ep.feats.empty()) fit_linear(ep.feats, ep.targets, 3, sel.w, &sel.bias);
    sel.meta = {ep.decisions, sample.size(), seed};
    return sel;
}

// ---- bm-tree curve ------------------------------------------------------

namespace {

struct QtNode {
    bool part = false;
    int axis = 0, k = 0;
    int child[2] = {-1, -1};
    size_t part_id = 0;
};

struct QtPart {
    int xu = 0, yu = 0;  // bits consumed by the quadtree prefix
};

struct Quadtree {
    std::vector<QtNode> nodes;
    std::vector<QtPart> parts;
    int bits = 0;
};

int build_qt(Quadtree* qt, std::vector<std::pair<uint32_t, uint32_t>>& cells,
             std::vector<size_t> idx, uint32_t level, int xu, int yu,
             uint32_t height, uint32_t threshold) {
    int used[2] = {xu, yu};
    int axis = int(level % 2);
    if (used[axis] >= qt->bits) axis ^= 1;
    bool can_split = level < height && used[axis] < qt->bits &&
                     idx.size() > threshold;
    int id = int(qt->nodes.size());
    qt->nodes.push_back(QtNode{});
    if (!can_split) {
        qt->nodes[id].part = true;
        qt->nodes[id].part_id = qt->parts.size();
        qt->parts.push_back(QtPart{xu, yu});
        return id;
    }
    int k = used[axis] + 1;
    uint32_t mask = 1u << (qt->bits - k);
    std::vector<size_t> lo, hi;
    for (size_t i : idx) {
        uint32_t c = axis == 0 ? cells[i].first : cells[i].second;
        (c & mask ? hi : lo).push_back(i);
    }
    idx.clear();
    qt->nodes[id].axis = axis;
    qt->nodes[id].k = k;
    int nxu = xu + (axis == 0), nyu = yu + (axis == 1);
    int c0 = build_qt(qt, cells, std::move(lo), level + 1, nxu, nyu, height,
                      threshold);
    int c1 = build_qt(qt, cells, std::move(hi), level + 1, nxu, nyu, height,
                      threshold);
    qt->nodes[id].child[0] = c0;
    qt->nodes[id].child[1] = c1;
    return id;
}

// Plain-interleave continuation for a cell whose prefix consumed xu x-bits
// and yu y-bits.
std::vector<int> canonical_order(int bits, int xu, int yu) {
    std::vector<int> out;
    int left[2] = {bits - xu, bits - yu};
    int level = xu + yu;
    while (left[0] + left[1] > 0) {
        int ax = level % 2;
        if (left[ax] == 0) ax ^= 1;
        out.push_back(ax);
        left[ax] -= 1;
        level += 1;
    }
    return out;
}

int emit_uniform(BMTreeCurve* curve, const std::vector<int>& order, size_t pos,
                 int xc, int yc) {
    if (pos == order.size()) return curve->add_leaf();
    int axis = order[pos];
    int k = (axis == 0 ? xc : yc) + 1;
    int id = curve->add_internal(axis, k);
    int nxc = xc + (axis == 0), nyc = yc + (axis == 1);
    int c0 = emit_uniform(curve, order, pos + 1, nxc, nyc);
    int c1 = emit_uniform(curve, order, pos + 1, nxc, nyc);
    curve->nodes[id].child[0] = c0;
    curve->nodes[id].child[1] = c1;
    return id;
}

int emit_curve(BMTreeCurve* curve, const Quadtree& qt, int qid,
               const std::vector<std::vector<int>>& orders) {
    const QtNode& n = qt.nodes[qid];
    if (n.part) {
        const QtPart& p = qt.parts[n.part_id];
        return emit_uniform(curve, orders[n.part_id], 0, p.xu, p.yu);
    }
    int id = curve->add_internal(n.axis, n.k);
    int c0 = emit_curve(curve, qt, n.child[0], orders);
    int c1 = emit_curve(curve, qt, n.child[1], orders);
    curve->nodes[id].child[0] = c0;
    curve->nodes[id].child[1] = c1;
    return id;
}

BMTreeCurve stitch_curve(const Quadtree& qt,
                         const std::vector<std::vector<int>>& orders) {
    BMTreeCurve curve;
    curve.bits = qt.bits;
    emit_curve(&curve, qt, 0, orders);
    return curve;
}

double measured_reward(const BMTreeCurve& curve,
                       const std::vector<Point>& sample,
                       const std::vector<MBR>& queries) {
    MPIndex idx(MPVariant::bmtree, sample, curve.bits, curve);
    IndexHandle h(idx);
    uint64_t leaf = 0;
    for (const MBR& q : queries) leaf += range_query(h, q).leaf_io;
    return -double(leaf);
}

// Analytic cost model: sort the sample by candidate key, chunk into blocks
// of leaf capacity, and charge a query every block whose cell bounding box
// intersects it. No index is built and no query executed.
double estimated_reward(const BMTreeCurve& curve,
                        const std::vector<Point>& sample, const MBR& domain,
                        const std::vector<MBR>& queries) {
    struct Cell {
        uint64_t key;
        uint32_t xc, yc;
    };
    std::vector<Cell> cells;
    cells.reserve(sample.size());
    for (const Point& p : sample) {
        uint32_t xc = quantize(p.x, domain.lo_x, domain.hi_x, curve.bits);
        uint32_t yc = quantize(p.y, domain.lo_y, domain.hi_y, curve.bits);
        cells.push_back({bmtree_eval_cell(curve, xc, yc), xc, yc});
    }
    std::sort(cells.begin(), cells.end(),
              [](const Cell& a, const Cell& b) { return a.key < b.key; });

    struct CellBox {
        uint32_t xlo, xhi, ylo, yhi;
    };
    std::vector<CellBox> blocks;
    for (size_t i = 0; i < cells.size(); i += kStandardCap) {
        size_t j = std::min(cells.size(), i + kStandardCap);
        CellBox b{UINT32_MAX, 0, UINT32_MAX, 0};
        for (size_t k = i; k < j; ++k) {
            b.xlo = std::min(b.xlo, cells[k].xc);
            b.xhi = std::max(b.xhi, cells[k].xc);
            b.ylo = std::min(b.ylo, cells[k].yc);
            b.yhi = std::max(b.yhi, cells[k].yc);
        }
        blocks.push_back(b);
    }

    uint64_t total = 0;
    for (const MBR& q : queries) {
        if (!mbr_intersects(q, domain)) continue;
        uint32_t qxlo = quantize(std::max(q.lo_x, domain.lo_x), domain.lo_x,
                                 domain.hi_x, curve.bits);
        uint32_t qxhi = quantize(std::min(q.hi_x, domain.hi_x), domain.lo_x,
                                 domain.hi_x, curve.bits);
        uint32_t qylo = quantize(std::max(q.lo_y, domain.lo_y), domain.lo_y,
                                 domain.hi_y, curve.bits);
        uint32_t qyhi = quantize(std::min(q.hi_y, domain.hi_y), domain.lo_y,
                                 domain.hi_y, curve.bits);
        for (const CellBox& b : blocks)
            if (b.xlo <= qxhi && qxlo <= b.xhi && b.ylo <= qyhi &&
                qylo <= b.yhi)
                ++total;
    }
    return -double(total);
}

}  // namespace

BMTreeCurve train_bmtree(const std::vector<Point>& sample, uint32_t height,
                         const std::vector<MBR>& training_queries,
                         const RewardEstimator& reward, uint64_t seed,
                         const TrainConfig& cfg) {
    (void)seed;
    if (sample.empty()) throw config_error("curve training needs sample points");
    int bits = cfg.curve_bits;
    if (height < 1 || height > uint32_t(2 * bits))
        throw config_error("curve height must be in [1, 2*bits]");

    MBR domain = points_mbr(sample);
    std::vector<std::pair<uint32_t, uint32_t>> cells;
    cells.reserve(sample.size());
    for (const Point& p : sample)
        cells.push_back({quantize(p.x, domain.lo_x, domain.hi_x, bits),
                         quantize(p.y, domain.lo_y, domain.hi_y, bits)});

    Quadtree qt;
    qt.bits = bits;
    std::vector<size_t> all(sample.size());
    for (size_t i = 0; i < all.size(); ++i) all[i] = i;
    build_qt(&qt, cells, std::move(all), 0, 0, 0, height, cfg.cell_threshold);

    std::vector<std::vector<int>> orders(qt.parts.size());
    for (size_t i = 0; i < qt.parts.size(); ++i)
        orders[i] = canonical_order(bits, qt.parts[i].xu, qt.parts[i].yu);

    auto score = [&](const std::vector<std::vector<int>>& ords) {
        BMTreeCurve cand = stitch_curve(qt, ords);
        return reward.mode == RewardMode::measured
                   ? measured_reward(cand, sample, training_queries)
                   : estimated_reward(cand, sample, domain, training_queries);
    };

    uint32_t beam_w = std::max<uint32_t>(1, cfg.beam_width);
    for (size_t pid = 0; pid < qt.parts.size(); ++pid) {
        const QtPart& part = qt.parts[pid];
        size_t m = orders[pid].size();
        if (m <= 1) continue;
        struct State {
            std::vector<int> prefix;
            double score = 0;
        };
        std::vector<State> beam{State{}};
        for (size_t step = 0; step < m; ++step) {
            std::vector<State> next;
            for (const State& st : beam) {
                int used[2] = {part.xu, part.yu};
                for (int ax : st.prefix) used[ax] += 1;
                int canon = int((used[0] + used[1]) % 2);
                if (used[canon] >= bits) canon ^= 1;
                for (int ax : {canon, canon ^ 1}) {
                    if (used[ax] >= bits) continue;
                    State ext;
                    ext.prefix = st.prefix;
                    ext.prefix.push_back(ax);
                    std::vector<std::vector<int>> trial = orders;
                    trial[pid] = ext.prefix;
                    // complete with the canonical continuation
                    int left[2] = {bits - used[0] - (ax == 0),
                                   bits - used[1] - (ax == 1)};
                    int lvl = used[0] + used[1] + 1;
                    while (left[0] + left[1] > 0) {
                        int a2 = lvl % 2;
                        if (left[a2] == 0) a2 ^= 1;
                        trial[pid].push_back(a2);
                        left[a2] -= 1;
                        lvl += 1;
                    }
                    ext.score = score(trial);
                    next.push_back(std::move(ext));
                }
            }
            std::stable_sort(next.begin(), next.end(),
                             [](const State& a, const State& b) {
                                 return a.score > b.score;
                             });
            if (next.size() > beam_w) next.resize(beam_w);
            beam = std::move(next);
        }
        orders[pid] = beam.front().prefix;
    }

    BMTreeCurve curve = stitch_curve(qt, orders);
    bmtree_validate(curve);
    return curve;
}

// ---- grid tuner ---------------------------------------------------------

TuneResult grid_tune(const TuneGrid& grid, const TuneEval& eval) {
    if (grid.params.empty()) throw config_error("tuning grid has no parameters");
    for (const TuneParam& p : grid.params)
        if (p.values.empty())
            throw config_error("tuning parameter " + p.name + " has no values");
    if (grid.t_build <= 0) throw config_error("build-cost limit must be positive");

    TuneResult res;
    std::vector<size_t> odo(grid.params.size(), 0);
    std::vector<std::vector<double>> failed;  // cost-increasing coordinates

    auto cost_coords = [&](const std::vector<size_t>& o) {
        std::vector<double> c;
        for (size_t i = 0; i < grid.params.size(); ++i)
            if (grid.params[i].cost_increasing)
                c.push_back(grid.params[i].values[o[i]]);
        return c;
    };

    bool more = true;
    while (more) {
        TuneRecord rec;
        for (size_t i = 0; i < grid.params.size(); ++i)
            rec.config[grid.params[i].name] = grid.params[i].values[odo[i]];

        std::vector<double> cc = cost_coords(odo);
        bool skip = false;
        for (const auto& f : failed) {
            bool dominates = !f.empty();
            for (size_t i = 0; i < f.size() && dominates; ++i)
                if (cc[i] < f[i]) dominates = false;
            if (dominates) {
                skip = true;
                break;
            }
        }

        if (skip) {
            rec.pruned = true;
        } else {
            TuneOutcome out = eval(rec.config);
            rec.build_cost = out.build_cost;
            rec.query_cost = out.query_cost;
            if (out.build_cost >= grid.t_build) {
                rec.over_limit = true;
                failed.push_back(cc);
            } else if (!res.found || out.query_cost < res.query_cost) {
                res.found = true;
                res.best = rec.config;
                res.build_cost = out.build_cost;
                res.query_cost = out.query_cost;
            }
        }
        res.trace.push_back(std::move(rec));

        // advance the odometer, last parameter fastest
        more = false;
        for (size_t i = grid.params.size(); i-- > 0;) {
            if (++odo[i] < grid.params[i].values.size()) {
                more = true;
                break;
            }
            odo[i] = 0;
        }
    }
    return res;
}

}  // namespace sbench
