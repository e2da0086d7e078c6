#include "sbench/bmtree.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "sbench/errors.hpp"

namespace sbench {

namespace {

constexpr int kMaxBits = 10;  // full explicit tree has 2^(2*bits+1)-1 nodes

void validate_rec(const BMTreeCurve& c, int node, uint32_t consumed, int depth) {
    if (node < 0 || node >= static_cast<int>(c.nodes.size()))
        throw structure_error("bmtree: child index out of range");
    const BMTreeNode& n = c.nodes[node];
    int total = 2 * c.bits;
    if (n.axis < 0) {
        if (depth != total)
            throw structure_error("bmtree: leaf before all bits consumed");
        return;
    }
    if (depth >= total)
        throw structure_error("bmtree: path longer than 2*bits");
    if (n.axis > 1 || n.k < 1 || n.k > c.bits)
        throw structure_error("bmtree: bad bit name");
    uint32_t bit = uint32_t{1} << (n.axis * c.bits + (n.k - 1));
    if (consumed & bit)
        throw structure_error("bmtree: bit consumed twice on a path");
    validate_rec(c, n.child[0], consumed | bit, depth + 1);
    validate_rec(c, n.child[1], consumed | bit, depth + 1);
}

}  // namespace

void bmtree_validate(const BMTreeCurve& curve) {
    if (curve.bits < 1 || curve.bits > kMaxBits)
        throw structure_error("bmtree: bits out of range");
    if (curve.nodes.empty()) throw structure_error("bmtree: empty curve");
    validate_rec(curve, 0, 0, 0);
}

uint64_t bmtree_eval_cell(const BMTreeCurve& curve, uint32_t cx, uint32_t cy) {
    uint64_t key = 0;
    int node = 0;
    int steps = 0;
    while (true) {
        const BMTreeNode& n = curve.nodes[node];
        if (n.axis < 0) return key;
        if (++steps > 2 * curve.bits + 1)
            throw structure_error("bmtree: malformed curve (path too long)");
        uint32_t c = (n.axis == 0) ? cx : cy;
        uint64_t bit = (c >> (curve.bits - n.k)) & 1u;
        key = (key << 1) | bit;
        node = n.child[bit];
        if (node < 0) throw structure_error("bmtree: missing child");
    }
}

SFCKey bmtree_eval(const BMTreeCurve& curve, const Point& p, const MBR& domain) {
    if (!mbr_contains(domain, p))
        throw domain_error("bmtree_eval: point outside domain");
    uint32_t cx = quantize(p.x, domain.lo_x, domain.hi_x, curve.bits);
    uint32_t cy = quantize(p.y, domain.lo_y, domain.hi_y, curve.bits);
    return {bmtree_eval_cell(curve, cx, cy), curve.bits};
}

namespace {

int build_uniform_rec(BMTreeCurve& c,
                      const std::vector<std::pair<int, int>>& order,
                      size_t depth) {
    if (depth == order.size()) return c.add_leaf();
    int node = c.add_internal(order[depth].first, order[depth].second);
    int l = build_uniform_rec(c, order, depth + 1);
    int r = build_uniform_rec(c, order, depth + 1);
    c.nodes[node].child[0] = l;
    c.nodes[node].child[1] = r;
    return node;
}

}  // namespace

BMTreeCurve bmtree_uniform(int bits, const std::vector<std::pair<int, int>>& order) {
    if (bits < 1 || bits > kMaxBits)
        throw structure_error("bmtree: bits out of range");
    if (order.size() != static_cast<size_t>(2 * bits))
        throw structure_error("bmtree: order must list 2*bits bits");
    BMTreeCurve c;
    c.bits = bits;
    c.nodes.reserve((size_t{2} << (2 * bits)) - 1);
    build_uniform_rec(c, order, 0);
    bmtree_validate(c);
    return c;
}

BMTreeCurve bmtree_interleave(int bits) {
    std::vector<std::pair<int, int>> order;
    for (int k = 1; k <= bits; ++k) {
        order.emplace_back(0, k);
        order.emplace_back(1, k);
    }
    return bmtree_uniform(bits, order);
}

namespace {

void serialize_rec(const BMTreeCurve& c, int node, std::ostream& os) {
    const BMTreeNode& n = c.nodes[node];
    if (n.axis < 0) {
        os << "L\n";
        return;
    }
    os << "N " << (n.axis == 0 ? 'x' : 'y') << n.k << "\n";
    serialize_rec(c, n.child[0], os);
    serialize_rec(c, n.child[1], os);
}

int parse_rec(BMTreeCurve& c, std::istream& is) {
    std::string line;
    do {
        if (!std::getline(is, line))
            throw structure_error("bmtree: truncated curve file");
    } while (line.empty());
    if (line == "L") return c.add_leaf();
    if (line.size() < 4 || line[0] != 'N' || line[1] != ' ')
        throw structure_error("bmtree: bad line '" + line + "'");
    char ax = line[2];
    if (ax != 'x' && ax != 'y')
        throw structure_error("bmtree: bad axis in '" + line + "'");
    int k = 0;
    try {
        k = std::stoi(line.substr(3));
    } catch (const std::exception&) {
        throw structure_error("bmtree: bad bit index in '" + line + "'");
    }
    int node = c.add_internal(ax == 'x' ? 0 : 1, k);
    int l = parse_rec(c, is);
    int r = parse_rec(c, is);
    c.nodes[node].child[0] = l;
    c.nodes[node].child[1] = r;
    return node;
}

}  // namespace

void bmtree_serialize(const BMTreeCurve& curve, std::ostream& os) {
    serialize_rec(curve, 0, os);
}

BMTreeCurve bmtree_parse(std::istream& is) {
    BMTreeCurve c;
    parse_rec(c, is);
    int bits = 0;
    for (const BMTreeNode& n : c.nodes)
        if (n.axis >= 0 && n.k > bits) bits = n.k;
    c.bits = bits;
    bmtree_validate(c);
    return c;
}

void bmtree_save(const BMTreeCurve& curve, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw io_error("cannot open curve file for write: " + path);
    bmtree_serialize(curve, f);
    if (!f) throw io_error("short write on curve file: " + path);
}

BMTreeCurve bmtree_load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw io_error("cannot open curve file: " + path);
    return bmtree_parse(f);
}

}  // namespace sbench
