#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "sbench/geometry.hpp"

namespace sbench {

// Piecewise space-filling curve: a binary tree whose internal nodes each
// name one coordinate bit (axis + 1-based index from the MSB). Evaluating
// a point walks from the root, branching on the named bit; the branch bits
// concatenated along the path form the key.
struct BMTreeNode {
    int16_t axis = -1;  // 0 = x, 1 = y, -1 = leaf
    int16_t k = 0;      // bit index, 1 = most significant
    int32_t child[2] = {-1, -1};
};

struct BMTreeCurve {
    int bits = 0;  // resolution per dimension
    std::vector<BMTreeNode> nodes;  // nodes[0] is the root

    int add_leaf() {
        nodes.push_back(BMTreeNode{});
        return static_cast<int>(nodes.size()) - 1;
    }
    int add_internal(int axis, int k) {
        BMTreeNode n;
        n.axis = static_cast<int16_t>(axis);
        n.k = static_cast<int16_t>(k);
        nodes.push_back(n);
        return static_cast<int>(nodes.size()) - 1;
    }
};

// Complete curves only: every root-to-leaf path consumes each of the
// 2*bits coordinate bits exactly once. Throws structure_error otherwise.
void bmtree_validate(const BMTreeCurve& curve);

uint64_t bmtree_eval_cell(const BMTreeCurve& curve, uint32_t cx, uint32_t cy);
SFCKey bmtree_eval(const BMTreeCurve& curve, const Point& p, const MBR& domain);

// Plain x/y interleaving (x1 y1 x2 y2 ...); equivalent to z_encode.
BMTreeCurve bmtree_interleave(int bits);

// Same bit order applied on every path. order holds (axis, k) pairs,
// each (axis, k) with k in 1..bits appearing exactly once.
BMTreeCurve bmtree_uniform(int bits, const std::vector<std::pair<int, int>>& order);

// Text form: pre-order, one node per line, `N <axis><k>` or `L`.
void bmtree_serialize(const BMTreeCurve& curve, std::ostream& os);
BMTreeCurve bmtree_parse(std::istream& is);
void bmtree_save(const BMTreeCurve& curve, const std::string& path);
BMTreeCurve bmtree_load(const std::string& path);

}  // namespace sbench
