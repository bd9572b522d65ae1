#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "gridshield/strategy.hpp"

namespace gridshield {

/// Axis-aligned decision tree semantically equivalent to a strategy's cell
/// map: split thresholds lie on grid cell boundaries, leaves carry action
/// masks, and evaluation at any cell center equals the strategy's mask for
/// that cell. Immutable after construction.
struct DecisionTree {
  struct Node {
    bool leaf = true;
    std::uint8_t mask = 0;        // leaves
    std::uint32_t dim = 0;        // splits
    double threshold = 0.0;       // x[dim] < threshold goes left
    std::uint32_t left = 0, right = 0;
  };

  GridSpec grid;
  std::vector<std::string> actions;
  Transform transform;
  std::vector<Node> nodes;  // preorder, root at 0

  std::size_t node_count() const { return nodes.size(); }
  std::uint8_t evaluate(const Vec& t) const;
};

/// Compresses a strategy into an exactly equivalent tree by recursive
/// splitting on cell boundaries. Small 2-D strategies get the minimal tree
/// (dynamic program over sub-rectangles, quartic in the side lengths);
/// larger strategies use a greedy count-weighted entropy split, ties broken
/// by lowest dimension then lowest threshold.
DecisionTree to_tree(const Strategy& st);

// Tree file: magic "SHTR", then the same header as shield files, then a
// u64 node count and the preorder node list (u8 kind; splits carry
// u32 dim + f64 threshold, leaves a u8 mask).
void save_tree(const DecisionTree& tree, const std::filesystem::path& path);
DecisionTree load_tree(const std::filesystem::path& path);

}  // namespace gridshield
