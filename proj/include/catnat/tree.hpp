#pragma once

// Integer arithmetic for the binary tree behind the catnat parameterization.
//
// Internal nodes use heap indexing: the root is node 1 and node i has
// children 2i and 2i+1. A category k in [0, K) is identified by the bit
// string [b_1 .. b_H] of its binary expansion (b_1 most significant). At
// level h the bit b_h = 1 selects the child carrying probability a(s_i), which
// is the "left" child 2i; b_h = 0 selects 2i+1 and carries 1 - a(s_i).
//
// Scores are stored in heap order, so node i owns score index i - 1.

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

namespace catnat {

using Bits = std::vector<std::uint8_t>;

class TreeShape {
 public:
  // Throws InvalidArgument unless K is a power of two and K >= 2.
  explicit TreeShape(std::size_t categories);

  // Shape for a catnat score vector of length K - 1.
  static TreeShape from_score_count(std::size_t score_count);

  [[nodiscard]] std::size_t categories() const noexcept { return categories_; }
  [[nodiscard]] int depth() const noexcept { return depth_; }
  [[nodiscard]] std::size_t node_count() const noexcept { return categories_ - 1; }

  friend bool operator==(const TreeShape&, const TreeShape&) = default;

 private:
  std::size_t categories_;
  int depth_;
};

class TreeIndex {
 public:
  // Throws OutOfRange if node is not in [1, K - 1].
  TreeIndex(std::size_t node, const TreeShape& shape);

  // Node reached from the root by following the given branch bits.
  static TreeIndex from_path(const Bits& path_bits, const TreeShape& shape);
  static TreeIndex root(const TreeShape& shape) { return TreeIndex(1, shape); }

  [[nodiscard]] std::size_t node() const noexcept { return node_; }
  [[nodiscard]] int level() const noexcept;
  [[nodiscard]] Bits path_bits() const;
  // Position of this node's score in a heap-ordered score vector.
  [[nodiscard]] std::size_t score_index() const noexcept { return node_ - 1; }

  friend bool operator==(const TreeIndex& a, const TreeIndex& b) noexcept {
    return a.node_ == b.node_;
  }

 private:
  explicit TreeIndex(std::size_t node) : node_(node) {}
  std::size_t node_;
};

struct CategoryCode {
  std::size_t k = 0;
  Bits bits;

  friend bool operator==(const CategoryCode&, const CategoryCode&) = default;
};

// An ancestor of a leaf together with the branch bit the leaf takes there.
struct PathStep {
  std::size_t node = 0;
  std::uint8_t bit = 0;
};

// Child heap index for branch bit b (1 -> 2i, 0 -> 2i + 1).
[[nodiscard]] constexpr std::size_t child_for_bit(std::size_t node, std::uint8_t bit) noexcept {
  return 2 * node + (bit ? 0 : 1);
}

// Returns (left, right) = (2i, 2i + 1). Throws LeafNode at the bottom level.
std::pair<TreeIndex, TreeIndex> children(const TreeIndex& t, const TreeShape& shape);

// Throws OutOfRange if k >= K.
CategoryCode category_to_path(std::size_t k, const TreeShape& shape);
// Throws BadShape if the bit string is not H long or holds non-binary values.
std::size_t path_to_category(const Bits& bits, const TreeShape& shape);

// True iff a is a strict ancestor of b.
bool is_ancestor(const TreeIndex& a, const TreeIndex& b) noexcept;

// Every category in the subtree rooted at t, ordered by k.
std::vector<CategoryCode> leaves_under(const TreeIndex& t, const TreeShape& shape);

// The H internal nodes on the root-to-leaf path of category k, root first.
std::vector<PathStep> ancestors_of_category(std::size_t k, const TreeShape& shape);

// Whether node is on the root-to-leaf path of category k.
bool is_ancestor_of_category(std::size_t node, std::size_t k, const TreeShape& shape);

}  // namespace catnat
