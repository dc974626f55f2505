#include "catnat/tree.hpp"

#include <bit>
#include <string>

#include "catnat/error.hpp"

namespace catnat {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::LeafNode: return "LeafNode";
    case ErrorKind::OutOfRange: return "OutOfRange";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::TooLarge: return "TooLarge";
    case ErrorKind::Singular: return "Singular";
    case ErrorKind::ZeroSupport: return "ZeroSupport";
    case ErrorKind::DegenerateConfig: return "DegenerateConfig";
    case ErrorKind::BadShape: return "BadShape";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

TreeShape::TreeShape(std::size_t categories) : categories_(categories), depth_(0) {
  if (categories < 2 || !std::has_single_bit(categories)) {
    throw Error(ErrorKind::InvalidArgument,
                "category count must be a power of two >= 2, got " + std::to_string(categories));
  }
  depth_ = std::countr_zero(categories);
}

TreeShape TreeShape::from_score_count(std::size_t score_count) {
  return TreeShape(score_count + 1);
}

TreeIndex::TreeIndex(std::size_t node, const TreeShape& shape) : node_(node) {
  if (node < 1 || node > shape.node_count()) {
    throw Error(ErrorKind::OutOfRange, "node " + std::to_string(node) + " outside [1, " +
                                           std::to_string(shape.node_count()) + "]");
  }
}

TreeIndex TreeIndex::from_path(const Bits& path_bits, const TreeShape& shape) {
  if (path_bits.size() >= static_cast<std::size_t>(shape.depth())) {
    throw Error(ErrorKind::OutOfRange, "path of length " + std::to_string(path_bits.size()) +
                                           " does not end at an internal node");
  }
  std::size_t node = 1;
  for (auto b : path_bits) {
    if (b > 1) throw Error(ErrorKind::BadShape, "path bits must be 0 or 1");
    node = child_for_bit(node, b);
  }
  return TreeIndex(node);
}

int TreeIndex::level() const noexcept { return std::bit_width(node_); }

Bits TreeIndex::path_bits() const {
  const int n = level() - 1;
  Bits bits(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    // Heap digit 0 means the 2i child, which carries b = 1.
    const auto digit = (node_ >> (n - 1 - j)) & 1U;
    bits[static_cast<std::size_t>(j)] = static_cast<std::uint8_t>(1U - digit);
  }
  return bits;
}

std::pair<TreeIndex, TreeIndex> children(const TreeIndex& t, const TreeShape& shape) {
  if (t.level() >= shape.depth()) {
    throw Error(ErrorKind::LeafNode,
                "node " + std::to_string(t.node()) + " sits on the bottom level; its children are categories");
  }
  return {TreeIndex(2 * t.node(), shape), TreeIndex(2 * t.node() + 1, shape)};
}

CategoryCode category_to_path(std::size_t k, const TreeShape& shape) {
  if (k >= shape.categories()) {
    throw Error(ErrorKind::OutOfRange, "category " + std::to_string(k) + " >= K = " +
                                           std::to_string(shape.categories()));
  }
  const int depth = shape.depth();
  CategoryCode code{k, Bits(static_cast<std::size_t>(depth))};
  for (int h = 0; h < depth; ++h) {
    code.bits[static_cast<std::size_t>(h)] = static_cast<std::uint8_t>((k >> (depth - 1 - h)) & 1U);
  }
  return code;
}

std::size_t path_to_category(const Bits& bits, const TreeShape& shape) {
  if (bits.size() != static_cast<std::size_t>(shape.depth())) {
    throw Error(ErrorKind::BadShape, "expected " + std::to_string(shape.depth()) + " bits, got " +
                                         std::to_string(bits.size()));
  }
  std::size_t k = 0;
  for (auto b : bits) {
    if (b > 1) throw Error(ErrorKind::BadShape, "path bits must be 0 or 1");
    k = (k << 1) | b;
  }
  return k;
}

bool is_ancestor(const TreeIndex& a, const TreeIndex& b) noexcept {
  std::size_t node = b.node();
  while (node > a.node()) {
    node >>= 1;
    if (node == a.node()) return true;
  }
  return false;
}

std::vector<CategoryCode> leaves_under(const TreeIndex& t, const TreeShape& shape) {
  const int free_bits = shape.depth() - t.level() + 1;
  std::size_t prefix = 0;
  for (auto b : t.path_bits()) prefix = (prefix << 1) | b;
  const std::size_t count = std::size_t{1} << free_bits;
  std::vector<CategoryCode> leaves;
  leaves.reserve(count);
  for (std::size_t low = 0; low < count; ++low) {
    leaves.push_back(category_to_path((prefix << free_bits) | low, shape));
  }
  return leaves;
}

std::vector<PathStep> ancestors_of_category(std::size_t k, const TreeShape& shape) {
  const auto code = category_to_path(k, shape);
  std::vector<PathStep> steps;
  steps.reserve(code.bits.size());
  std::size_t node = 1;
  for (auto b : code.bits) {
    steps.push_back({node, b});
    node = child_for_bit(node, b);
  }
  return steps;
}

bool is_ancestor_of_category(std::size_t node, std::size_t k, const TreeShape& shape) {
  if (node < 1 || node > shape.node_count()) return false;
  // Leaf of category k in a full heap of 2K - 1 slots.
  const std::size_t leaf = 2 * shape.categories() - 1 - k;
  std::size_t cur = leaf;
  while (cur > node) cur >>= 1;
  return cur == node;
}

}  // namespace catnat
