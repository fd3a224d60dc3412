#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <vector>

#include "cadmetrics/vec.hpp"

namespace cadmetrics::detail {

/// Static median-split bounding-volume hierarchy over boxes.
class BoxTree {
 public:
  explicit BoxTree(std::vector<Aabb> boxes) : boxes_(std::move(boxes)) {
    order_.resize(boxes_.size());
    std::iota(order_.begin(), order_.end(), 0U);
    if (!boxes_.empty()) {
      nodes_.resize(1);
      build(0, 0, boxes_.size());
    }
  }

  /// Calls fn(index) for every box overlapping `query`, in a deterministic order.
  template <typename Fn>
  void query(const Aabb& query, Fn&& fn) const {
    if (nodes_.empty()) return;
    std::vector<std::size_t> stack{0};
    while (!stack.empty()) {
      const Node& node = nodes_[stack.back()];
      stack.pop_back();
      if (!node.box.overlaps(query)) continue;
      if (node.left == 0) {
        for (std::size_t i = node.begin; i < node.end; ++i) {
          if (boxes_[order_[i]].overlaps(query)) fn(order_[i]);
        }
      } else {
        stack.push_back(node.left + 1);
        stack.push_back(node.left);
      }
    }
  }

  const Aabb& box(std::size_t i) const { return boxes_[i]; }

 private:
  struct Node {
    Aabb box;
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t left = 0;
  };

  void build(std::size_t slot, std::size_t begin, std::size_t end) {
    Aabb box;
    for (std::size_t i = begin; i < end; ++i) box.expand(boxes_[order_[i]]);
    nodes_[slot] = Node{box, begin, end, 0};
    if (end - begin <= 4) return;
    const Vec3 ext = box.extent();
    const int axis = ext.x >= ext.y && ext.x >= ext.z ? 0 : (ext.y >= ext.z ? 1 : 2);
    const std::size_t mid = (begin + end) / 2;
    std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin),
                     order_.begin() + static_cast<std::ptrdiff_t>(mid),
                     order_.begin() + static_cast<std::ptrdiff_t>(end), [&](auto l, auto r) {
                       const double a = boxes_[l].center()[axis];
                       const double b = boxes_[r].center()[axis];
                       return a < b || (a == b && l < r);
                     });
    const std::size_t left = nodes_.size();
    nodes_[slot].left = left;
    nodes_.resize(nodes_.size() + 2);
    build(left, begin, mid);
    build(left + 1, mid, end);
  }

  std::vector<Aabb> boxes_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

}  // namespace cadmetrics::detail
