#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "cadmetrics/vec.hpp"

namespace cadmetrics {

using Triangle = std::array<std::uint32_t, 3>;

/// Indexed triangle soup. Triangles are counter-clockwise seen from outside.
struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<Triangle> triangles;

  bool empty() const { return triangles.empty(); }
  Vec3 corner(std::size_t tri, int k) const { return vertices[triangles[tri][k]]; }

  friend bool operator==(const TriangleMesh&, const TriangleMesh&) = default;
};

Vec3 triangle_normal_scaled(Vec3 a, Vec3 b, Vec3 c);  // cross(b-a, c-a)
double triangle_area(Vec3 a, Vec3 b, Vec3 c);

/// Divergence-theorem volume: sum of v0 . (v1 x v2) / 6.
double signed_volume(const TriangleMesh& mesh);
double surface_area(const TriangleMesh& mesh);
Aabb bounds(const TriangleMesh& mesh);

/// Disjoint union: b's vertices are appended and its indices offset.
void append(TriangleMesh& into, const TriangleMesh& b);

/// p -> (p + translation) * scale for every vertex.
TriangleMesh translated_scaled(const TriangleMesh& mesh, Vec3 translation, double scale);

/// Drops vertices no triangle references, preserving relative order.
void remove_unreferenced_vertices(TriangleMesh& mesh);

/// Structural checks of the indexed-mesh invariants (indices in range,
/// distinct corners, finite coordinates).
bool is_index_valid(const TriangleMesh& mesh);

}  // namespace cadmetrics
