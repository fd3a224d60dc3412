#include "cadmetrics/mesh.hpp"

#include <limits>

namespace cadmetrics {

Vec3 triangle_normal_scaled(Vec3 a, Vec3 b, Vec3 c) { return cross(b - a, c - a); }

double triangle_area(Vec3 a, Vec3 b, Vec3 c) { return 0.5 * norm(cross(b - a, c - a)); }

double signed_volume(const TriangleMesh& mesh) {
  double six_v = 0.0;
  for (const auto& t : mesh.triangles) {
    six_v += dot(mesh.vertices[t[0]], cross(mesh.vertices[t[1]], mesh.vertices[t[2]]));
  }
  return six_v / 6.0;
}

double surface_area(const TriangleMesh& mesh) {
  double area = 0.0;
  for (const auto& t : mesh.triangles) {
    area += triangle_area(mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]);
  }
  return area;
}

Aabb bounds(const TriangleMesh& mesh) {
  Aabb box;
  for (const auto& t : mesh.triangles) {
    for (auto i : t) box.expand(mesh.vertices[i]);
  }
  return box;
}

void append(TriangleMesh& into, const TriangleMesh& b) {
  const auto offset = static_cast<std::uint32_t>(into.vertices.size());
  into.vertices.insert(into.vertices.end(), b.vertices.begin(), b.vertices.end());
  into.triangles.reserve(into.triangles.size() + b.triangles.size());
  for (const auto& t : b.triangles) into.triangles.push_back({t[0] + offset, t[1] + offset, t[2] + offset});
}

TriangleMesh translated_scaled(const TriangleMesh& mesh, Vec3 translation, double scale) {
  TriangleMesh out = mesh;
  for (auto& v : out.vertices) v = (v + translation) * scale;
  return out;
}

void remove_unreferenced_vertices(TriangleMesh& mesh) {
  constexpr auto kUnused = std::numeric_limits<std::uint32_t>::max();
  std::vector<std::uint32_t> remap(mesh.vertices.size(), kUnused);
  for (const auto& t : mesh.triangles) {
    for (auto i : t) remap[i] = 0;
  }
  std::vector<Vec3> kept;
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    if (remap[i] == kUnused) continue;
    remap[i] = static_cast<std::uint32_t>(kept.size());
    kept.push_back(mesh.vertices[i]);
  }
  for (auto& t : mesh.triangles) {
    for (auto& i : t) i = remap[i];
  }
  mesh.vertices = std::move(kept);
}

bool is_index_valid(const TriangleMesh& mesh) {
  for (const auto& v : mesh.vertices) {
    if (!is_finite(v)) return false;
  }
  const auto n = mesh.vertices.size();
  for (const auto& t : mesh.triangles) {
    if (t[0] >= n || t[1] >= n || t[2] >= n) return false;
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) return false;
  }
  return true;
}

}  // namespace cadmetrics
