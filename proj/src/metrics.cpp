#include "cadmetrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <unordered_map>

#include "bvh.hpp"

namespace cadmetrics {

namespace {

std::vector<std::vector<std::uint32_t>> vertex_triangles(const TriangleMesh& mesh) {
  std::vector<std::vector<std::uint32_t>> out(mesh.vertices.size());
  for (std::uint32_t t = 0; t < mesh.triangles.size(); ++t) {
    for (auto v : mesh.triangles[t]) out[v].push_back(t);
  }
  return out;
}

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0U); }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<std::size_t> parent_;
};

bool vertex_fans_are_disks(const TriangleMesh& mesh) {
  const auto incident = vertex_triangles(mesh);
  std::unordered_map<std::uint32_t, std::uint32_t> link;
  for (std::uint32_t v = 0; v < incident.size(); ++v) {
    const auto& tris = incident[v];
    if (tris.empty()) continue;
    link.clear();
    // Each incident triangle contributes a directed link edge opposite v.
    for (auto t : tris) {
      const auto& tri = mesh.triangles[t];
      const int k = tri[0] == v ? 0 : (tri[1] == v ? 1 : 2);
      const auto from = tri[(k + 1) % 3];
      const auto to = tri[(k + 2) % 3];
      if (!link.emplace(from, to).second) return false;
    }
    auto start = link.begin()->first;
    auto cur = start;
    std::size_t steps = 0;
    do {
      auto it = link.find(cur);
      if (it == link.end()) return false;
      cur = it->second;
      ++steps;
    } while (cur != start && steps <= tris.size());
    if (cur != start || steps != tris.size()) return false;
  }
  return true;
}

void require_watertight(const TriangleMesh& mesh, const char* which) {
  if (!is_watertight(mesh)) {
    throw MetricError(MetricErrorKind::PrerequisiteNotMet, std::string(which) + " mesh is not watertight");
  }
}

double segment_point_distance(Vec3 a, Vec3 b, Vec3 p) {
  const Vec3 d = b - a;
  const double len2 = squared_norm(d);
  double t = len2 > 0.0 ? dot(p - a, d) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return distance(a + d * t, p);
}

struct SignedEdge {
  Vec3 a;
  Vec3 b;
  double angle;
};

/// Signed dihedral angle of every edge with exactly two incident triangles.
std::vector<SignedEdge> signed_edges(const TriangleMesh& mesh) {
  const auto adjacency = EdgeAdjacency::build(mesh);
  std::vector<SignedEdge> out;
  out.reserve(adjacency.edges.size());
  for (const auto& [key, inc] : adjacency.edges) {
    if (inc.size() != 2) continue;
    const auto& t1 = mesh.triangles[inc[0].triangle];
    const auto& t2 = mesh.triangles[inc[1].triangle];
    const Vec3 n1 = normalized(triangle_normal_scaled(mesh.vertices[t1[0]], mesh.vertices[t1[1]], mesh.vertices[t1[2]]));
    const Vec3 n2 = normalized(triangle_normal_scaled(mesh.vertices[t2[0]], mesh.vertices[t2[1]], mesh.vertices[t2[2]]));
    const double angle = std::atan2(norm(cross(n1, n2)), dot(n1, n2));
    std::uint32_t opposite = t2[0];
    for (auto v : t2) {
      if (v != key.first && v != key.second) opposite = v;
    }
    const Vec3 a = mesh.vertices[key.first];
    const bool convex = dot(n1, mesh.vertices[opposite] - a) <= 0.0;
    out.push_back({a, mesh.vertices[key.second], convex ? angle : -angle});
  }
  return out;
}

// Projections onto `axis` are disjoint or only touch. A triangle may project to
// a single point, so this compares interval ends rather than overlap length.
bool separated_on(const std::array<Vec3, 3>& t1, const std::array<Vec3, 3>& t2, Vec3 axis, double eps) {
  double min1 = INFINITY, max1 = -INFINITY, min2 = INFINITY, max2 = -INFINITY;
  for (const Vec3& p : t1) {
    const double d = dot(axis, p);
    min1 = std::min(min1, d);
    max1 = std::max(max1, d);
  }
  for (const Vec3& p : t2) {
    const double d = dot(axis, p);
    min2 = std::min(min2, d);
    max2 = std::max(max2, d);
  }
  return max1 - min2 <= eps || max2 - min1 <= eps;
}

bool shares_vertex(const Triangle& a, const Triangle& b) {
  for (auto u : a) {
    for (auto v : b) {
      if (u == v) return true;
    }
  }
  return false;
}

}  // namespace

std::string_view to_string(MetricErrorKind kind) {
  switch (kind) {
    case MetricErrorKind::NonWatertight: return "NonWatertight";
    case MetricErrorKind::NonPositiveVolume: return "NonPositiveVolume";
    case MetricErrorKind::PrerequisiteNotMet: return "PrerequisiteNotMet";
    case MetricErrorKind::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

MetricError::MetricError(MetricErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

EdgeAdjacency EdgeAdjacency::build(const TriangleMesh& mesh) {
  EdgeAdjacency adj;
  for (std::uint32_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    for (int k = 0; k < 3; ++k) {
      const auto u = tri[k];
      const auto v = tri[(k + 1) % 3];
      adj.edges[{std::min(u, v), std::max(u, v)}].push_back({t, u < v});
    }
  }
  return adj;
}

MeshTopologyReport topology(const TriangleMesh& mesh) {
  MeshTopologyReport r;
  std::vector<bool> used(mesh.vertices.size(), false);
  for (const auto& t : mesh.triangles) {
    for (auto v : t) used[v] = true;
  }
  r.vertex_count = std::count(used.begin(), used.end(), true);
  r.edge_count = static_cast<std::int64_t>(EdgeAdjacency::build(mesh).edges.size());
  r.face_count = static_cast<std::int64_t>(mesh.triangles.size());
  r.euler_characteristic = r.vertex_count - r.edge_count + r.face_count;
  r.is_watertight = is_watertight(mesh);
  r.component_count = segment_count(mesh);
  return r;
}

bool is_watertight(const TriangleMesh& mesh) {
  if (mesh.empty() || !is_index_valid(mesh)) return false;
  const auto adjacency = EdgeAdjacency::build(mesh);
  for (const auto& [key, inc] : adjacency.edges) {
    if (inc.size() != 2 || inc[0].forward == inc[1].forward) return false;
  }
  return vertex_fans_are_disks(mesh);
}

std::int64_t euler_characteristic(const TriangleMesh& mesh) {
  std::vector<bool> used(mesh.vertices.size(), false);
  for (const auto& t : mesh.triangles) {
    for (auto v : t) used[v] = true;
  }
  const auto v = static_cast<std::int64_t>(std::count(used.begin(), used.end(), true));
  const auto e = static_cast<std::int64_t>(EdgeAdjacency::build(mesh).edges.size());
  return v - e + static_cast<std::int64_t>(mesh.triangles.size());
}

int eecm(const TriangleMesh& pred, const TriangleMesh& gt) {
  require_watertight(pred, "predicted");
  require_watertight(gt, "ground-truth");
  return euler_characteristic(pred) == euler_characteristic(gt) ? 1 : 0;
}

double sphericity(const TriangleMesh& mesh) {
  if (!is_watertight(mesh)) throw MetricError(MetricErrorKind::NonWatertight, "sphericity needs a closed mesh");
  const double volume = signed_volume(mesh);
  if (!(volume > 0.0)) throw MetricError(MetricErrorKind::NonPositiveVolume, "mesh volume is not positive");
  return std::cbrt(std::numbers::pi) * std::pow(6.0 * volume, 2.0 / 3.0) / surface_area(mesh);
}

double sphericity_discrepancy(const TriangleMesh& pred, const TriangleMesh& gt) {
  require_watertight(pred, "predicted");
  require_watertight(gt, "ground-truth");
  try {
    return std::abs(sphericity(pred) - sphericity(gt));
  } catch (const MetricError& e) {
    throw MetricError(MetricErrorKind::PrerequisiteNotMet, e.what());
  }
}

double mean_curvature_average(const TriangleMesh& mesh, double radius) {
  if (!(radius > 0.0)) throw MetricError(MetricErrorKind::InvalidArgument, "radius must be positive");
  if (!is_watertight(mesh)) throw MetricError(MetricErrorKind::NonWatertight, "curvature needs a closed mesh");

  const auto edges = signed_edges(mesh);
  std::vector<Aabb> boxes;
  boxes.reserve(edges.size());
  for (const auto& e : edges) {
    Aabb box;
    box.expand(e.a);
    box.expand(e.b);
    boxes.push_back(box);
  }
  const detail::BoxTree tree(std::move(boxes));

  std::vector<bool> used(mesh.vertices.size(), false);
  for (const auto& t : mesh.triangles) {
    for (auto v : t) used[v] = true;
  }
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
    if (!used[v]) continue;
    const Vec3 p = mesh.vertices[v];
    Aabb query;
    query.expand(p - Vec3{radius, radius, radius});
    query.expand(p + Vec3{radius, radius, radius});
    double kappa = 0.0;
    tree.query(query, [&](std::size_t i) {
      if (segment_point_distance(edges[i].a, edges[i].b, p) <= radius) kappa += edges[i].angle;
    });
    total += kappa;
    ++count;
  }
  return count ? total / static_cast<double>(count) : 0.0;
}

double dmcd(const TriangleMesh& pred, const TriangleMesh& gt, double radius) {
  require_watertight(pred, "predicted");
  require_watertight(gt, "ground-truth");
  auto normalized_kbar = [radius](const TriangleMesh& m) {
    const Aabb box = bounds(m);
    const double diag = box.diagonal();
    if (!(diag > 0.0)) throw MetricError(MetricErrorKind::PrerequisiteNotMet, "degenerate bounding box");
    return mean_curvature_average(translated_scaled(m, -box.center(), 1.0 / diag), radius);
  };
  return std::abs(normalized_kbar(pred) - normalized_kbar(gt));
}

double dangling_edge_length(const TriangleMesh& mesh) {
  double total = 0.0;
  for (const auto& [key, inc] : EdgeAdjacency::build(mesh).edges) {
    if (inc.size() < 2) total += distance(mesh.vertices[key.first], mesh.vertices[key.second]);
  }
  return total;
}

bool triangles_intersect(const std::array<Vec3, 3>& t1, const std::array<Vec3, 3>& t2, double eps) {
  const Vec3 n1 = normalized(cross(t1[1] - t1[0], t1[2] - t1[0]));
  const Vec3 n2 = normalized(cross(t2[1] - t2[0], t2[2] - t2[0]));
  if (squared_norm(n1) == 0.0 || squared_norm(n2) == 0.0) return false;

  bool coplanar = true;
  for (const Vec3& p : t2) coplanar = coplanar && std::abs(dot(n1, p - t1[0])) <= eps;
  for (const Vec3& p : t1) coplanar = coplanar && std::abs(dot(n2, p - t2[0])) <= eps;

  if (coplanar) {
    for (const auto* t : {&t1, &t2}) {
      for (int k = 0; k < 3; ++k) {
        const Vec3 axis = normalized(cross(n1, (*t)[(k + 1) % 3] - (*t)[k]));
        if (squared_norm(axis) == 0.0) continue;
        if (separated_on(t1, t2, axis, eps)) return false;
      }
    }
    return true;
  }

  if (separated_on(t1, t2, n1, eps) || separated_on(t1, t2, n2, eps)) return false;
  for (int i = 0; i < 3; ++i) {
    const Vec3 e1 = t1[(i + 1) % 3] - t1[i];
    for (int j = 0; j < 3; ++j) {
      const Vec3 axis = cross(e1, t2[(j + 1) % 3] - t2[j]);
      const double len = norm(axis);
      if (len <= 1e-12 * norm(e1) * norm(t2[(j + 1) % 3] - t2[j])) continue;
      if (separated_on(t1, t2, axis / len, eps)) return false;
    }
  }
  return true;
}

std::vector<bool> self_intersecting_triangles(const TriangleMesh& mesh, bool brute_force) {
  const std::size_t n = mesh.triangles.size();
  std::vector<bool> hit(n, false);
  if (n == 0) return hit;
  const double eps = 1e-10 * std::max(bounds(mesh).diagonal(), 1e-300);
  auto corners = [&](std::size_t t) {
    return std::array<Vec3, 3>{mesh.corner(t, 0), mesh.corner(t, 1), mesh.corner(t, 2)};
  };
  auto test = [&](std::size_t i, std::size_t j) {
    if (shares_vertex(mesh.triangles[i], mesh.triangles[j])) return;
    if (triangles_intersect(corners(i), corners(j), eps)) {
      hit[i] = true;
      hit[j] = true;
    }
  };

  if (brute_force) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) test(i, j);
    }
    return hit;
  }

  std::vector<Aabb> boxes(n);
  for (std::size_t t = 0; t < n; ++t) {
    for (int k = 0; k < 3; ++k) boxes[t].expand(mesh.corner(t, k));
    boxes[t].lo = boxes[t].lo - Vec3{eps, eps, eps};
    boxes[t].hi = boxes[t].hi + Vec3{eps, eps, eps};
  }
  const detail::BoxTree tree(boxes);
  for (std::size_t i = 0; i < n; ++i) {
    tree.query(boxes[i], [&](std::size_t j) {
      if (j > i) test(i, j);
    });
  }
  return hit;
}

double self_intersection_ratio(const TriangleMesh& mesh) {
  if (mesh.empty()) return 0.0;
  const auto hit = self_intersecting_triangles(mesh);
  return static_cast<double>(std::count(hit.begin(), hit.end(), true)) /
         static_cast<double>(mesh.triangles.size());
}

double flux_enclosure_error(const TriangleMesh& mesh) {
  Vec3 flux{};
  double area = 0.0;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const Vec3 n = triangle_normal_scaled(mesh.corner(t, 0), mesh.corner(t, 1), mesh.corner(t, 2));
    flux += n * 0.5;
    area += 0.5 * norm(n);
  }
  return area > 0.0 ? norm(flux) / area : 0.0;
}

std::int64_t segment_count(const TriangleMesh& mesh) {
  const std::size_t n = mesh.triangles.size();
  if (n == 0) return 0;
  UnionFind uf(n);
  for (const auto& [key, inc] : EdgeAdjacency::build(mesh).edges) {
    for (std::size_t i = 1; i < inc.size(); ++i) uf.unite(inc[0].triangle, inc[i].triangle);
  }
  std::int64_t count = 0;
  for (std::size_t t = 0; t < n; ++t) count += uf.find(t) == t ? 1 : 0;
  return count;
}

double segment_error(const TriangleMesh& pred, const TriangleMesh& gt) {
  return static_cast<double>(std::llabs(segment_count(pred) - segment_count(gt)));
}

}  // namespace cadmetrics
