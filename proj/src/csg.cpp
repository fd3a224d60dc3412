// Mesh booleans on a BSP tree of convex polygons. Coplanar faces are routed by
// normal orientation (same-facing faces stay in front, opposite-facing go to
// the back). The polygon soup is then welded, T-junctions are split so every
// shared edge carries identical vertices, and each face is re-triangulated.

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <unordered_map>

#include "cadmetrics/kernel.hpp"

namespace cadmetrics {

namespace {

struct Plane {
  Vec3 normal;
  double offset = 0.0;

  void flip() {
    normal = -normal;
    offset = -offset;
  }
};

struct Polygon {
  std::vector<Vec3> vertices;
  Plane plane;

  void flip() {
    std::reverse(vertices.begin(), vertices.end());
    plane.flip();
  }
};

enum Side : int { kCoplanar = 0, kFront = 1, kBack = 2, kSpanning = 3 };

class Splitter {
 public:
  explicit Splitter(double eps) : eps_(eps) {}

  void split(const Plane& plane, const Polygon& poly, std::vector<Polygon>& coplanar_front,
             std::vector<Polygon>& coplanar_back, std::vector<Polygon>& front,
             std::vector<Polygon>& back) const {
    int polygon_type = 0;
    types_.resize(poly.vertices.size());
    for (std::size_t i = 0; i < poly.vertices.size(); ++i) {
      const double t = dot(plane.normal, poly.vertices[i]) - plane.offset;
      const int type = t < -eps_ ? kBack : (t > eps_ ? kFront : kCoplanar);
      polygon_type |= type;
      types_[i] = type;
    }
    switch (polygon_type) {
      case kCoplanar:
        (dot(plane.normal, poly.plane.normal) > 0 ? coplanar_front : coplanar_back).push_back(poly);
        break;
      case kFront:
        front.push_back(poly);
        break;
      case kBack:
        back.push_back(poly);
        break;
      default: {
        std::vector<Vec3> f;
        std::vector<Vec3> b;
        const std::size_t n = poly.vertices.size();
        for (std::size_t i = 0; i < n; ++i) {
          const std::size_t j = (i + 1) % n;
          const int ti = types_[i];
          const int tj = types_[j];
          const Vec3 vi = poly.vertices[i];
          const Vec3 vj = poly.vertices[j];
          if (ti != kBack) f.push_back(vi);
          if (ti != kFront) b.push_back(vi);
          if ((ti | tj) == kSpanning) {
            const double t = (plane.offset - dot(plane.normal, vi)) / dot(plane.normal, vj - vi);
            const Vec3 v = vi + (vj - vi) * t;
            f.push_back(v);
            b.push_back(v);
          }
        }
        if (f.size() >= 3) front.push_back(Polygon{std::move(f), poly.plane});
        if (b.size() >= 3) back.push_back(Polygon{std::move(b), poly.plane});
        break;
      }
    }
  }

 private:
  double eps_;
  mutable std::vector<int> types_;
};

class BspNode {
 public:
  BspNode(std::vector<Polygon> polygons, const Splitter& splitter) : splitter_(splitter) {
    build(std::move(polygons));
  }

  void invert() {
    for (auto& p : polygons_) p.flip();
    plane_.flip();
    if (front_) front_->invert();
    if (back_) back_->invert();
    std::swap(front_, back_);
  }

  /// Removes the parts of `polygons` inside this solid.
  std::vector<Polygon> clip_polygons(std::vector<Polygon> polygons) const {
    if (!has_plane_) return polygons;
    std::vector<Polygon> front;
    std::vector<Polygon> back;
    for (const auto& p : polygons) splitter_.split(plane_, p, front, back, front, back);
    if (front_) front = front_->clip_polygons(std::move(front));
    if (back_) {
      back = back_->clip_polygons(std::move(back));
    } else {
      back.clear();
    }
    front.insert(front.end(), std::make_move_iterator(back.begin()), std::make_move_iterator(back.end()));
    return front;
  }

  void clip_to(const BspNode& other) {
    polygons_ = other.clip_polygons(std::move(polygons_));
    if (front_) front_->clip_to(other);
    if (back_) back_->clip_to(other);
  }

  void all_polygons(std::vector<Polygon>& out) const {
    out.insert(out.end(), polygons_.begin(), polygons_.end());
    if (front_) front_->all_polygons(out);
    if (back_) back_->all_polygons(out);
  }

  std::vector<Polygon> all_polygons() const {
    std::vector<Polygon> out;
    all_polygons(out);
    return out;
  }

  void build(std::vector<Polygon> polygons) {
    if (polygons.empty()) return;
    if (!has_plane_) {
      plane_ = polygons.front().plane;
      has_plane_ = true;
    }
    std::vector<Polygon> front;
    std::vector<Polygon> back;
    for (const auto& p : polygons) splitter_.split(plane_, p, polygons_, polygons_, front, back);
    if (!front.empty()) {
      if (!front_) front_ = std::make_unique<BspNode>(std::vector<Polygon>{}, splitter_);
      front_->build(std::move(front));
    }
    if (!back.empty()) {
      if (!back_) back_ = std::make_unique<BspNode>(std::vector<Polygon>{}, splitter_);
      back_->build(std::move(back));
    }
  }

 private:
  const Splitter& splitter_;
  Plane plane_;
  bool has_plane_ = false;
  std::vector<Polygon> polygons_;
  std::unique_ptr<BspNode> front_;
  std::unique_ptr<BspNode> back_;
};

std::vector<Polygon> to_polygons(const TriangleMesh& mesh) {
  std::vector<Polygon> out;
  out.reserve(mesh.triangles.size());
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const Vec3 a = mesh.corner(t, 0);
    const Vec3 b = mesh.corner(t, 1);
    const Vec3 c = mesh.corner(t, 2);
    const Vec3 n = cross(b - a, c - a);
    const double len = norm(n);
    const double longest = std::max({squared_distance(a, b), squared_distance(b, c), squared_distance(c, a)});
    // Needles carry no usable plane; the T-junction pass closes the gap they leave.
    if (!(len > 1e-10 * longest)) continue;
    const Vec3 unit = n / len;
    out.push_back(Polygon{{a, b, c}, Plane{unit, dot(unit, a)}});
  }
  return out;
}

/// Tolerance-based vertex welding on a hash grid; the first vertex seen in a
/// neighbourhood becomes the representative.
class Welder {
 public:
  explicit Welder(double tol) : tol_(tol), inv_cell_(1.0 / tol) {}

  std::uint32_t add(Vec3 p) {
    const auto cx = cell(p.x);
    const auto cy = cell(p.y);
    const auto cz = cell(p.z);
    const double tol2 = tol_ * tol_;
    for (std::int64_t dx = -1; dx <= 1; ++dx) {
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        for (std::int64_t dz = -1; dz <= 1; ++dz) {
          auto it = grid_.find(key(cx + dx, cy + dy, cz + dz));
          if (it == grid_.end()) continue;
          for (auto id : it->second) {
            if (squared_distance(points_[id], p) <= tol2) return id;
          }
        }
      }
    }
    const auto id = static_cast<std::uint32_t>(points_.size());
    points_.push_back(p);
    grid_[key(cx, cy, cz)].push_back(id);
    return id;
  }

  std::vector<Vec3>& points() { return points_; }

 private:
  std::int64_t cell(double v) const { return static_cast<std::int64_t>(std::floor(v * inv_cell_)); }
  static std::uint64_t key(std::int64_t x, std::int64_t y, std::int64_t z) {
    auto h = static_cast<std::uint64_t>(x) * 0x9E3779B97F4A7C15ULL;
    h ^= static_cast<std::uint64_t>(y) * 0xC2B2AE3D27D4EB4FULL + (h << 6) + (h >> 2);
    h ^= static_cast<std::uint64_t>(z) * 0x165667B19E3779F9ULL + (h << 6) + (h >> 2);
    return h;
  }

  double tol_;
  double inv_cell_;
  std::vector<Vec3> points_;
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> grid_;
};

/// Bounding-volume hierarchy over points answering "which points lie within
/// tol of this segment".
class PointTree {
 public:
  PointTree(const std::vector<Vec3>& pts, double tol) : pts_(pts), tol_(tol) {
    order_.resize(pts.size());
    std::iota(order_.begin(), order_.end(), 0U);
    if (!pts.empty()) {
      nodes_.resize(1);
      build(0, 0, pts.size());
    }
  }

  template <typename Fn>
  void query_segment(Vec3 a, Vec3 b, Fn&& fn) const {
    if (nodes_.empty()) return;
    std::vector<std::size_t> stack{0};
    while (!stack.empty()) {
      const Node& node = nodes_[stack.back()];
      stack.pop_back();
      if (!segment_hits_box(a, b, node.box)) continue;
      if (node.left == 0) {
        for (std::size_t i = node.begin; i < node.end; ++i) fn(order_[i]);
      } else {
        stack.push_back(node.left);
        stack.push_back(node.left + 1);
      }
    }
  }

 private:
  struct Node {
    Aabb box;
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t left = 0;  // children at left, left + 1; 0 for leaves
  };

  void build(std::size_t slot, std::size_t begin, std::size_t end) {
    Aabb box;
    for (std::size_t i = begin; i < end; ++i) box.expand(pts_[order_[i]]);
    box.lo = box.lo - Vec3{tol_, tol_, tol_};
    box.hi = box.hi + Vec3{tol_, tol_, tol_};
    nodes_[slot] = Node{box, begin, end, 0};
    if (end - begin <= 8) return;
    const Vec3 ext = box.extent();
    const int axis = ext.x >= ext.y && ext.x >= ext.z ? 0 : (ext.y >= ext.z ? 1 : 2);
    const std::size_t mid = (begin + end) / 2;
    std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin),
                     order_.begin() + static_cast<std::ptrdiff_t>(mid),
                     order_.begin() + static_cast<std::ptrdiff_t>(end), [&](auto l, auto r) {
                       const double a = pts_[l][axis];
                       const double b = pts_[r][axis];
                       return a < b || (a == b && l < r);
                     });
    const std::size_t left = nodes_.size();
    nodes_[slot].left = left;
    nodes_.resize(nodes_.size() + 2);
    build(left, begin, mid);
    build(left + 1, mid, end);
  }

  static bool segment_hits_box(Vec3 a, Vec3 b, const Aabb& box) {
    double t0 = 0.0;
    double t1 = 1.0;
    const Vec3 d = b - a;
    for (int k = 0; k < 3; ++k) {
      const double lo = box.lo[k];
      const double hi = box.hi[k];
      if (d[k] == 0.0) {
        if (a[k] < lo || a[k] > hi) return false;
        continue;
      }
      double ta = (lo - a[k]) / d[k];
      double tb = (hi - a[k]) / d[k];
      if (ta > tb) std::swap(ta, tb);
      t0 = std::max(t0, ta);
      t1 = std::min(t1, tb);
      if (t0 > t1) return false;
    }
    return true;
  }

  const std::vector<Vec3>& pts_;
  double tol_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

// Triangulates one welded face ring. Vertices lying on the segment between
// their neighbours (T-junction points) are taken out first and then spliced
// back into the triangle owning that boundary edge, so they never end up as
// flat ears.
void emit_face(const std::vector<std::uint32_t>& ring, Vec3 normal, TriangleMesh& out) {
  if (ring.size() < 3) return;
  // Project onto the plane most aligned with the face normal.
  const double ax = std::abs(normal.x);
  const double ay = std::abs(normal.y);
  const double az = std::abs(normal.z);
  const int drop = ax >= ay && ax >= az ? 0 : (ay >= az ? 1 : 2);
  auto project = [&](Vec3 p) -> Vec2 {
    if (drop == 0) return {p.y, p.z};
    if (drop == 1) return {p.z, p.x};
    return {p.x, p.y};
  };
  std::vector<Vec2> flat;
  for (auto id : ring) flat.push_back(project(out.vertices[id]));
  const double area = signed_area(flat);
  if (area == 0.0) return;
  const bool reversed = area < 0.0;
  std::vector<std::uint32_t> ids = ring;
  if (reversed) {
    std::reverse(flat.begin(), flat.end());
    std::reverse(ids.begin(), ids.end());
  }

  const std::size_t n = ids.size();
  std::vector<std::size_t> prev(n);
  std::vector<std::size_t> next(n);
  for (std::size_t i = 0; i < n; ++i) {
    prev[i] = (i + n - 1) % n;
    next[i] = (i + 1) % n;
  }
  std::vector<bool> kept(n, true);
  std::size_t remaining = n;
  auto on_chord = [&](std::size_t i) {
    const Vec2 a = flat[prev[i]];
    const Vec2 b = flat[i];
    const Vec2 c = flat[next[i]];
    const Vec2 ac = c - a;
    const double len2 = dot(ac, ac);
    return len2 > 0.0 && std::abs(cross(ac, b - a)) <= 1e-9 * len2 && dot(b - a, ac) > 0.0 && dot(c - b, ac) > 0.0;
  };
  for (bool changed = true; changed && remaining > 3;) {
    changed = false;
    for (std::size_t i = 0; i < n && remaining > 3; ++i) {
      if (!kept[i] || !on_chord(i)) continue;
      kept[i] = false;
      next[prev[i]] = next[i];
      prev[next[i]] = prev[i];
      --remaining;
      changed = true;
    }
  }

  // Removed vertices grouped by the kept vertex that starts their edge.
  Polygon2D poly;
  std::vector<std::size_t> kept_index;
  for (std::size_t i = 0; i < n; ++i) {
    if (!kept[i]) continue;
    kept_index.push_back(i);
    poly.outer.push_back(flat[i]);
  }
  std::vector<std::vector<std::size_t>> between(kept_index.size());
  for (std::size_t k = 0; k < kept_index.size(); ++k) {
    const std::size_t stop = kept_index[(k + 1) % kept_index.size()];
    for (std::size_t i = (kept_index[k] + 1) % n; i != stop; i = (i + 1) % n) between[k].push_back(i);
  }

  std::vector<IndexTriangle> tris;
  try {
    tris = triangulate_indices(poly);
  } catch (const KernelError&) {
    tris.clear();
    for (std::uint32_t k = 1; k + 1 < poly.outer.size(); ++k) tris.push_back({0, k, k + 1});
  }

  const std::size_t m = kept_index.size();
  auto push = [&](std::uint32_t a, std::uint32_t b, std::uint32_t c) {
    Triangle tri{a, b, c};
    if (reversed) std::swap(tri[1], tri[2]);
    if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2]) return;
    out.triangles.push_back(tri);
  };
  std::vector<std::uint32_t> fan;
  for (const auto& t : tris) {
    fan.clear();
    int split_edges = 0;
    int last_split = 0;
    for (int e = 0; e < 3; ++e) {
      const std::uint32_t u = t[e];
      const std::uint32_t v = t[(e + 1) % 3];
      fan.push_back(ids[kept_index[u]]);
      if ((u + 1) % m == v && !between[u].empty()) {
        for (std::size_t i : between[u]) fan.push_back(ids[i]);
        ++split_edges;
        last_split = e;
      }
    }
    if (split_edges == 0) {
      push(fan[0], fan[1], fan[2]);
    } else if (split_edges == 1) {
      // Fan from the corner opposite the split side.
      const std::uint32_t apex = ids[kept_index[t[(last_split + 2) % 3]]];
      const auto at = std::find(fan.begin(), fan.end(), apex);
      std::rotate(fan.begin(), at, fan.end());
      for (std::size_t i = 1; i + 1 < fan.size(); ++i) push(fan[0], fan[i], fan[i + 1]);
    } else {
      const Vec3 centre = (out.vertices[fan[0]] + out.vertices[ids[kept_index[t[1]]]] +
                           out.vertices[ids[kept_index[t[2]]]]) / 3.0;
      const auto c = static_cast<std::uint32_t>(out.vertices.size());
      out.vertices.push_back(centre);
      for (std::size_t i = 0; i < fan.size(); ++i) push(c, fan[i], fan[(i + 1) % fan.size()]);
    }
  }
}

// Replaces each needle (apex lying on its long edge) and the triangle across
// that edge by two triangles fanned from the apex. Keeps the mesh closed.
void split_needles(TriangleMesh& mesh) {
  auto key = [](std::uint32_t u, std::uint32_t v) { return (std::uint64_t{u} << 32) | v; };
  std::unordered_map<std::uint64_t, std::uint32_t> owner;
  auto index_edges = [&](std::uint32_t t) {
    const Triangle& tri = mesh.triangles[t];
    for (int k = 0; k < 3; ++k) owner[key(tri[k], tri[(k + 1) % 3])] = t;
  };
  for (std::uint32_t t = 0; t < mesh.triangles.size(); ++t) index_edges(t);

  for (int pass = 0; pass < 8; ++pass) {
    bool changed = false;
    for (std::uint32_t t = 0; t < mesh.triangles.size(); ++t) {
      const Triangle tri = mesh.triangles[t];
      int longest = 0;
      double best = -1.0;
      for (int k = 0; k < 3; ++k) {
        const double len = squared_distance(mesh.vertices[tri[k]], mesh.vertices[tri[(k + 1) % 3]]);
        if (len > best) {
          best = len;
          longest = k;
        }
      }
      const std::uint32_t p = tri[longest];
      const std::uint32_t q = tri[(longest + 1) % 3];
      const std::uint32_t m = tri[(longest + 2) % 3];
      const Vec3 pp = mesh.vertices[p];
      const Vec3 pq = mesh.vertices[q];
      const Vec3 pm = mesh.vertices[m];
      if (!(norm(cross(pq - pp, pm - pp)) <= 1e-8 * best)) continue;
      const auto it = owner.find(key(q, p));
      if (it == owner.end() || it->second == t) continue;
      const std::uint32_t t2 = it->second;
      const Triangle& other = mesh.triangles[t2];
      std::uint32_t x = other[0] + other[1] + other[2] - p - q;
      if (x == m) continue;
      mesh.triangles[t] = {m, p, x};
      mesh.triangles[t2] = {q, m, x};
      owner.erase(key(p, q));
      owner.erase(key(q, p));
      index_edges(t);
      index_edges(t2);
      changed = true;
    }
    if (!changed) break;
  }
}

TriangleMesh polygons_to_mesh(const std::vector<Polygon>& polygons, double tol) {
  Welder welder(tol);
  std::vector<std::vector<std::uint32_t>> rings;
  std::vector<Vec3> normals;
  rings.reserve(polygons.size());
  for (const auto& poly : polygons) {
    std::vector<std::uint32_t> ring;
    for (const Vec3& v : poly.vertices) {
      const auto id = welder.add(v);
      if (ring.empty() || ring.back() != id) ring.push_back(id);
    }
    while (ring.size() > 1 && ring.front() == ring.back()) ring.pop_back();
    if (ring.size() < 3) continue;
    rings.push_back(std::move(ring));
    normals.push_back(poly.plane.normal);
  }

  const std::vector<Vec3>& pts = welder.points();
  PointTree tree(pts, tol);
  const double tol2 = tol * tol;
  std::vector<std::pair<double, std::uint32_t>> on_edge;

  TriangleMesh mesh;
  mesh.vertices = pts;
  for (std::size_t r = 0; r < rings.size(); ++r) {
    const auto& ring = rings[r];
    std::vector<std::uint32_t> repaired;
    for (std::size_t i = 0; i < ring.size(); ++i) {
      const std::uint32_t u = ring[i];
      const std::uint32_t v = ring[(i + 1) % ring.size()];
      repaired.push_back(u);
      const Vec3 a = pts[u];
      const Vec3 d = pts[v] - a;
      const double len2 = squared_norm(d);
      if (!(len2 > 0.0)) continue;
      on_edge.clear();
      tree.query_segment(a, pts[v], [&](std::uint32_t w) {
        if (w == u || w == v) return;
        const double t = dot(pts[w] - a, d) / len2;
        if (t <= 0.0 || t >= 1.0) return;
        if (squared_distance(a + d * t, pts[w]) <= tol2) on_edge.emplace_back(t, w);
      });
      std::sort(on_edge.begin(), on_edge.end());
      for (const auto& [t, w] : on_edge) repaired.push_back(w);
    }
    emit_face(repaired, normals[r], mesh);
  }
  split_needles(mesh);
  remove_unreferenced_vertices(mesh);
  return mesh;
}

}  // namespace

TriangleMesh mesh_boolean(const TriangleMesh& a, const TriangleMesh& b, BooleanOp op) {
  const Aabb box_a = bounds(a);
  const Aabb box_b = bounds(b);
  Aabb both = box_a;
  both.expand(box_b);
  const double scale = std::max(both.diagonal(), 1e-300);
  if (!std::isfinite(scale)) throw KernelError(KernelErrorKind::BooleanFailure, "non-finite input");
  const double eps = 1e-9 * scale;
  const double weld_tol = 1e-8 * scale;

  if (a.empty() || b.empty() || !box_a.overlaps(box_b, eps)) {
    switch (op) {
      case BooleanOp::Union: {
        TriangleMesh out = a;
        append(out, b);
        return out;
      }
      case BooleanOp::Difference:
        return a;
      case BooleanOp::Intersection:
        return {};
    }
  }

  Splitter splitter(eps);
  BspNode na(to_polygons(a), splitter);
  BspNode nb(to_polygons(b), splitter);
  switch (op) {
    case BooleanOp::Union:
      na.clip_to(nb);
      nb.clip_to(na);
      nb.invert();
      nb.clip_to(na);
      nb.invert();
      na.build(nb.all_polygons());
      break;
    case BooleanOp::Difference:
      na.invert();
      na.clip_to(nb);
      nb.clip_to(na);
      nb.invert();
      nb.clip_to(na);
      nb.invert();
      na.build(nb.all_polygons());
      na.invert();
      break;
    case BooleanOp::Intersection:
      na.invert();
      nb.clip_to(na);
      nb.invert();
      na.clip_to(nb);
      nb.clip_to(na);
      na.build(nb.all_polygons());
      na.invert();
      break;
  }
  TriangleMesh out = polygons_to_mesh(na.all_polygons(), weld_tol);
  for (const auto& v : out.vertices) {
    if (!is_finite(v)) throw KernelError(KernelErrorKind::BooleanFailure, "non-finite vertex in result");
  }
  return out;
}

}  // namespace cadmetrics
