#include <algorithm>
#include <random>

#include "cadmetrics/kernel.hpp"

namespace cadmetrics {

TriangleMesh extrude_profile(const Polygon2D& poly, const Extrusion& extrusion,
                             const CoordinateSystem& cs) {
  const double top = extrusion.distance_toward;
  const double bottom = -extrusion.distance_opposite;
  if (!(top - bottom > 0.0)) throw KernelError(KernelErrorKind::ZeroExtent, "extrusion has zero height");

  const auto pts = poly.flattened();
  const auto n = static_cast<std::uint32_t>(pts.size());
  const double s = extrusion.sketch_scale;

  TriangleMesh mesh;
  mesh.vertices.reserve(2 * pts.size());
  for (Vec2 p : pts) mesh.vertices.push_back(cs.to_world(p * s, bottom));
  for (Vec2 p : pts) mesh.vertices.push_back(cs.to_world(p * s, top));

  const auto caps = triangulate_indices(poly);
  mesh.triangles.reserve(2 * caps.size() + 2 * pts.size());
  for (const auto& t : caps) {
    mesh.triangles.push_back({t[0] + n, t[1] + n, t[2] + n});
    mesh.triangles.push_back({t[0], t[2], t[1]});
  }

  auto add_walls = [&](std::uint32_t first, std::uint32_t count) {
    for (std::uint32_t i = 0; i < count; ++i) {
      const std::uint32_t a = first + i;
      const std::uint32_t b = first + (i + 1) % count;
      mesh.triangles.push_back({a, b, b + n});
      mesh.triangles.push_back({a, b + n, a + n});
    }
  };
  add_walls(0, static_cast<std::uint32_t>(poly.outer.size()));
  auto first = static_cast<std::uint32_t>(poly.outer.size());
  for (const auto& hole : poly.holes) {
    add_walls(first, static_cast<std::uint32_t>(hole.size()));
    first += static_cast<std::uint32_t>(hole.size());
  }
  return mesh;
}

TriangleMesh build_model(const CadSequence& seq, const KernelConfig& config) {
  const auto violations = validate(seq);
  if (!violations.empty()) {
    throw KernelError(KernelErrorKind::InvalidSequence,
                      std::string(to_string(violations.front().code)) + " at " + violations.front().path);
  }

  TriangleMesh scene;
  for (std::size_t i = 0; i < seq.parts.size(); ++i) {
    const Part& part = seq.parts[i];
    const int index = static_cast<int>(i);
    try {
      TriangleMesh body;
      for (const Profile& profile : part.profiles) {
        const Polygon2D poly = build_profile(profile, config.params_for(profile));
        const TriangleMesh prism = extrude_profile(poly, part.extrusion, part.coordinate_system);
        // Profiles of one sketch form one body.
        body = body.empty() ? prism : mesh_boolean(body, prism, BooleanOp::Union);
      }
      switch (part.extrusion.operation) {
        case ExtrudeOperation::NewBody:
          append(scene, body);
          break;
        case ExtrudeOperation::Join:
          scene = scene.empty() ? body : mesh_boolean(scene, body, BooleanOp::Union);
          break;
        case ExtrudeOperation::Cut:
          scene = mesh_boolean(scene, body, BooleanOp::Difference);
          break;
        case ExtrudeOperation::Intersect:
          scene = mesh_boolean(scene, body, BooleanOp::Intersection);
          break;
      }
    } catch (const KernelError& e) {
      if (e.part_index() >= 0) throw;
      throw KernelError(e.kind(), e.detail(), index);
    }
  }
  if (scene.empty()) {
    throw KernelError(KernelErrorKind::EmptyResult, "construction produced no geometry");
  }
  return scene;
}

namespace {

double unit_double(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

std::vector<Vec3> sample_surface(const TriangleMesh& mesh, std::size_t n, std::uint64_t seed) {
  if (n == 0) return {};
  if (mesh.empty()) throw KernelError(KernelErrorKind::EmptyMesh, "cannot sample an empty mesh");

  std::vector<double> cumulative(mesh.triangles.size());
  double total = 0.0;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    total += triangle_area(mesh.corner(t, 0), mesh.corner(t, 1), mesh.corner(t, 2));
    cumulative[t] = total;
  }
  if (!(total > 0.0)) throw KernelError(KernelErrorKind::EmptyMesh, "mesh has zero surface area");

  std::mt19937_64 rng(seed);
  std::vector<Vec3> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double target = unit_double(rng) * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), target);
    const std::size_t t = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()),
                                                cumulative.size() - 1);
    double u = unit_double(rng);
    double v = unit_double(rng);
    if (u + v > 1.0) {
      u = 1.0 - u;
      v = 1.0 - v;
    }
    const Vec3 a = mesh.corner(t, 0);
    out.push_back(a + (mesh.corner(t, 1) - a) * u + (mesh.corner(t, 2) - a) * v);
  }
  return out;
}

}  // namespace cadmetrics
