#pragma once

// Meshes and sequences shared by the unit tests and the acceptance binary.
// Everything here is built by hand, not by the kernel, unless the name says so.

#include <cmath>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "cadmetrics/kernel.hpp"
#include "cadmetrics/mesh.hpp"
#include "cadmetrics/schema.hpp"

namespace testsupport {

using namespace cadmetrics;

// Axis-aligned box, outward counter-clockwise triangles.
inline TriangleMesh box_mesh(Vec3 lo, Vec3 hi) {
  TriangleMesh m;
  for (int i = 0; i < 8; ++i) {
    m.vertices.push_back({(i & 1) ? hi.x : lo.x, (i & 2) ? hi.y : lo.y, (i & 4) ? hi.z : lo.z});
  }
  m.triangles = {{0, 2, 1}, {1, 2, 3},   // z = lo
                 {4, 5, 6}, {5, 7, 6},   // z = hi
                 {0, 1, 4}, {1, 5, 4},   // y = lo
                 {2, 6, 3}, {3, 6, 7},   // y = hi
                 {0, 4, 2}, {2, 4, 6},   // x = lo
                 {1, 3, 5}, {3, 7, 5}};  // x = hi
  return m;
}

inline TriangleMesh unit_cube() { return box_mesh({0, 0, 0}, {1, 1, 1}); }

// Unit cube without the triangle {4,5,6} of the top cap.
inline TriangleMesh cube_missing_cap_triangle() {
  auto m = unit_cube();
  m.triangles.erase(m.triangles.begin() + 2);
  return m;
}

inline TriangleMesh icosphere(int subdivisions) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  TriangleMesh m;
  m.vertices = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  m.triangles = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
                 {11, 10, 2}, {10, 7, 6}, {7, 1, 8},   {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
                 {3, 8, 9},  {4, 9, 5},  {2, 4, 11},  {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
  auto unit = [](Vec3 v) { return v * (1.0 / std::sqrt(v.x * v.x + v.y * v.y + v.z * v.z)); };
  for (auto& v : m.vertices) v = unit(v);
  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> mid;
    auto midpoint = [&](std::uint32_t a, std::uint32_t b) {
      const auto key = std::minmax(a, b);
      auto it = mid.find(key);
      if (it != mid.end()) return it->second;
      m.vertices.push_back(unit((m.vertices[a] + m.vertices[b]) * 0.5));
      const auto id = static_cast<std::uint32_t>(m.vertices.size() - 1);
      mid[key] = id;
      return id;
    };
    std::vector<Triangle> next;
    for (const auto& tri : m.triangles) {
      const auto a = midpoint(tri[0], tri[1]);
      const auto b = midpoint(tri[1], tri[2]);
      const auto c = midpoint(tri[2], tri[0]);
      next.push_back({tri[0], a, c});
      next.push_back({tri[1], b, a});
      next.push_back({tri[2], c, b});
      next.push_back({a, b, c});
    }
    m.triangles = std::move(next);
  }
  return m;
}

// ---------------------------------------------------------------------------
// Minimal-JSON builders

inline std::string vec2(double u, double v) {
  return "[" + std::to_string(u) + "," + std::to_string(v) + "]";
}

inline std::string rect_loop(double x0, double y0, double x1, double y1) {
  const double p[4][2] = {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}};
  std::string s = R"({"curves":[)";
  for (int i = 0; i < 4; ++i) {
    const auto& a = p[i];
    const auto& b = p[(i + 1) % 4];
    s += std::string(i ? "," : "") + R"({"type":"line","start":)" + vec2(a[0], a[1]) + R"(,"end":)" +
         vec2(b[0], b[1]) + "}";
  }
  return s + "]}";
}

inline std::string circle_loop(double cx, double cy, double r) {
  return R"({"curves":[{"type":"circle","center":)" + vec2(cx, cy) + R"(,"radius":)" + std::to_string(r) + "}]}";
}

inline std::string part_json(const std::vector<std::string>& loops, double toward, const std::string& op,
                             double z0 = 0.0, double opposite = 0.0, double scale = 1.0) {
  std::string l;
  for (std::size_t i = 0; i < loops.size(); ++i) l += (i ? "," : "") + loops[i];
  return R"({"coordinate_system":{"origin":[0,0,)" + std::to_string(z0) +
         R"(],"x_axis":[1,0,0],"y_axis":[0,1,0],"z_axis":[0,0,1]},"sketch":{"profiles":[{"loops":[)" + l +
         R"(]}]},"extrusion":{"distance_toward":)" + std::to_string(toward) +
         R"(,"distance_opposite":)" + std::to_string(opposite) + R"(,"operation":")" + op +
         R"(","sketch_scale":)" + std::to_string(scale) + "}}";
}

inline std::string sequence_json(const std::vector<std::string>& parts) {
  std::string s = R"({"parts":[)";
  for (std::size_t i = 0; i < parts.size(); ++i) s += (i ? "," : "") + parts[i];
  return s + "]}";
}

inline std::string cube_json() { return sequence_json({part_json({rect_loop(0, 0, 1, 1)}, 1.0, "new_body")}); }

// Unit block with one square through-hole (genus 1).
inline std::string one_hole_block_json() {
  return sequence_json({part_json({rect_loop(0, 0, 1, 1), rect_loop(0.25, 0.25, 0.75, 0.75)}, 1.0, "new_body")});
}

// 6 x 1 plate with five square through-holes cut by separate parts (genus 5).
inline std::string five_hole_block_json() {
  std::vector<std::string> parts = {part_json({rect_loop(0, 0, 6, 1)}, 0.5, "new_body")};
  for (int i = 0; i < 5; ++i) {
    const double x = 0.6 + 1.0 * i;
    parts.push_back(part_json({rect_loop(x, 0.3, x + 0.4, 0.7)}, 1.0, "cut", -0.25));
  }
  return sequence_json(parts);
}

inline std::string two_boxes_json() {
  return sequence_json(
      {part_json({rect_loop(0, 0, 1, 1)}, 1.0, "new_body"), part_json({rect_loop(3, 0, 4, 1)}, 1.0, "new_body")});
}

inline TriangleMesh build(const std::string& json, const KernelConfig& config = {}) {
  return build_model(parse_sequence(json), config);
}

inline std::string manifest_entry(const std::string& id, const std::string& pred, const std::string& gt) {
  return R"({"id":")" + id + R"(","prediction":)" + pred + R"(,"ground_truth":)" + gt + "}";
}

// Ten manifest lines over five shapes; s3 has a truncated prediction and s7
// points at a file that does not exist.
inline std::vector<std::string> ten_entry_manifest() {
  std::vector<std::string> lines;
  const std::string shapes[] = {cube_json(), one_hole_block_json(), two_boxes_json(),
                                sequence_json({part_json({circle_loop(0, 0, 0.5)}, 1.0, "new_body")}),
                                sequence_json({part_json({rect_loop(0, 0, 2, 1)}, 0.5, "new_body")})};
  for (int i = 0; i < 10; ++i) {
    lines.push_back(manifest_entry("s" + std::to_string(i), shapes[(i + i / 5) % 5], shapes[i % 5]));
  }
  lines[3] = manifest_entry("s3", R"("{\"parts\":[")", shapes[3]);
  lines[7] = manifest_entry("s7", R"("missing_prediction.json")", shapes[2]);
  return lines;
}

inline std::string join_lines(const std::vector<std::string>& lines) {
  std::string s;
  for (const auto& l : lines) s += l + "\n";
  return s;
}

// Random closed sequence of 1 to `max_parts` parts: boxes and cylinders joined,
// cut or added as new bodies, all kept inside [0,4]^2 x [0,2].
inline std::string random_sequence_json(std::mt19937_64& rng, int max_parts) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int n = 1 + static_cast<int>(rng() % static_cast<unsigned>(max_parts));
  std::vector<std::string> parts;
  for (int i = 0; i < n; ++i) {
    static const char* ops[] = {"join", "cut", "new_body"};
    const std::string op = i == 0 ? "new_body" : ops[rng() % 3];
    const double z0 = i == 0 ? 0.0 : 0.1 + 0.8 * u(rng);
    const double h = 0.3 + 1.2 * u(rng);
    std::string loop;
    if (rng() % 2) {
      const double x = 0.2 + 2.5 * u(rng), y = 0.2 + 2.5 * u(rng);
      loop = rect_loop(x, y, x + 0.3 + u(rng), y + 0.3 + u(rng));
    } else {
      loop = circle_loop(0.8 + 2.4 * u(rng), 0.8 + 2.4 * u(rng), 0.15 + 0.5 * u(rng));
    }
    parts.push_back(part_json({loop}, h, op, z0));
  }
  return sequence_json(parts);
}

}  // namespace testsupport
