#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "cadmetrics/kernel.hpp"
#include "cadmetrics/mesh_io.hpp"
#include "cadmetrics/metrics.hpp"
#include "doctest.h"
#include "oracles.hpp"
#include "support.hpp"

using namespace cadmetrics;
using namespace testsupport;
using std::numbers::pi;

namespace {

Loop lines(const std::vector<Vec2>& pts) {
  Loop loop;
  for (std::size_t i = 0; i < pts.size(); ++i) loop.curves.push_back(Line{pts[i], pts[(i + 1) % pts.size()]});
  return loop;
}

double max_sagitta(const std::vector<Vec2>& ring, Vec2 c, double r) {
  double worst = 0.0;
  for (std::size_t i = 0; i < ring.size(); ++i) {
    const Vec2 a = ring[i], b = ring[(i + 1) % ring.size()];
    const double mx = (a.x + b.x) / 2 - c.x, my = (a.y + b.y) / 2 - c.y;
    worst = std::max(worst, r - std::sqrt(mx * mx + my * my));
  }
  return worst;
}

double area_sum(const std::vector<Triangle2D>& tris) {
  double s = 0.0;
  for (const auto& t : tris) {
    s += 0.5 * ((t[1].x - t[0].x) * (t[2].y - t[0].y) - (t[2].x - t[0].x) * (t[1].y - t[0].y));
  }
  return s;
}

template <class F>
KernelErrorKind kernel_error_of(F&& f) {
  try {
    f();
  } catch (const KernelError& e) {
    return e.kind();
  }
  FAIL("expected KernelError");
  return KernelErrorKind::EmptyMesh;
}

// Random star-shaped polygon around the origin. Angle gaps stay below pi, which
// keeps the origin in the kernel and the polygon simple.
std::vector<Vec2> star_polygon(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Vec2> pts;
  for (int i = 0; i < n; ++i) {
    const double a = 2 * pi * (i + 0.8 * u(rng)) / n;
    const double r = 0.3 + u(rng);
    pts.push_back({r * std::cos(a), r * std::sin(a)});
  }
  return pts;
}

bool edges_balanced(const TriangleMesh& m) {
  for (const auto& [key, inc] : EdgeAdjacency::build(m).edges) {
    int f = 0;
    for (const auto& i : inc) f += i.forward ? 1 : -1;
    if (f != 0) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("lines tessellate to their endpoints") {
  const auto pts = tessellate_curve(Line{{0, 0}, {1, 0}}, {});
  REQUIRE(pts.size() == 2);
  CHECK(pts[0] == Vec2{0, 0});
  CHECK(pts[1] == Vec2{1, 0});
}

TEST_CASE("circle segment count follows the sagitta bound") {
  // ceil(pi / acos(1 - 0.01)) = 23 for r = 1.
  const int expected = static_cast<int>(std::ceil(pi / std::acos(1.0 - 0.01)));
  CHECK(expected == 23);
  const auto ring = tessellate_curve(Circle{{0, 0}, 1.0}, {0.01, 8});
  CHECK(ring.size() == 23);
  CHECK(max_sagitta(ring, {0, 0}, 1.0) <= 0.01);
  CHECK(tessellate_curve(Circle{{0, 0}, 1.0}, {0.01, 32}).size() == 32);
  CHECK(circle_segment_count(1.0, {0.01, 8}) == 23);
}

TEST_CASE("arcs keep exact endpoints and respect the sagitta bound") {
  const Arc arc{{1, 0}, {0, 1}, {-1, 0}};
  const auto fit = fit_arc(arc);
  CHECK(fit.radius == doctest::Approx(1.0));
  CHECK(fit.sweep == doctest::Approx(pi));
  const auto pts = tessellate_curve(arc, {0.001, 8});
  CHECK(pts.front() == arc.start);
  CHECK(pts.back() == arc.end);
  std::vector<Vec2> open(pts.begin(), pts.end());
  double worst = 0.0;
  for (std::size_t i = 0; i + 1 < open.size(); ++i) {
    const double mx = (open[i].x + open[i + 1].x) / 2, my = (open[i].y + open[i + 1].y) / 2;
    worst = std::max(worst, 1.0 - std::sqrt(mx * mx + my * my));
  }
  CHECK(worst <= 0.001);
  CHECK(kernel_error_of([] { tessellate_curve(Arc{{0, 0}, {1, 0}, {2, 0}}, {}); }) ==
        KernelErrorKind::DegenerateCurve);
}

TEST_CASE("profiles are oriented and measured") {
  Profile square{{lines({{0, 0}, {1, 0}, {1, 1}, {0, 1}})}};
  CHECK(polygon_area(build_profile(square, {})) == doctest::Approx(1.0).epsilon(1e-12));

  // Clockwise input is re-oriented.
  Profile cw{{lines({{0, 0}, {0, 1}, {1, 1}, {1, 0}})}};
  const auto poly = build_profile(cw, {});
  CHECK(signed_area(poly.outer) > 0);

  // Square with a centered circular hole; the oracle is the inscribed n-gon area.
  const TessellationParams tp{0.0005, 32};
  Profile holed{{lines({{0, 0}, {1, 0}, {1, 1}, {0, 1}}), Loop{{Circle{{0.5, 0.5}, 0.25}}}}};
  const auto hp = build_profile(holed, tp);
  REQUIRE(hp.holes.size() == 1);
  CHECK(signed_area(hp.holes[0]) < 0);
  const auto n = static_cast<double>(hp.holes[0].size());
  const double ngon = 0.5 * n * 0.0625 * std::sin(2 * pi / n);
  CHECK(polygon_area(hp) == doctest::Approx(1.0 - ngon).epsilon(1e-12));
  CHECK(std::abs(polygon_area(hp) - (1.0 - pi * 0.0625)) <= 2 * pi * 0.25 * tp.chord_tolerance);

  // Lobes of unequal area so the loop is not rejected as degenerate first.
  Profile eight{{lines({{0, 0}, {2, 2}, {2, 0}, {0, 1}})}};
  CHECK(kernel_error_of([&] { build_profile(eight, {}); }) == KernelErrorKind::SelfIntersectingLoop);

  Profile outside{{lines({{0, 0}, {1, 0}, {1, 1}, {0, 1}}), Loop{{Circle{{3, 3}, 0.25}}}}};
  CHECK(kernel_error_of([&] { build_profile(outside, {}); }) == KernelErrorKind::HoleOutsideOuter);
}

TEST_CASE("triangulation counts and areas") {
  Polygon2D square{{{0, 0}, {1, 0}, {1, 1}, {0, 1}}, {}};
  const auto t = triangulate(square);
  CHECK(t.size() == 2);
  CHECK(area_sum(t) == doctest::Approx(1.0).epsilon(1e-12));

  Polygon2D holed{{{0, 0}, {4, 0}, {4, 4}, {0, 4}}, {{{1, 1}, {1, 3}, {3, 3}, {3, 1}}}};
  const auto th = triangulate(holed);
  CHECK(th.size() == 8);
  CHECK(area_sum(th) == doctest::Approx(12.0).epsilon(1e-12));

  for (int n = 3; n <= 40; ++n) {
    Polygon2D ngon;
    for (int i = 0; i < n; ++i) ngon.outer.push_back({std::cos(2 * pi * i / n), std::sin(2 * pi * i / n)});
    const auto tn = triangulate(ngon);
    CHECK(tn.size() == static_cast<std::size_t>(n - 2));
    CHECK(area_sum(tn) == doctest::Approx(signed_area(ngon.outer)).epsilon(1e-9));
  }
  // Deterministic.
  CHECK(triangulate_indices(holed) == triangulate_indices(holed));
}

TEST_CASE("triangulation of random star polygons covers the area") {
  std::mt19937_64 rng(11);
  for (int it = 0; it < 200; ++it) {
    Polygon2D p{star_polygon(rng, 4 + static_cast<int>(rng() % 30)), {}};
    if (signed_area(p.outer) <= 1e-6) continue;
    const auto t = triangulate(p);
    CHECK(area_sum(t) == doctest::Approx(signed_area(p.outer)).epsilon(1e-9));
    for (const auto& tri : t) {
      CHECK(area_sum({tri}) >= 0.0);
    }
  }
}

TEST_CASE("extruded unit square is the cube") {
  Polygon2D square{{{0, 0}, {1, 0}, {1, 1}, {0, 1}}, {}};
  const auto cube = extrude_profile(square, {1.0, 0.0, ExtrudeOperation::NewBody, 1.0}, {});
  CHECK(cube.vertices.size() == 8);
  CHECK(cube.triangles.size() == 12);
  CHECK(euler_characteristic(cube) == 2);
  CHECK(is_watertight(cube));
  CHECK(std::abs(signed_volume(cube) - 1.0) <= 1e-12);

  // Area scales with s^2, height does not.
  const auto scaled = extrude_profile(square, {1.0, 0.0, ExtrudeOperation::NewBody, 2.0}, {});
  CHECK(std::abs(signed_volume(scaled) - 4.0) <= 1e-12);

  // Two-sided extrusion sits between -opposite and +toward along z.
  const auto two = extrude_profile(square, {0.5, 0.25, ExtrudeOperation::NewBody, 1.0}, {});
  const auto b = bounds(two);
  CHECK(b.lo.z == doctest::Approx(-0.25));
  CHECK(b.hi.z == doctest::Approx(0.5));

  // Rotated frame: x -> y, y -> z, z -> x.
  CoordinateSystem cs;
  cs.origin = {5, 0, 0};
  cs.x_axis = {0, 1, 0};
  cs.y_axis = {0, 0, 1};
  cs.z_axis = {1, 0, 0};
  const auto rot = extrude_profile(square, {2.0, 0.0, ExtrudeOperation::NewBody, 1.0}, cs);
  const auto rb = bounds(rot);
  CHECK(rb.lo.x == doctest::Approx(5));
  CHECK(rb.hi.x == doctest::Approx(7));
  CHECK(signed_volume(rot) == doctest::Approx(2.0));
}

TEST_CASE("extrusions of random polygons are closed with exact prism volume") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.1, 2.0);
  for (int it = 0; it < 100; ++it) {
    Polygon2D p{star_polygon(rng, 3 + static_cast<int>(rng() % 25)), {}};
    if (signed_area(p.outer) <= 1e-3) continue;
    const Extrusion e{u(rng), u(rng) * 0.5, ExtrudeOperation::NewBody, u(rng)};
    const auto m = extrude_profile(p, e, {});
    CHECK(is_watertight(m));
    const double expected =
        signed_area(p.outer) * e.sketch_scale * e.sketch_scale * (e.distance_toward + e.distance_opposite);
    CHECK(std::abs(signed_volume(m) - expected) <= 1e-9 * expected);
  }
}

TEST_CASE("extruded circle volume converges to 2 pi within the sagitta bound") {
  // Missing area per segment is below chord * sagitta, so the whole deficit is
  // below perimeter * tolerance.
  double previous = INFINITY;
  for (double tol : {0.1, 0.03, 0.01, 0.003, 0.001, 0.0003}) {
    KernelConfig kc;
    kc.absolute_chord_tolerance = tol;
    kc.min_segments_per_circle = 8;
    const auto m = build(sequence_json({part_json({circle_loop(0, 0, 1.0)}, 2.0, "new_body")}), kc);
    const double err = 2 * pi - signed_volume(m);
    CHECK(err >= 0.0);
    CHECK(err <= 2 * pi * 1.0 * tol * 2.0);
    CHECK(err <= previous);
    previous = err;
  }
}

TEST_CASE("boolean volumes") {
  const auto cube = unit_cube();
  CHECK(signed_volume(mesh_boolean(cube, cube, BooleanOp::Union)) == doctest::Approx(1.0).epsilon(1e-12));

  const auto inner = box_mesh({0.25, 0.25, 0.25}, {0.75, 0.75, 0.75});
  const auto hollow = mesh_boolean(cube, inner, BooleanOp::Difference);
  CHECK(std::abs(signed_volume(hollow) - 0.875) <= 1e-6);
  CHECK(is_watertight(hollow));
  CHECK(euler_characteristic(hollow) == 4);  // two closed shells

  const auto prism = box_mesh({0.375, 0.375, -0.5}, {0.625, 0.625, 1.5});
  const auto drilled = mesh_boolean(cube, prism, BooleanOp::Difference);
  CHECK(is_watertight(drilled));
  CHECK(euler_characteristic(drilled) == 0);
  CHECK(signed_volume(drilled) == doctest::Approx(1.0 - 0.0625).epsilon(1e-9));

  const auto far = box_mesh({5, 5, 5}, {6, 6, 6});
  CHECK(mesh_boolean(cube, far, BooleanOp::Intersection).empty());
}

TEST_CASE("union and intersection volumes bracket their operands") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int it = 0; it < 60; ++it) {
    const Vec3 a0{u(rng), u(rng), u(rng)};
    const Vec3 b0{u(rng), u(rng), u(rng)};
    const auto a = box_mesh(a0, a0 + Vec3{0.2 + u(rng), 0.2 + u(rng), 0.2 + u(rng)});
    const auto b = box_mesh(b0, b0 + Vec3{0.2 + u(rng), 0.2 + u(rng), 0.2 + u(rng)});
    const double va = signed_volume(a), vb = signed_volume(b);
    const auto un = mesh_boolean(a, b, BooleanOp::Union);
    const auto in = mesh_boolean(a, b, BooleanOp::Intersection);
    const double eps = 1e-9 * std::max(va, vb);
    CHECK(signed_volume(un) >= std::max(va, vb) - eps);
    CHECK(signed_volume(in) <= std::min(va, vb) + eps);
    CHECK(signed_volume(un) + signed_volume(in) == doctest::Approx(va + vb).epsilon(1e-9));
  }
}

TEST_CASE("boolean chains keep every edge balanced") {
  // Random boxes and cylinders, snapped to a coarse grid so coplanar and
  // collinear contacts are frequent.
  std::mt19937 rng(1);
  auto q = [&](int n) { return std::uniform_int_distribution<int>(0, n)(rng) / static_cast<double>(n); };
  auto cylinder = [](Vec2 c, double r, double z0, double z1) {
    Polygon2D p;
    p.outer = tessellate_curve(Circle{c, r}, {0.002, 32});
    CoordinateSystem cs;
    cs.origin = {0, 0, z0};
    return extrude_profile(p, {z1 - z0, 0, ExtrudeOperation::NewBody, 1}, cs);
  };
  int steps = 0;
  for (int it = 0; it < 25; ++it) {
    TriangleMesh m = unit_cube();
    for (int step = 0; step < 4; ++step) {
      TriangleMesh tool;
      if (rng() % 2) {
        const double x0 = q(8), y0 = q(8), z0 = q(8);
        tool = box_mesh({x0 - .3, y0 - .3, z0 - .3},
                        {x0 + q(4) * .5 + .05, y0 + q(4) * .5 + .05, z0 + q(4) * .5 + .05});
      } else {
        const double z0 = q(4) - .25;
        tool = cylinder({q(8), q(8)}, .05 + q(8) * .4, z0, z0 + .1 + q(4));
      }
      const auto op = static_cast<BooleanOp>(rng() % 3);
      const auto r = mesh_boolean(m, tool, op);
      ++steps;
      REQUIRE(is_index_valid(r));
      CHECK(edges_balanced(r));
      if (r.empty()) break;
      m = r;
    }
  }
  CHECK(steps > 50);
}

TEST_CASE("build_model folds parts") {
  const auto cube = build(cube_json());
  CHECK(cube.triangles.size() == 12);
  CHECK(signed_volume(cube) == doctest::Approx(1.0));

  const auto cut = build(sequence_json({part_json({rect_loop(0, 0, 1, 1)}, 1.0, "new_body"),
                                        part_json({circle_loop(0.5, 0.5, 0.2)}, 2.0, "cut", -0.5)}));
  CHECK(is_watertight(cut));
  CHECK(euler_characteristic(cut) == 0);

  const auto two = build(two_boxes_json());
  CHECK(segment_count(two) == 2);
  CHECK(euler_characteristic(two) == 4);

  // New bodies are not merged even when they overlap.
  const auto overlap = build(sequence_json(
      {part_json({rect_loop(0, 0, 1, 1)}, 1.0, "new_body"), part_json({rect_loop(0.5, 0, 1.5, 1)}, 1.0, "new_body")}));
  CHECK(signed_volume(overlap) == doctest::Approx(2.0));

  const auto seq = parse_sequence_unchecked(sequence_json(
      {part_json({rect_loop(0, 0, 1, 1)}, 1.0, "new_body"),
       R"({"coordinate_system":{"origin":[0,0,0],"x_axis":[1,0,0],"y_axis":[0,1,0],"z_axis":[0,0,1]},)"
       R"("sketch":{"profiles":[{"loops":[{"curves":[{"type":"line","start":[0,0],"end":[2,2]},)"
       R"({"type":"line","start":[2,2],"end":[2,0]},{"type":"line","start":[2,0],"end":[0,1]},)"
       R"({"type":"line","start":[0,1],"end":[0,0]}]}]}]},)"
       R"("extrusion":{"distance_toward":1,"distance_opposite":0,"operation":"join","sketch_scale":1}})"}));
  try {
    build_model(seq);
    FAIL("expected KernelError");
  } catch (const KernelError& e) {
    CHECK(e.kind() == KernelErrorKind::SelfIntersectingLoop);
    CHECK(e.part_index() == 1);
  }
}

TEST_CASE("build_model is deterministic") {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 10; ++i) {
    const auto text = random_sequence_json(rng, 4);
    TriangleMesh a, b;
    try {
      a = build(text);
    } catch (const KernelError&) {
      continue;
    }
    b = build(text);
    CHECK(a == b);
  }
}

TEST_CASE("surface sampling") {
  const auto cube = unit_cube();
  CHECK(sample_surface(cube, 0, 1).empty());
  CHECK(sample_surface(cube, 100, 42) == sample_surface(cube, 100, 42));
  CHECK(sample_surface(cube, 100, 42) != sample_surface(cube, 100, 43));
  CHECK_THROWS_AS(sample_surface(TriangleMesh{}, 5, 0), KernelError);

  // Unit square split into triangles of area 0.25, 0.25 and 0.5.
  TriangleMesh sheet;
  sheet.vertices = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}, {0.5, 0, 0}};
  sheet.triangles = {{0, 4, 3}, {4, 1, 2}, {4, 2, 3}};
  const double areas[] = {0.25, 0.25, 0.5};
  const std::size_t n = 100000;
  const auto pts = sample_surface(sheet, n, 7);
  double counts[3] = {0, 0, 0};
  for (const auto& p : pts) {
    if (2.0 * p.x + p.y <= 1.0) {
      counts[0] += 1;
    } else if (p.y <= 2.0 * p.x - 1.0) {
      counts[1] += 1;
    } else {
      counts[2] += 1;
    }
  }
  double chi2 = 0.0;
  for (int k = 0; k < 3; ++k) {
    const double e = areas[k] * static_cast<double>(n);
    chi2 += (counts[k] - e) * (counts[k] - e) / e;
  }
  CHECK(chi2 < 13.82);  // two degrees of freedom, p = 0.001
}

TEST_CASE("STL and OBJ round trips preserve the mesh") {
  const auto m = build(sequence_json({part_json({circle_loop(0, 0, 1.0)}, 1.0, "new_body")}));
  std::stringstream stl;
  write_stl(stl, m);
  const auto from_stl = read_stl(stl);
  CHECK(from_stl.triangles.size() == m.triangles.size());
  CHECK(is_watertight(from_stl));
  CHECK(signed_volume(from_stl) == doctest::Approx(signed_volume(m)).epsilon(1e-6));

  std::stringstream obj;
  write_obj(obj, m);
  const auto from_obj = read_obj(obj);
  CHECK(from_obj.triangles == m.triangles);
  CHECK(signed_volume(from_obj) == doctest::Approx(signed_volume(m)).epsilon(1e-12));

  std::stringstream quad("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1/1 2/2 3/3 -1\n");
  CHECK(read_obj(quad).triangles.size() == 2);

  std::stringstream junk("not an stl");
  CHECK_THROWS_AS(read_stl(junk), MeshIoError);
}
