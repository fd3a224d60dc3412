#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "cadmetrics/kernel.hpp"

namespace cadmetrics {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
// Relative sine below which three points count as collinear.
constexpr double kCollinearTolerance = 1e-10;

}  // namespace

ArcFit fit_arc(const Arc& arc) {
  const Vec2 b = arc.mid - arc.start;
  const Vec2 c = arc.end - arc.start;
  const double d = 2.0 * cross(b, c);
  const double span = std::max({norm(b), norm(c), distance(arc.mid, arc.end)});
  if (!(std::abs(d) > 1e-12 * span * span)) {
    throw KernelError(KernelErrorKind::DegenerateCurve, "arc points are collinear");
  }
  const double bb = dot(b, b);
  const double cc = dot(c, c);
  const Vec2 offset{(c.y * bb - b.y * cc) / d, (b.x * cc - c.x * bb) / d};
  ArcFit g;
  g.center = arc.start + offset;
  g.radius = norm(offset);
  g.start_angle = std::atan2(arc.start.y - g.center.y, arc.start.x - g.center.x);
  const double end_angle = std::atan2(arc.end.y - g.center.y, arc.end.x - g.center.x);
  const bool ccw = d > 0.0;
  double sweep = ccw ? end_angle - g.start_angle : g.start_angle - end_angle;
  while (sweep <= 0.0) sweep += kTwoPi;
  while (sweep > kTwoPi) sweep -= kTwoPi;
  g.sweep = ccw ? sweep : -sweep;
  return g;
}

namespace {

/// Largest angular step whose chord sagitta stays within tolerance.
double max_angular_step(double radius, double tolerance) {
  const double ratio = std::min(tolerance / radius, 1.0);
  return 2.0 * std::acos(1.0 - ratio);
}

void expand(Vec2& lo, Vec2& hi, Vec2 p) {
  lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
  hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
}

bool on_segment(Vec2 a, Vec2 b, Vec2 p) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
         p.y <= std::max(a.y, b.y);
}

int sign(double v) { return (v > 0.0) - (v < 0.0); }

/// Closed-segment intersection test (touching counts).
bool segments_intersect(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
  const int o1 = sign(orient2d(a, b, c));
  const int o2 = sign(orient2d(a, b, d));
  const int o3 = sign(orient2d(c, d, a));
  const int o4 = sign(orient2d(c, d, b));
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(a, b, c)) return true;
  if (o2 == 0 && on_segment(a, b, d)) return true;
  if (o3 == 0 && on_segment(c, d, a)) return true;
  if (o4 == 0 && on_segment(c, d, b)) return true;
  return false;
}

bool ring_is_simple(const std::vector<Vec2>& ring) {
  const std::size_t n = ring.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 a = ring[i];
    const Vec2 b = ring[(i + 1) % n];
    const Vec2 c = ring[(i + 2) % n];
    // Adjacent segments folding back onto each other.
    if (orient2d(a, b, c) == 0.0 && dot(b - a, c - b) < 0.0) return false;
    for (std::size_t j = i + 2; j < n; ++j) {
      if (i == 0 && j == n - 1) continue;
      if (segments_intersect(a, b, ring[j], ring[(j + 1) % n])) return false;
    }
  }
  return true;
}

bool rings_intersect(const std::vector<Vec2>& r, const std::vector<Vec2>& s) {
  for (std::size_t i = 0; i < r.size(); ++i) {
    const Vec2 a = r[i];
    const Vec2 b = r[(i + 1) % r.size()];
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (segments_intersect(a, b, s[j], s[(j + 1) % s.size()])) return true;
    }
  }
  return false;
}

bool point_in_ring(const std::vector<Vec2>& ring, Vec2 p) {
  bool inside = false;
  for (std::size_t i = 0, j = ring.size() - 1; i < ring.size(); j = i++) {
    const Vec2 a = ring[i];
    const Vec2 b = ring[j];
    if ((a.y > p.y) != (b.y > p.y) && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x) {
      inside = !inside;
    }
  }
  return inside;
}

std::vector<Vec2> loop_ring(const Loop& loop, const TessellationParams& params) {
  std::vector<Vec2> ring;
  for (const Curve& curve : loop.curves) {
    auto pts = tessellate_curve(curve, params);
    if (std::holds_alternative<Circle>(curve)) return pts;
    ring.insert(ring.end(), pts.begin(), pts.end() - 1);
  }
  std::vector<Vec2> cleaned;
  for (Vec2 p : ring) {
    if (cleaned.empty() || distance(cleaned.back(), p) > 1e-12) cleaned.push_back(p);
  }
  while (cleaned.size() > 1 && distance(cleaned.front(), cleaned.back()) <= 1e-12) cleaned.pop_back();
  return cleaned;
}

// ---------------------------------------------------------------------------
// Ear clipping over a weakly simple chain of point indices.

class EarClipper {
 public:
  explicit EarClipper(const std::vector<Vec2>& pts) : pts_(pts) {}

  void merge_hole(std::vector<std::uint32_t>& chain, const std::vector<std::uint32_t>& hole) const {
    // Rightmost hole vertex; ties resolved by lowest index.
    std::size_t m = 0;
    for (std::size_t i = 1; i < hole.size(); ++i) {
      if (pts_[hole[i]].x > pts_[hole[m]].x) m = i;
    }
    const Vec2 mp = pts_[hole[m]];

    // Closest edge hit by the +x ray from M among edges with the interior on their left.
    const std::size_t n = chain.size();
    double best_x = INFINITY;
    std::size_t best_edge = n;
    for (std::size_t k = 0; k < n; ++k) {
      const Vec2 a = pts_[chain[k]];
      const Vec2 b = pts_[chain[(k + 1) % n]];
      if (!(a.y <= mp.y && mp.y <= b.y && a.y < b.y)) continue;
      const double x = a.x + (mp.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (x >= mp.x && x < best_x) {
        best_x = x;
        best_edge = k;
      }
    }
    if (best_edge == n) {
      throw KernelError(KernelErrorKind::TriangulationFailure, "no bridge found for hole");
    }
    const Vec2 hit{best_x, mp.y};
    const std::size_t ka = best_edge;
    const std::size_t kb = (best_edge + 1) % n;
    std::size_t bridge = pts_[chain[ka]].x > pts_[chain[kb]].x ? ka : kb;
    if (pts_[chain[ka]] == hit) bridge = ka;
    if (pts_[chain[kb]] == hit) bridge = kb;

    if (pts_[chain[bridge]] != hit) {
      // Reflex vertices inside (M, hit, P) can block visibility; take the one
      // closest in angle to the ray.
      const Vec2 pp = pts_[chain[bridge]];
      const Vec2 t0 = mp;
      Vec2 t1 = hit;
      Vec2 t2 = pp;
      if (orient2d(t0, t1, t2) < 0.0) std::swap(t1, t2);
      double best_tan = INFINITY;
      double best_dx = INFINITY;
      for (std::size_t k = 0; k < n; ++k) {
        if (k == bridge) continue;
        const Vec2 v = pts_[chain[k]];
        if (v == pp || v.x <= mp.x) continue;
        if (!(orient2d(t0, t1, v) >= 0 && orient2d(t1, t2, v) >= 0 && orient2d(t2, t0, v) >= 0)) continue;
        if (!locally_inside(chain, k, mp)) continue;
        const double dx = v.x - mp.x;
        const double tan = std::abs(v.y - mp.y) / dx;
        if (tan < best_tan || (tan == best_tan && dx < best_dx)) {
          best_tan = tan;
          best_dx = dx;
          bridge = k;
        }
      }
    }
    // Among duplicate occurrences of the bridge point choose the one whose
    // interior wedge sees M.
    const Vec2 bp = pts_[chain[bridge]];
    if (!locally_inside(chain, bridge, mp)) {
      for (std::size_t k = 0; k < n; ++k) {
        if (pts_[chain[k]] == bp && locally_inside(chain, k, mp)) {
          bridge = k;
          break;
        }
      }
    }

    std::vector<std::uint32_t> merged;
    merged.reserve(n + hole.size() + 2);
    merged.insert(merged.end(), chain.begin(), chain.begin() + static_cast<std::ptrdiff_t>(bridge) + 1);
    for (std::size_t i = 0; i <= hole.size(); ++i) merged.push_back(hole[(m + i) % hole.size()]);
    merged.push_back(chain[bridge]);
    merged.insert(merged.end(), chain.begin() + static_cast<std::ptrdiff_t>(bridge) + 1, chain.end());
    chain = std::move(merged);
  }

  std::vector<IndexTriangle> clip(const std::vector<std::uint32_t>& chain) const {
    const std::size_t n = chain.size();
    std::vector<IndexTriangle> out;
    if (n < 3) return out;
    out.reserve(n - 2);
    std::vector<std::size_t> prev(n), next(n);
    for (std::size_t i = 0; i < n; ++i) {
      prev[i] = (i + n - 1) % n;
      next[i] = (i + 1) % n;
    }
    std::vector<bool> alive(n, true);
    std::size_t remaining = n;
    // Scan starts at the lowest point index; chain[0] is outer vertex 0.
    std::size_t cur = 0;
    std::size_t stalled = 0;

    // Tier 0 takes clean ears only, tier 1 any left turn, tier 2 flat corners.
    auto is_ear = [&](std::size_t b, int tier) {
      const std::size_t a = prev[b];
      const std::size_t c = next[b];
      const Vec2 pa = pts_[chain[a]];
      const Vec2 pb = pts_[chain[b]];
      const Vec2 pc = pts_[chain[c]];
      const double o = orient2d(pa, pb, pc);
      if (tier == 0 && !strictly_convex(pa, pb, pc)) return false;
      if (tier == 1 && !(o > 0.0)) return false;
      if (tier == 2 && o < 0.0) return false;
      for (std::size_t p = next[c]; p != a; p = next[p]) {
        const Vec2 pp = pts_[chain[p]];
        if (pp == pa || pp == pb || pp == pc) continue;
        if (orient2d(pa, pb, pp) >= 0 && orient2d(pb, pc, pp) >= 0 && orient2d(pc, pa, pp) >= 0) return false;
      }
      return true;
    };

    int tier = 0;
    while (remaining > 3) {
      if (is_ear(cur, tier)) {
        const std::size_t a = prev[cur];
        const std::size_t c = next[cur];
        if (orient2d(pts_[chain[a]], pts_[chain[cur]], pts_[chain[c]]) > 0.0) {
          out.push_back({chain[a], chain[cur], chain[c]});
        }
        next[a] = c;
        prev[c] = a;
        alive[cur] = false;
        --remaining;
        cur = a;
        stalled = 0;
        tier = 0;
        continue;
      }
      cur = next[cur];
      if (++stalled > remaining) {
        if (tier == 2) {
          throw KernelError(KernelErrorKind::TriangulationFailure, "no ear found");
        }
        ++tier;
        stalled = 0;
      }
    }
    const std::size_t b = cur;
    const std::size_t a = prev[b];
    const std::size_t c = next[b];
    if (orient2d(pts_[chain[a]], pts_[chain[b]], pts_[chain[c]]) > 0.0) {
      out.push_back({chain[a], chain[b], chain[c]});
    }
    return out;
  }

 private:
  // Left turn by more than rounding noise; near-collinear corners are never ears.
  static bool strictly_convex(Vec2 a, Vec2 b, Vec2 c) {
    return orient2d(a, b, c) > kCollinearTolerance * norm(b - a) * norm(c - b);
  }

  // Whether direction towards `target` lies inside the interior wedge at chain[k].
  bool locally_inside(const std::vector<std::uint32_t>& chain, std::size_t k, Vec2 target) const {
    const std::size_t n = chain.size();
    const Vec2 a = pts_[chain[k]];
    const Vec2 prev = pts_[chain[(k + n - 1) % n]];
    const Vec2 next = pts_[chain[(k + 1) % n]];
    if (orient2d(prev, a, next) >= 0.0) {
      return orient2d(a, next, target) >= 0.0 && orient2d(prev, a, target) >= 0.0;
    }
    return orient2d(a, next, target) >= 0.0 || orient2d(prev, a, target) >= 0.0;
  }

  const std::vector<Vec2>& pts_;
};

}  // namespace

std::string_view to_string(KernelErrorKind kind) {
  switch (kind) {
    case KernelErrorKind::InvalidSequence: return "InvalidSequence";
    case KernelErrorKind::DegenerateCurve: return "DegenerateCurve";
    case KernelErrorKind::DegenerateLoop: return "DegenerateLoop";
    case KernelErrorKind::SelfIntersectingLoop: return "SelfIntersectingLoop";
    case KernelErrorKind::HoleOutsideOuter: return "HoleOutsideOuter";
    case KernelErrorKind::OverlappingHoles: return "OverlappingHoles";
    case KernelErrorKind::TriangulationFailure: return "TriangulationFailure";
    case KernelErrorKind::ZeroExtent: return "ZeroExtent";
    case KernelErrorKind::BooleanFailure: return "BooleanFailure";
    case KernelErrorKind::EmptyResult: return "EmptyResult";
    case KernelErrorKind::EmptyMesh: return "EmptyMesh";
  }
  return "Unknown";
}

KernelError::KernelError(KernelErrorKind kind, const std::string& message, int part_index)
    : std::runtime_error(std::string(to_string(kind)) +
                         (part_index >= 0 ? " in part " + std::to_string(part_index) : "") + ": " +
                         message),
      kind_(kind),
      part_index_(part_index),
      detail_(message) {}

TessellationParams KernelConfig::params_for(const Profile& profile) const {
  TessellationParams params;
  params.min_segments_per_circle = min_segments_per_circle;
  if (absolute_chord_tolerance) {
    params.chord_tolerance = *absolute_chord_tolerance;
    return params;
  }
  Vec2 lo{INFINITY, INFINITY};
  Vec2 hi{-INFINITY, -INFINITY};
  for (const Loop& loop : profile.loops) {
    for (const Curve& curve : loop.curves) {
      if (const auto* line = std::get_if<Line>(&curve)) {
        expand(lo, hi, line->start);
        expand(lo, hi, line->end);
      } else if (const auto* circle = std::get_if<Circle>(&curve)) {
        expand(lo, hi, circle->center - Vec2{circle->radius, circle->radius});
        expand(lo, hi, circle->center + Vec2{circle->radius, circle->radius});
      } else {
        const auto& arc = std::get<Arc>(curve);
        expand(lo, hi, arc.start);
        expand(lo, hi, arc.mid);
        expand(lo, hi, arc.end);
        try {
          const ArcFit g = fit_arc(arc);
          // Axis-extreme points that fall inside the swept range.
          for (int q = 0; q < 4; ++q) {
            const double angle = q * std::numbers::pi / 2.0;
            double rel = g.sweep > 0 ? angle - g.start_angle : g.start_angle - angle;
            rel = std::fmod(rel, kTwoPi);
            if (rel < 0) rel += kTwoPi;
            if (rel <= std::abs(g.sweep)) {
              expand(lo, hi, g.center + Vec2{g.radius * std::cos(angle), g.radius * std::sin(angle)});
            }
          }
        } catch (const KernelError&) {
        }
      }
    }
  }
  const double diag = lo.x <= hi.x ? distance(lo, hi) : 0.0;
  params.chord_tolerance = relative_chord_tolerance * (diag > 0.0 ? diag : 1.0);
  return params;
}

std::vector<Vec2> Polygon2D::flattened() const {
  std::vector<Vec2> out = outer;
  for (const auto& hole : holes) out.insert(out.end(), hole.begin(), hole.end());
  return out;
}

double signed_area(const std::vector<Vec2>& ring) {
  double twice = 0.0;
  for (std::size_t i = 0, j = ring.size() - 1; i < ring.size(); j = i++) {
    twice += cross(ring[j], ring[i]);
  }
  return 0.5 * twice;
}

double polygon_area(const Polygon2D& poly) {
  double area = signed_area(poly.outer);
  for (const auto& hole : poly.holes) area += signed_area(hole);
  return area;
}

int circle_segment_count(double radius, const TessellationParams& params) {
  const double step = max_angular_step(radius, params.chord_tolerance);
  const double needed = std::ceil(kTwoPi / step);
  const int capped = needed > 1e6 ? 1000000 : static_cast<int>(needed);
  return std::max({params.min_segments_per_circle, capped, 3});
}

std::vector<Vec2> tessellate_curve(const Curve& curve, const TessellationParams& params) {
  if (!(params.chord_tolerance > 0.0)) {
    throw KernelError(KernelErrorKind::DegenerateCurve, "chord tolerance must be positive");
  }
  if (const auto* line = std::get_if<Line>(&curve)) return {line->start, line->end};

  if (const auto* circle = std::get_if<Circle>(&curve)) {
    if (!(circle->radius > 0.0)) throw KernelError(KernelErrorKind::DegenerateCurve, "circle radius <= 0");
    const int n = circle_segment_count(circle->radius, params);
    std::vector<Vec2> ring;
    ring.reserve(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
      const double angle = kTwoPi * k / n;
      ring.push_back(circle->center + Vec2{circle->radius * std::cos(angle), circle->radius * std::sin(angle)});
    }
    return ring;
  }

  const auto& arc = std::get<Arc>(curve);
  const ArcFit g = fit_arc(arc);
  const double sweep = std::abs(g.sweep);
  const double step = max_angular_step(g.radius, params.chord_tolerance);
  const double by_tolerance = std::ceil(sweep / step);
  const double by_minimum = std::ceil(params.min_segments_per_circle * sweep / kTwoPi);
  const int n = static_cast<int>(std::min(1e6, std::max({1.0, by_tolerance, by_minimum})));
  std::vector<Vec2> pts;
  pts.reserve(static_cast<std::size_t>(n) + 1);
  pts.push_back(arc.start);
  for (int k = 1; k < n; ++k) {
    const double angle = g.start_angle + g.sweep * k / n;
    pts.push_back(g.center + Vec2{g.radius * std::cos(angle), g.radius * std::sin(angle)});
  }
  pts.push_back(arc.end);
  return pts;
}

Polygon2D build_profile(const Profile& profile, const TessellationParams& params) {
  if (profile.loops.empty()) throw KernelError(KernelErrorKind::DegenerateLoop, "profile has no loops");
  std::vector<std::vector<Vec2>> rings;
  for (const Loop& loop : profile.loops) {
    auto ring = loop_ring(loop, params);
    if (ring.size() < 3 || signed_area(ring) == 0.0) {
      throw KernelError(KernelErrorKind::DegenerateLoop, "loop encloses no area");
    }
    if (!ring_is_simple(ring)) {
      throw KernelError(KernelErrorKind::SelfIntersectingLoop, "loop crosses itself");
    }
    rings.push_back(std::move(ring));
  }

  Polygon2D poly;
  poly.outer = std::move(rings.front());
  if (signed_area(poly.outer) < 0.0) std::reverse(poly.outer.begin(), poly.outer.end());
  for (std::size_t i = 1; i < rings.size(); ++i) {
    auto& hole = rings[i];
    if (rings_intersect(poly.outer, hole) || !point_in_ring(poly.outer, hole.front())) {
      throw KernelError(KernelErrorKind::HoleOutsideOuter, "hole " + std::to_string(i) + " is not inside the outer loop");
    }
    if (signed_area(hole) > 0.0) std::reverse(hole.begin(), hole.end());
    for (const auto& other : poly.holes) {
      if (rings_intersect(other, hole) || point_in_ring(other, hole.front()) ||
          point_in_ring(hole, other.front())) {
        throw KernelError(KernelErrorKind::OverlappingHoles, "holes overlap");
      }
    }
    poly.holes.push_back(std::move(hole));
  }
  return poly;
}

std::vector<IndexTriangle> triangulate_indices(const Polygon2D& poly) {
  const std::vector<Vec2> pts = poly.flattened();
  if (poly.outer.size() < 3) throw KernelError(KernelErrorKind::TriangulationFailure, "outer ring has < 3 points");
  for (Vec2 p : pts) {
    if (!is_finite(p)) throw KernelError(KernelErrorKind::TriangulationFailure, "non-finite vertex");
  }

  std::vector<std::uint32_t> chain(poly.outer.size());
  std::iota(chain.begin(), chain.end(), 0U);

  // Holes are bridged right-to-left so that each bridge sees the already
  // merged boundary.
  std::vector<std::vector<std::uint32_t>> holes;
  std::uint32_t offset = static_cast<std::uint32_t>(poly.outer.size());
  for (const auto& hole : poly.holes) {
    if (hole.size() < 3) throw KernelError(KernelErrorKind::TriangulationFailure, "hole ring has < 3 points");
    std::vector<std::uint32_t> idx(hole.size());
    std::iota(idx.begin(), idx.end(), offset);
    offset += static_cast<std::uint32_t>(hole.size());
    holes.push_back(std::move(idx));
  }
  auto max_x = [&](const std::vector<std::uint32_t>& ring) {
    double m = -INFINITY;
    for (auto i : ring) m = std::max(m, pts[i].x);
    return m;
  };
  std::stable_sort(holes.begin(), holes.end(),
                   [&](const auto& a, const auto& b) { return max_x(a) > max_x(b); });

  EarClipper clipper(pts);
  for (const auto& hole : holes) clipper.merge_hole(chain, hole);
  return clipper.clip(chain);
}

std::vector<Triangle2D> triangulate(const Polygon2D& poly) {
  const auto pts = poly.flattened();
  std::vector<Triangle2D> out;
  for (const auto& t : triangulate_indices(poly)) out.push_back({pts[t[0]], pts[t[1]], pts[t[2]]});
  return out;
}

}  // namespace cadmetrics
