#include "cadmetrics/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "cadmetrics/kernel.hpp"

namespace cadmetrics {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Same expression the brute-force scan uses, so minima agree bit for bit.
inline double sq(Vec3 a, Vec3 b) { return squared_distance(a, b); }

double mean_nearest(const std::vector<Vec3>& from, const KdTree& to) {
  double sum = 0.0;
  for (const Vec3& x : from) sum += to.nearest_squared(x);
  return sum / static_cast<double>(from.size());
}

}  // namespace

// ---------------------------------------------------------------------------
// kd-tree

KdTree::KdTree(std::vector<Vec3> points) : points_(std::move(points)) {
  if (!points_.empty()) {
    nodes_.reserve(2 * points_.size() / 8 + 1);
    build(0, static_cast<std::uint32_t>(points_.size()));
  }
}

std::int32_t KdTree::build(std::uint32_t begin, std::uint32_t end) {
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back(Node{begin, end});
  if (end - begin <= 8) return id;
  Aabb box;
  for (std::uint32_t i = begin; i < end; ++i) box.expand(points_[i]);
  const Vec3 ext = box.extent();
  const int axis = ext.x >= ext.y && ext.x >= ext.z ? 0 : (ext.y >= ext.z ? 1 : 2);
  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(points_.begin() + begin, points_.begin() + mid, points_.begin() + end,
                   [axis](Vec3 a, Vec3 b) { return a[axis] < b[axis]; });
  // Read before the children reorder their ranges.
  const double split = points_[mid][axis];
  const std::int32_t left = build(begin, mid);
  const std::int32_t right = build(mid, end);
  nodes_[id].left = left;
  nodes_[id].right = right;
  nodes_[id].axis = axis;
  nodes_[id].split = split;
  return id;
}

void KdTree::search(std::int32_t id, Vec3 q, double& best) const {
  const Node& node = nodes_[id];
  if (node.left < 0) {
    for (std::uint32_t i = node.begin; i < node.end; ++i) best = std::min(best, sq(q, points_[i]));
    return;
  }
  // Points left of the split have coordinate <= split, right ones >= split.
  const double diff = q[node.axis] - node.split;
  const std::int32_t near = diff < 0.0 ? node.left : node.right;
  const std::int32_t far = diff < 0.0 ? node.right : node.left;
  search(near, q, best);
  // A single-axis square never exceeds the full squared distance in floating point.
  if (diff * diff <= best) search(far, q, best);
}

double KdTree::nearest_squared(Vec3 q) const {
  if (points_.empty()) throw EmptyCloudError("nearest query on an empty cloud");
  double best = kInf;
  search(0, q, best);
  return best;
}

double chamfer_distance(const std::vector<Vec3>& p, const std::vector<Vec3>& q) {
  if (p.empty() || q.empty()) throw EmptyCloudError("chamfer distance needs two nonempty clouds");
  const KdTree tp(p);
  const KdTree tq(q);
  return mean_nearest(p, tq) + mean_nearest(q, tp);
}

double normalized_chamfer(const TriangleMesh& pred, const TriangleMesh& gt, const ChamferConfig& config) {
  if (pred.empty() || gt.empty()) throw EmptyCloudError("chamfer distance needs two nonempty meshes");
  const Aabb box = bounds(gt);
  const Vec3 ext = box.extent();
  const double longest = std::max({ext.x, ext.y, ext.z});
  const double scale = longest > 0.0 ? 2.0 / longest : 1.0;
  const Vec3 shift = -box.center();
  const auto p = sample_surface(translated_scaled(pred, shift, scale), config.samples, config.seed);
  const auto q = sample_surface(translated_scaled(gt, shift, scale), config.samples, config.seed);
  return chamfer_distance(p, q) * config.report_scale;
}

// ---------------------------------------------------------------------------
// Hungarian assignment (shortest augmenting paths with potentials)

Assignment hungarian(const std::vector<std::vector<double>>& cost) {
  Assignment result;
  const std::size_t rows = cost.size();
  const std::size_t cols = rows == 0 ? 0 : cost[0].size();
  if (rows == 0 || cols == 0) return result;

  const bool transpose = rows > cols;
  const std::size_t n = transpose ? cols : rows;
  const std::size_t m = transpose ? rows : cols;
  auto a = [&](std::size_t i, std::size_t j) { return transpose ? cost[j - 1][i - 1] : cost[i - 1][j - 1]; };

  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0), minv(m + 1);
  std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
  std::vector<bool> used(m + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::fill(used.begin(), used.end(), false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = a(i0, j) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  for (std::size_t j = 1; j <= m; ++j) {
    if (p[j] == 0) continue;
    const std::size_t r = transpose ? j - 1 : p[j] - 1;
    const std::size_t c = transpose ? p[j] - 1 : j - 1;
    result.pairs.emplace_back(r, c);
  }
  std::sort(result.pairs.begin(), result.pairs.end());
  for (const auto& [r, c] : result.pairs) result.cost += cost[r][c];
  return result;
}

// ---------------------------------------------------------------------------
// Primitive extraction and F1

std::string_view to_string(PrimitiveKind kind) {
  switch (kind) {
    case PrimitiveKind::Line: return "line";
    case PrimitiveKind::Arc: return "arc";
    case PrimitiveKind::Circle: return "circle";
    case PrimitiveKind::Extrusion: return "extrusion";
  }
  return "unknown";
}

std::size_t parameter_count(PrimitiveKind kind) {
  switch (kind) {
    case PrimitiveKind::Line: return 7;
    case PrimitiveKind::Arc: return 5;
    case PrimitiveKind::Circle: return 7;
    case PrimitiveKind::Extrusion: return 6;
  }
  return 0;
}

namespace {

/// Flips `d` so its first clearly nonzero component is positive.
Vec3 canonical_direction(Vec3 d) {
  for (int k = 0; k < 3; ++k) {
    if (std::abs(d[k]) > 1e-12) return d[k] < 0.0 ? -d : d;
  }
  return d;
}

void push3(std::vector<double>& out, Vec3 v) { out.insert(out.end(), {v.x, v.y, v.z}); }

// Indices of the entries that carry world lengths and need the common scale.
bool is_length_slot(PrimitiveKind kind, std::size_t i) {
  switch (kind) {
    case PrimitiveKind::Line: return i < 3 || i == 6;
    case PrimitiveKind::Arc: return i < 4;
    case PrimitiveKind::Circle: return i < 4;
    case PrimitiveKind::Extrusion: return i == 0;
  }
  return false;
}

}  // namespace

std::vector<PrimitiveRecord> extract_primitives(const CadSequence& seq) {
  std::vector<PrimitiveRecord> out;
  for (const Part& part : seq.parts) {
    const CoordinateSystem& cs = part.coordinate_system;
    const double s = part.extrusion.sketch_scale;
    auto world = [&](Vec2 p) { return cs.to_world(p * s); };
    for (const Profile& profile : part.profiles) {
      for (const Loop& loop : profile.loops) {
        for (const Curve& curve : loop.curves) {
          PrimitiveRecord rec;
          if (const auto* line = std::get_if<Line>(&curve)) {
            rec.kind = PrimitiveKind::Line;
            const Vec3 a = world(line->start);
            const Vec3 b = world(line->end);
            push3(rec.params, (a + b) * 0.5);
            push3(rec.params, canonical_direction(normalized(b - a)));
            rec.params.push_back(distance(a, b));
          } else if (const auto* arc = std::get_if<Arc>(&curve)) {
            rec.kind = PrimitiveKind::Arc;
            const ArcFit fit = fit_arc(*arc);
            push3(rec.params, world(fit.center));
            rec.params.push_back(fit.radius * s);
            rec.params.push_back(std::abs(fit.sweep) / (2.0 * std::numbers::pi));
          } else {
            const auto& circle = std::get<Circle>(curve);
            rec.kind = PrimitiveKind::Circle;
            push3(rec.params, world(circle.center));
            rec.params.push_back(circle.radius * s);
            push3(rec.params, canonical_direction(cs.z_axis));
          }
          out.push_back(std::move(rec));
        }
      }
    }
    PrimitiveRecord ext;
    ext.kind = PrimitiveKind::Extrusion;
    ext.params.push_back(part.extrusion.distance_toward + part.extrusion.distance_opposite);
    for (ExtrudeOperation op : {ExtrudeOperation::NewBody, ExtrudeOperation::Join, ExtrudeOperation::Cut,
                                ExtrudeOperation::Intersect}) {
      ext.params.push_back(part.extrusion.operation == op ? 1.0 : 0.0);
    }
    ext.params.push_back(s);
    out.push_back(std::move(ext));
  }
  return out;
}

double sequence_extent(const CadSequence& seq) {
  Aabb box;
  for (const Part& part : seq.parts) {
    const CoordinateSystem& cs = part.coordinate_system;
    const double s = part.extrusion.sketch_scale;
    const double heights[] = {-part.extrusion.distance_opposite, part.extrusion.distance_toward};
    auto add = [&](Vec2 p) {
      for (double h : heights) box.expand(cs.to_world(p * s, h));
    };
    for (const Profile& profile : part.profiles) {
      for (const Loop& loop : profile.loops) {
        for (const Curve& curve : loop.curves) {
          if (const auto* line = std::get_if<Line>(&curve)) {
            add(line->start);
            add(line->end);
          } else if (const auto* arc = std::get_if<Arc>(&curve)) {
            add(arc->start);
            add(arc->mid);
            add(arc->end);
          } else {
            const auto& c = std::get<Circle>(curve);
            for (Vec2 d : {Vec2{1, 0}, Vec2{-1, 0}, Vec2{0, 1}, Vec2{0, -1}}) add(c.center + d * c.radius);
          }
        }
      }
    }
  }
  return box.lo.x <= box.hi.x ? box.diagonal() : 0.0;
}

F1Result f1_from_counts(std::int64_t tp, std::int64_t fp, std::int64_t fn) {
  F1Result r;
  r.tp = tp;
  r.fp = fp;
  r.fn = fn;
  r.precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  r.recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  r.f1 = r.precision + r.recall > 0.0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
  return r;
}

std::map<PrimitiveKind, F1Result> f1_per_type(const CadSequence& pred, const CadSequence& gt, double tau) {
  const auto pred_records = extract_primitives(pred);
  const auto gt_records = extract_primitives(gt);
  double scale = std::max(sequence_extent(pred), sequence_extent(gt));
  if (!(scale > 0.0) || !std::isfinite(scale)) scale = 1.0;

  std::map<PrimitiveKind, F1Result> out;
  for (PrimitiveKind kind : kAllPrimitiveKinds) {
    std::vector<std::vector<double>> p;
    std::vector<std::vector<double>> g;
    auto collect = [&](const std::vector<PrimitiveRecord>& records, std::vector<std::vector<double>>& into) {
      for (const auto& rec : records) {
        if (rec.kind != kind) continue;
        std::vector<double> v = rec.params;
        for (std::size_t i = 0; i < v.size(); ++i) {
          if (is_length_slot(kind, i)) v[i] /= scale;
        }
        into.push_back(std::move(v));
      }
    };
    collect(pred_records, p);
    collect(gt_records, g);
    if (p.empty() && g.empty()) continue;

    std::int64_t tp = 0;
    if (!p.empty() && !g.empty()) {
      std::vector<std::vector<double>> cost(p.size(), std::vector<double>(g.size()));
      for (std::size_t i = 0; i < p.size(); ++i) {
        for (std::size_t j = 0; j < g.size(); ++j) {
          double acc = 0.0;
          for (std::size_t k = 0; k < p[i].size(); ++k) {
            const double d = p[i][k] - g[j][k];
            acc += d * d;
          }
          cost[i][j] = std::sqrt(acc);
        }
      }
      for (const auto& [i, j] : hungarian(cost).pairs) {
        if (cost[i][j] <= tau) ++tp;
      }
    }
    const auto np = static_cast<std::int64_t>(p.size());
    const auto ng = static_cast<std::int64_t>(g.size());
    out[kind] = f1_from_counts(tp, np - tp, ng - tp);
  }
  return out;
}

}  // namespace cadmetrics
