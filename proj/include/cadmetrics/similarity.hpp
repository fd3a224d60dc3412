#pragma once

// Pair metrics: Chamfer distance between point clouds, Hungarian assignment,
// and per-primitive-kind F1 between construction sequences.

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string_view>
#include <utility>
#include <vector>

#include "cadmetrics/mesh.hpp"
#include "cadmetrics/schema.hpp"

namespace cadmetrics {

class EmptyCloudError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Exact nearest-neighbour queries over a fixed point set.
class KdTree {
 public:
  explicit KdTree(std::vector<Vec3> points);

  /// Smallest squared distance from q to any stored point. The value is the
  /// same double a linear scan would produce.
  double nearest_squared(Vec3 q) const;
  std::size_t size() const { return points_.size(); }

 private:
  struct Node {
    std::uint32_t begin, end;  // leaf range
    std::int32_t left = -1, right = -1;
    int axis = 0;
    double split = 0.0;
  };
  std::int32_t build(std::uint32_t begin, std::uint32_t end);
  void search(std::int32_t node, Vec3 q, double& best) const;

  std::vector<Vec3> points_;
  std::vector<Node> nodes_;
};

/// mean_x min_y |x-y|^2 + mean_y min_x |x-y|^2 over the two clouds.
double chamfer_distance(const std::vector<Vec3>& p, const std::vector<Vec3>& q);

struct ChamferConfig {
  std::size_t samples = 8192;
  std::uint64_t seed = 0;
  double report_scale = 1e3;
};

/// Both meshes are moved and scaled by the transform that fits the ground
/// truth's bounding box into [-1,1]^3, sampled with the same seed, and the
/// squared-distance Chamfer value is multiplied by `report_scale`.
double normalized_chamfer(const TriangleMesh& pred, const TriangleMesh& gt, const ChamferConfig& config = {});

/// Minimum-cost matching of size min(rows, cols). Pairs are (row, col), sorted by row.
struct Assignment {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  double cost = 0.0;
};
Assignment hungarian(const std::vector<std::vector<double>>& cost);

enum class PrimitiveKind { Line, Arc, Circle, Extrusion };
std::string_view to_string(PrimitiveKind kind);
inline constexpr PrimitiveKind kAllPrimitiveKinds[] = {PrimitiveKind::Line, PrimitiveKind::Arc,
                                                        PrimitiveKind::Circle, PrimitiveKind::Extrusion};

/// World-frame parameters. Lengths and positions are in world units here and
/// get divided by a common scale when matched.
///   line:      midpoint(3), unit direction with canonical sign(3), length(1)
///   arc:       center(3), radius(1), swept angle / 2pi(1)
///   circle:    center(3), radius(1), plane normal with canonical sign(3)
///   extrusion: total distance(1), operation one-hot(4), sketch_scale(1)
struct PrimitiveRecord {
  PrimitiveKind kind;
  std::vector<double> params;
};

std::size_t parameter_count(PrimitiveKind kind);

std::vector<PrimitiveRecord> extract_primitives(const CadSequence& seq);

/// Bounding-box diagonal of every sketch point placed at both extrusion ends.
double sequence_extent(const CadSequence& seq);

struct F1Result {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
};

/// F1 from match counts; a zero denominator yields 0.
F1Result f1_from_counts(std::int64_t tp, std::int64_t fp, std::int64_t fn);

/// Per kind present in either sequence: Hungarian matching on the L2 distance
/// of parameter vectors (positions and lengths divided by the larger of the two
/// sequence extents) and matches costing at most `tau` count as true positives.
std::map<PrimitiveKind, F1Result> f1_per_type(const CadSequence& pred, const CadSequence& gt, double tau = 0.05);

}  // namespace cadmetrics
