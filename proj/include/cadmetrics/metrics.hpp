#pragma once

// Per-mesh and mesh-pair topology / shape metrics.

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string_view>
#include <utility>
#include <vector>

#include "cadmetrics/mesh.hpp"

namespace cadmetrics {

enum class MetricErrorKind { NonWatertight, NonPositiveVolume, PrerequisiteNotMet, InvalidArgument };

std::string_view to_string(MetricErrorKind kind);

class MetricError : public std::runtime_error {
 public:
  MetricError(MetricErrorKind kind, const std::string& message);
  MetricErrorKind kind() const { return kind_; }

 private:
  MetricErrorKind kind_;
};

/// One triangle incident to an undirected edge. `forward` is true when the
/// triangle traverses the edge from the lower to the higher vertex index.
struct EdgeIncidence {
  std::uint32_t triangle;
  bool forward;
};

using EdgeKey = std::pair<std::uint32_t, std::uint32_t>;  // first < second

struct EdgeAdjacency {
  std::map<EdgeKey, std::vector<EdgeIncidence>> edges;

  static EdgeAdjacency build(const TriangleMesh& mesh);
};

struct MeshTopologyReport {
  std::int64_t vertex_count = 0;  ///< vertices referenced by at least one triangle
  std::int64_t edge_count = 0;
  std::int64_t face_count = 0;
  std::int64_t euler_characteristic = 0;
  bool is_watertight = false;
  std::int64_t component_count = 0;
};

MeshTopologyReport topology(const TriangleMesh& mesh);

/// Every edge shared by exactly two oppositely oriented triangles, and every
/// vertex fan a single cycle.
bool is_watertight(const TriangleMesh& mesh);

/// V - E + F over referenced vertices and distinct undirected edges.
std::int64_t euler_characteristic(const TriangleMesh& mesh);

/// Exact Euler characteristic match; both meshes must be watertight.
int eecm(const TriangleMesh& pred, const TriangleMesh& gt);

/// Wadell sphericity pi^(1/3) (6V)^(2/3) / area.
double sphericity(const TriangleMesh& mesh);
double sphericity_discrepancy(const TriangleMesh& pred, const TriangleMesh& gt);

/// Mean over vertices of the summed signed dihedral angles (convex positive)
/// of all edges that intersect the ball of `radius` around the vertex.
double mean_curvature_average(const TriangleMesh& mesh, double radius);

/// |kbar_pred - kbar_gt| where each mesh is first scaled so its own bounding
/// box has unit diagonal, then measured at `radius`.
double dmcd(const TriangleMesh& pred, const TriangleMesh& gt, double radius = 0.01);

/// Summed length of edges incident to fewer than two triangles.
double dangling_edge_length(const TriangleMesh& mesh);

/// Fraction of triangles that properly intersect a triangle sharing no vertex with them.
double self_intersection_ratio(const TriangleMesh& mesh);

/// Flags per triangle; `brute_force` skips the BVH.
std::vector<bool> self_intersecting_triangles(const TriangleMesh& mesh, bool brute_force = false);

/// ||sum A_f n_f|| / sum A_f.
double flux_enclosure_error(const TriangleMesh& mesh);

/// Connected components of the edge-adjacency graph of triangles.
std::int64_t segment_count(const TriangleMesh& mesh);
double segment_error(const TriangleMesh& pred, const TriangleMesh& gt);

/// Non-coplanar / coplanar triangle overlap predicate used by SIR.
bool triangles_intersect(const std::array<Vec3, 3>& t1, const std::array<Vec3, 3>& t2, double eps);

}  // namespace cadmetrics
