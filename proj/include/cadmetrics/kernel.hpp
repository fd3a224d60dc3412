#pragma once

// Sketch-and-extrude geometry kernel: curve tessellation, profile polygons,
// ear-clipping triangulation, prism extrusion, BSP mesh booleans and the
// sequence-to-mesh fold.

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "cadmetrics/mesh.hpp"
#include "cadmetrics/schema.hpp"

namespace cadmetrics {

enum class KernelErrorKind {
  InvalidSequence,
  DegenerateCurve,
  DegenerateLoop,
  SelfIntersectingLoop,
  HoleOutsideOuter,
  OverlappingHoles,
  TriangulationFailure,
  ZeroExtent,
  BooleanFailure,
  EmptyResult,
  EmptyMesh,
};

std::string_view to_string(KernelErrorKind kind);

class KernelError : public std::runtime_error {
 public:
  KernelError(KernelErrorKind kind, const std::string& message, int part_index = -1);

  KernelErrorKind kind() const { return kind_; }
  /// Index of the part being built when the error was raised, or -1.
  int part_index() const { return part_index_; }
  /// Message without the kind and part prefix.
  const std::string& detail() const { return detail_; }

 private:
  KernelErrorKind kind_;
  int part_index_;
  std::string detail_;
};

/// Absolute tessellation controls, in sketch units.
struct TessellationParams {
  double chord_tolerance = 0.01;  ///< max sagitta of any arc/circle segment
  int min_segments_per_circle = 32;
};

/// How build_model derives per-profile TessellationParams.
struct KernelConfig {
  /// Chord tolerance as a fraction of each profile's bounding-box diagonal.
  double relative_chord_tolerance = 0.002;
  /// Overrides the relative tolerance when set.
  std::optional<double> absolute_chord_tolerance;
  int min_segments_per_circle = 32;

  TessellationParams params_for(const Profile& profile) const;
};

/// Outer ring counter-clockwise, holes clockwise. Rings are open (no repeated
/// closing point).
struct Polygon2D {
  std::vector<Vec2> outer;
  std::vector<std::vector<Vec2>> holes;

  /// Outer followed by holes in order; the index space of triangulate().
  std::vector<Vec2> flattened() const;
};

using Triangle2D = std::array<Vec2, 3>;
using IndexTriangle = std::array<std::uint32_t, 3>;

double signed_area(const std::vector<Vec2>& ring);
double polygon_area(const Polygon2D& poly);

/// Polyline approximation. Lines give [start, end]; arcs run start..end with
/// both endpoints exact; circles give an open CCW ring starting at angle 0.
std::vector<Vec2> tessellate_curve(const Curve& curve, const TessellationParams& params);

/// Circle through an arc's three points. `sweep` is signed (positive
/// counter-clockwise) with magnitude in (0, 2pi].
struct ArcFit {
  Vec2 center;
  double radius = 0.0;
  double start_angle = 0.0;
  double sweep = 0.0;
};
ArcFit fit_arc(const Arc& arc);

/// Number of segments a full circle of this radius receives.
int circle_segment_count(double radius, const TessellationParams& params);

Polygon2D build_profile(const Profile& profile, const TessellationParams& params);

/// Ear clipping with hole bridging. Indices refer to poly.flattened().
std::vector<IndexTriangle> triangulate_indices(const Polygon2D& poly);
std::vector<Triangle2D> triangulate(const Polygon2D& poly);

/// Closed prism between -distance_opposite and +distance_toward along z_axis.
TriangleMesh extrude_profile(const Polygon2D& poly, const Extrusion& extrusion,
                             const CoordinateSystem& cs);

enum class BooleanOp { Union, Difference, Intersection };

/// Regularized boolean of two closed meshes. The result may be empty.
TriangleMesh mesh_boolean(const TriangleMesh& a, const TriangleMesh& b, BooleanOp op);

/// Left fold over the parts; new_body parts are added as separate bodies.
TriangleMesh build_model(const CadSequence& seq, const KernelConfig& config = {});

/// Area-weighted uniform surface samples, deterministic for a given seed.
std::vector<Vec3> sample_surface(const TriangleMesh& mesh, std::size_t n, std::uint64_t seed);

}  // namespace cadmetrics
