#pragma once

// Typed construction history for sketch-and-extrude CAD sequences, plus the
// strict parser / canonical serializer for their minimal-JSON encoding.

#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "cadmetrics/vec.hpp"

namespace cadmetrics {

struct CoordinateSystem {
  Vec3 origin{};
  Vec3 x_axis{1, 0, 0};
  Vec3 y_axis{0, 1, 0};
  Vec3 z_axis{0, 0, 1};

  /// Maps a (scaled) sketch-plane point at height `h` along z_axis to world space.
  Vec3 to_world(Vec2 p, double h = 0.0) const {
    return origin + x_axis * p.x + y_axis * p.y + z_axis * h;
  }
  friend bool operator==(const CoordinateSystem&, const CoordinateSystem&) = default;
};

struct Line {
  Vec2 start;
  Vec2 end;
  friend bool operator==(const Line&, const Line&) = default;
};

/// Three-point arc: runs from `start` through `mid` to `end`.
struct Arc {
  Vec2 start;
  Vec2 mid;
  Vec2 end;
  friend bool operator==(const Arc&, const Arc&) = default;
};

struct Circle {
  Vec2 center;
  double radius = 0.0;
  friend bool operator==(const Circle&, const Circle&) = default;
};

using Curve = std::variant<Line, Arc, Circle>;

struct Loop {
  std::vector<Curve> curves;
  friend bool operator==(const Loop&, const Loop&) = default;
};

/// First loop is the outer boundary, the rest are holes.
struct Profile {
  std::vector<Loop> loops;
  friend bool operator==(const Profile&, const Profile&) = default;
};

enum class ExtrudeOperation { NewBody, Join, Cut, Intersect };

struct Extrusion {
  double distance_toward = 0.0;
  double distance_opposite = 0.0;
  ExtrudeOperation operation = ExtrudeOperation::NewBody;
  double sketch_scale = 1.0;
  friend bool operator==(const Extrusion&, const Extrusion&) = default;
};

struct Part {
  CoordinateSystem coordinate_system;
  std::vector<Profile> profiles;
  Extrusion extrusion;
  friend bool operator==(const Part&, const Part&) = default;
};

struct CadSequence {
  std::vector<Part> parts;
  friend bool operator==(const CadSequence&, const CadSequence&) = default;
};

// Tolerances shared by the parser and validator.
inline constexpr double kAxisTolerance = 1e-6;
inline constexpr double kLoopClosureTolerance = 1e-6;
inline constexpr double kMinLineLength = 1e-9;

enum class ViolationCode {
  NonFinite,
  AxisNotUnit,
  AxesNotOrthogonal,
  NotRightHanded,
  DegenerateLine,
  DegenerateArc,
  NonPositiveRadius,
  CircleNotAlone,
  TooFewCurves,
  OpenLoop,
  EmptyLoop,
  EmptyProfile,
  NoProfiles,
  NoParts,
  NegativeDistance,
  ZeroExtent,
  NonPositiveScale,
  FirstOpNotNewBody,
};

std::string_view to_string(ViolationCode code);
std::string_view to_string(ExtrudeOperation op);

struct Violation {
  std::string path;
  ViolationCode code;
  friend bool operator==(const Violation&, const Violation&) = default;
};

enum class ParseErrorKind { MalformedJson, SchemaViolation, InvariantViolation };

std::string_view to_string(ParseErrorKind kind);

class ParseError : public std::runtime_error {
 public:
  ParseError(ParseErrorKind kind, std::string path, const std::string& message);

  ParseErrorKind kind() const { return kind_; }
  /// JSON path of the offending element, e.g. "parts[0].extrusion.sketch_scale".
  const std::string& path() const { return path_; }

 private:
  ParseErrorKind kind_;
  std::string path_;
};

/// Strict parse: unknown keys, missing keys, wrong types and broken invariants
/// are all rejected.
CadSequence parse_sequence(std::string_view text);

/// Keys and types only; invariants are left to validate().
CadSequence parse_sequence_unchecked(std::string_view text);

/// Canonical compact JSON with schema key order and shortest round-trip numbers.
std::string serialize_sequence(const CadSequence& seq);

/// Checks every structural invariant; empty result iff the sequence is valid.
std::vector<Violation> validate(const CadSequence& seq);

/// The documented single-part example: unit square extruded one unit.
CadSequence unit_square_example();

}  // namespace cadmetrics
