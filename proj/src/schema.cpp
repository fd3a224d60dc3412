#include "cadmetrics/schema.hpp"

#include <cmath>
#include <initializer_list>
#include <sstream>

#include "json.hpp"

namespace cadmetrics {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

[[noreturn]] void schema_fail(const std::string& path, const std::string& what) {
  throw ParseError(ParseErrorKind::SchemaViolation, path, what);
}

std::string index_path(const std::string& base, std::string_view key, std::size_t i) {
  std::string out = base.empty() ? std::string(key) : base + "." + std::string(key);
  return out + "[" + std::to_string(i) + "]";
}

std::string key_path(const std::string& base, std::string_view key) {
  return base.empty() ? std::string(key) : base + "." + std::string(key);
}

const json& require_object(const json& j, const std::string& path,
                           std::initializer_list<std::string_view> keys) {
  if (!j.is_object()) schema_fail(path, "expected object");
  for (const auto& [k, v] : j.items()) {
    bool known = false;
    for (auto allowed : keys) known = known || k == allowed;
    if (!known) schema_fail(key_path(path, k), "unknown key '" + k + "'");
  }
  for (auto k : keys) {
    if (!j.contains(std::string(k))) schema_fail(key_path(path, k), "missing key");
  }
  return j;
}

const json& require_array(const json& j, const std::string& path) {
  if (!j.is_array()) schema_fail(path, "expected array");
  return j;
}

double read_number(const json& j, const std::string& path) {
  if (!j.is_number()) schema_fail(path, "expected number");
  return j.get<double>();
}

std::string read_string(const json& j, const std::string& path) {
  if (!j.is_string()) schema_fail(path, "expected string");
  return j.get<std::string>();
}

Vec2 read_vec2(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2) schema_fail(path, "expected [u, v]");
  return {read_number(j[0], path + "[0]"), read_number(j[1], path + "[1]")};
}

Vec3 read_vec3(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 3) schema_fail(path, "expected [x, y, z]");
  return {read_number(j[0], path + "[0]"), read_number(j[1], path + "[1]"),
          read_number(j[2], path + "[2]")};
}

Curve read_curve(const json& j, const std::string& path) {
  if (!j.is_object()) schema_fail(path, "expected object");
  if (!j.contains("type")) schema_fail(key_path(path, "type"), "missing key");
  const std::string type = read_string(j.at("type"), key_path(path, "type"));
  if (type == "line") {
    require_object(j, path, {"type", "start", "end"});
    return Line{read_vec2(j.at("start"), key_path(path, "start")),
                read_vec2(j.at("end"), key_path(path, "end"))};
  }
  if (type == "arc") {
    require_object(j, path, {"type", "start", "mid", "end"});
    return Arc{read_vec2(j.at("start"), key_path(path, "start")),
               read_vec2(j.at("mid"), key_path(path, "mid")),
               read_vec2(j.at("end"), key_path(path, "end"))};
  }
  if (type == "circle") {
    require_object(j, path, {"type", "center", "radius"});
    return Circle{read_vec2(j.at("center"), key_path(path, "center")),
                  read_number(j.at("radius"), key_path(path, "radius"))};
  }
  schema_fail(key_path(path, "type"), "unknown curve type '" + type + "'");
}

ExtrudeOperation read_operation(const json& j, const std::string& path) {
  const std::string op = read_string(j, path);
  if (op == "new_body") return ExtrudeOperation::NewBody;
  if (op == "join") return ExtrudeOperation::Join;
  if (op == "cut") return ExtrudeOperation::Cut;
  if (op == "intersect") return ExtrudeOperation::Intersect;
  schema_fail(path, "unknown operation '" + op + "'");
}

Part read_part(const json& j, const std::string& path) {
  require_object(j, path, {"coordinate_system", "sketch", "extrusion"});
  Part part;

  const std::string cs_path = key_path(path, "coordinate_system");
  const json& cs = require_object(j.at("coordinate_system"), cs_path,
                                  {"origin", "x_axis", "y_axis", "z_axis"});
  part.coordinate_system = {read_vec3(cs.at("origin"), key_path(cs_path, "origin")),
                            read_vec3(cs.at("x_axis"), key_path(cs_path, "x_axis")),
                            read_vec3(cs.at("y_axis"), key_path(cs_path, "y_axis")),
                            read_vec3(cs.at("z_axis"), key_path(cs_path, "z_axis"))};

  const std::string sketch_path = key_path(path, "sketch");
  const json& sketch = require_object(j.at("sketch"), sketch_path, {"profiles"});
  const json& profiles =
      require_array(sketch.at("profiles"), key_path(sketch_path, "profiles"));
  for (std::size_t p = 0; p < profiles.size(); ++p) {
    const std::string ppath = index_path(sketch_path, "profiles", p);
    const json& pj = require_object(profiles[p], ppath, {"loops"});
    Profile profile;
    const json& loops = require_array(pj.at("loops"), key_path(ppath, "loops"));
    for (std::size_t l = 0; l < loops.size(); ++l) {
      const std::string lpath = index_path(ppath, "loops", l);
      const json& lj = require_object(loops[l], lpath, {"curves"});
      Loop loop;
      const json& curves = require_array(lj.at("curves"), key_path(lpath, "curves"));
      for (std::size_t c = 0; c < curves.size(); ++c) {
        loop.curves.push_back(read_curve(curves[c], index_path(lpath, "curves", c)));
      }
      profile.loops.push_back(std::move(loop));
    }
    part.profiles.push_back(std::move(profile));
  }

  const std::string ex_path = key_path(path, "extrusion");
  const json& ex =
      require_object(j.at("extrusion"), ex_path,
                     {"distance_toward", "distance_opposite", "operation", "sketch_scale"});
  part.extrusion = {
      read_number(ex.at("distance_toward"), key_path(ex_path, "distance_toward")),
      read_number(ex.at("distance_opposite"), key_path(ex_path, "distance_opposite")),
      read_operation(ex.at("operation"), key_path(ex_path, "operation")),
      read_number(ex.at("sketch_scale"), key_path(ex_path, "sketch_scale"))};
  return part;
}

ordered_json write_vec(Vec2 v) { return ordered_json::array({v.x, v.y}); }
ordered_json write_vec(Vec3 v) { return ordered_json::array({v.x, v.y, v.z}); }

ordered_json write_curve(const Curve& curve) {
  ordered_json out;
  if (const auto* line = std::get_if<Line>(&curve)) {
    out["type"] = "line";
    out["start"] = write_vec(line->start);
    out["end"] = write_vec(line->end);
  } else if (const auto* arc = std::get_if<Arc>(&curve)) {
    out["type"] = "arc";
    out["start"] = write_vec(arc->start);
    out["mid"] = write_vec(arc->mid);
    out["end"] = write_vec(arc->end);
  } else {
    const auto& circle = std::get<Circle>(curve);
    out["type"] = "circle";
    out["center"] = write_vec(circle.center);
    out["radius"] = circle.radius;
  }
  return out;
}

Vec2 curve_start(const Curve& c) {
  return std::visit(
      [](const auto& v) -> Vec2 {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Circle>) return v.center;
        else return v.start;
      },
      c);
}

Vec2 curve_end(const Curve& c) {
  return std::visit(
      [](const auto& v) -> Vec2 {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Circle>) return v.center;
        else return v.end;
      },
      c);
}

class Validator {
 public:
  std::vector<Violation> run(const CadSequence& seq) {
    if (seq.parts.empty()) add("parts", ViolationCode::NoParts);
    for (std::size_t i = 0; i < seq.parts.size(); ++i) {
      check_part(seq.parts[i], "parts[" + std::to_string(i) + "]");
    }
    if (!seq.parts.empty() &&
        seq.parts.front().extrusion.operation != ExtrudeOperation::NewBody) {
      add("parts[0].extrusion.operation", ViolationCode::FirstOpNotNewBody);
    }
    return std::move(out_);
  }

 private:
  void add(std::string path, ViolationCode code) { out_.push_back({std::move(path), code}); }

  bool finite(Vec2 v, const std::string& path) {
    if (is_finite(v)) return true;
    add(path, ViolationCode::NonFinite);
    return false;
  }
  bool finite(Vec3 v, const std::string& path) {
    if (is_finite(v)) return true;
    add(path, ViolationCode::NonFinite);
    return false;
  }

  void check_frame(const CoordinateSystem& cs, const std::string& path) {
    bool ok = finite(cs.origin, path + ".origin");
    ok = finite(cs.x_axis, path + ".x_axis") && ok;
    ok = finite(cs.y_axis, path + ".y_axis") && ok;
    ok = finite(cs.z_axis, path + ".z_axis") && ok;
    if (!ok) return;
    const std::pair<Vec3, const char*> axes[] = {
        {cs.x_axis, ".x_axis"}, {cs.y_axis, ".y_axis"}, {cs.z_axis, ".z_axis"}};
    bool unit = true;
    for (const auto& [axis, name] : axes) {
      if (std::abs(norm(axis) - 1.0) > kAxisTolerance) {
        add(path + name, ViolationCode::AxisNotUnit);
        unit = false;
      }
    }
    if (std::abs(dot(cs.x_axis, cs.y_axis)) > kAxisTolerance ||
        std::abs(dot(cs.x_axis, cs.z_axis)) > kAxisTolerance ||
        std::abs(dot(cs.y_axis, cs.z_axis)) > kAxisTolerance) {
      add(path, ViolationCode::AxesNotOrthogonal);
    } else if (unit) {
      const Vec3 expected = cross(cs.x_axis, cs.y_axis);
      if (norm(expected - cs.z_axis) > kAxisTolerance) add(path + ".z_axis", ViolationCode::NotRightHanded);
    }
  }

  void check_curve(const Curve& curve, const std::string& path) {
    if (const auto* line = std::get_if<Line>(&curve)) {
      bool ok = finite(line->start, path + ".start");
      ok = finite(line->end, path + ".end") && ok;
      if (ok && distance(line->start, line->end) <= kMinLineLength) add(path, ViolationCode::DegenerateLine);
    } else if (const auto* arc = std::get_if<Arc>(&curve)) {
      bool ok = finite(arc->start, path + ".start");
      ok = finite(arc->mid, path + ".mid") && ok;
      ok = finite(arc->end, path + ".end") && ok;
      if (!ok) return;
      const double scale = std::max({distance(arc->start, arc->mid), distance(arc->mid, arc->end),
                                     distance(arc->start, arc->end)});
      const bool distinct = distance(arc->start, arc->mid) > kMinLineLength &&
                            distance(arc->mid, arc->end) > kMinLineLength &&
                            distance(arc->start, arc->end) > kMinLineLength;
      // Relative collinearity: the doubled triangle area against the squared span.
      if (!distinct || std::abs(orient2d(arc->start, arc->mid, arc->end)) <= 1e-12 * scale * scale) {
        add(path, ViolationCode::DegenerateArc);
      }
    } else {
      const auto& circle = std::get<Circle>(curve);
      finite(circle.center, path + ".center");
      if (!std::isfinite(circle.radius)) add(path + ".radius", ViolationCode::NonFinite);
      else if (circle.radius <= 0.0) add(path + ".radius", ViolationCode::NonPositiveRadius);
    }
  }

  void check_loop(const Loop& loop, const std::string& path) {
    const std::size_t n = loop.curves.size();
    if (n == 0) {
      add(path, ViolationCode::EmptyLoop);
      return;
    }
    std::size_t circles = 0;
    for (std::size_t i = 0; i < n; ++i) {
      check_curve(loop.curves[i], path + ".curves[" + std::to_string(i) + "]");
      circles += std::holds_alternative<Circle>(loop.curves[i]) ? 1 : 0;
    }
    if (circles > 0) {
      if (n != 1) add(path, ViolationCode::CircleNotAlone);
      return;
    }
    if (n < 2) {
      add(path, ViolationCode::TooFewCurves);
      return;
    }
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2 a = curve_end(loop.curves[i]);
      const Vec2 b = curve_start(loop.curves[(i + 1) % n]);
      if (!is_finite(a) || !is_finite(b)) continue;
      if (distance(a, b) > kLoopClosureTolerance) {
        add(path + ".curves[" + std::to_string(i) + "]", ViolationCode::OpenLoop);
      }
    }
  }

  void check_part(const Part& part, const std::string& path) {
    check_frame(part.coordinate_system, path + ".coordinate_system");
    const std::string sketch = path + ".sketch";
    if (part.profiles.empty()) add(sketch + ".profiles", ViolationCode::NoProfiles);
    for (std::size_t p = 0; p < part.profiles.size(); ++p) {
      const std::string ppath = sketch + ".profiles[" + std::to_string(p) + "]";
      const Profile& profile = part.profiles[p];
      if (profile.loops.empty()) add(ppath, ViolationCode::EmptyProfile);
      for (std::size_t l = 0; l < profile.loops.size(); ++l) {
        check_loop(profile.loops[l], ppath + ".loops[" + std::to_string(l) + "]");
      }
    }
    const std::string ex = path + ".extrusion";
    const Extrusion& e = part.extrusion;
    bool distances_ok = true;
    for (const auto& [value, name] :
         {std::pair{e.distance_toward, ".distance_toward"},
          std::pair{e.distance_opposite, ".distance_opposite"}}) {
      if (!std::isfinite(value)) {
        add(ex + name, ViolationCode::NonFinite);
        distances_ok = false;
      } else if (value < 0.0) {
        add(ex + name, ViolationCode::NegativeDistance);
        distances_ok = false;
      }
    }
    if (distances_ok && !(e.distance_toward + e.distance_opposite > 0.0)) add(ex, ViolationCode::ZeroExtent);
    if (!std::isfinite(e.sketch_scale)) add(ex + ".sketch_scale", ViolationCode::NonFinite);
    else if (e.sketch_scale <= 0.0) add(ex + ".sketch_scale", ViolationCode::NonPositiveScale);
  }

  std::vector<Violation> out_;
};

}  // namespace

std::string_view to_string(ViolationCode code) {
  switch (code) {
    case ViolationCode::NonFinite: return "NonFinite";
    case ViolationCode::AxisNotUnit: return "AxisNotUnit";
    case ViolationCode::AxesNotOrthogonal: return "AxesNotOrthogonal";
    case ViolationCode::NotRightHanded: return "NotRightHanded";
    case ViolationCode::DegenerateLine: return "DegenerateLine";
    case ViolationCode::DegenerateArc: return "DegenerateArc";
    case ViolationCode::NonPositiveRadius: return "NonPositiveRadius";
    case ViolationCode::CircleNotAlone: return "CircleNotAlone";
    case ViolationCode::TooFewCurves: return "TooFewCurves";
    case ViolationCode::OpenLoop: return "OpenLoop";
    case ViolationCode::EmptyLoop: return "EmptyLoop";
    case ViolationCode::EmptyProfile: return "EmptyProfile";
    case ViolationCode::NoProfiles: return "NoProfiles";
    case ViolationCode::NoParts: return "NoParts";
    case ViolationCode::NegativeDistance: return "NegativeDistance";
    case ViolationCode::ZeroExtent: return "ZeroExtent";
    case ViolationCode::NonPositiveScale: return "NonPositiveScale";
    case ViolationCode::FirstOpNotNewBody: return "FirstOpNotNewBody";
  }
  return "Unknown";
}

std::string_view to_string(ExtrudeOperation op) {
  switch (op) {
    case ExtrudeOperation::NewBody: return "new_body";
    case ExtrudeOperation::Join: return "join";
    case ExtrudeOperation::Cut: return "cut";
    case ExtrudeOperation::Intersect: return "intersect";
  }
  return "unknown";
}

std::string_view to_string(ParseErrorKind kind) {
  switch (kind) {
    case ParseErrorKind::MalformedJson: return "MalformedJson";
    case ParseErrorKind::SchemaViolation: return "SchemaViolation";
    case ParseErrorKind::InvariantViolation: return "InvariantViolation";
  }
  return "Unknown";
}

ParseError::ParseError(ParseErrorKind kind, std::string path, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + (path.empty() ? "" : " at " + path) + ": " +
                         message),
      kind_(kind),
      path_(std::move(path)) {}

CadSequence parse_sequence_unchecked(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(ParseErrorKind::MalformedJson, "", e.what());
  }

  require_object(doc, "", {"parts"});
  const json& parts = require_array(doc.at("parts"), "parts");
  CadSequence seq;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    seq.parts.push_back(read_part(parts[i], index_path("", "parts", i)));
  }
  return seq;
}

CadSequence parse_sequence(std::string_view text) {
  CadSequence seq = parse_sequence_unchecked(text);
  const auto violations = validate(seq);
  if (!violations.empty()) {
    std::ostringstream msg;
    for (std::size_t i = 0; i < violations.size(); ++i) {
      msg << (i ? "; " : "") << to_string(violations[i].code) << " at " << violations[i].path;
    }
    throw ParseError(ParseErrorKind::InvariantViolation, violations.front().path, msg.str());
  }
  return seq;
}

std::string serialize_sequence(const CadSequence& seq) {
  ordered_json parts = ordered_json::array();
  for (const Part& part : seq.parts) {
    ordered_json p;
    const auto& cs = part.coordinate_system;
    p["coordinate_system"]["origin"] = write_vec(cs.origin);
    p["coordinate_system"]["x_axis"] = write_vec(cs.x_axis);
    p["coordinate_system"]["y_axis"] = write_vec(cs.y_axis);
    p["coordinate_system"]["z_axis"] = write_vec(cs.z_axis);
    ordered_json profiles = ordered_json::array();
    for (const Profile& profile : part.profiles) {
      ordered_json loops = ordered_json::array();
      for (const Loop& loop : profile.loops) {
        ordered_json curves = ordered_json::array();
        for (const Curve& c : loop.curves) curves.push_back(write_curve(c));
        loops.push_back(ordered_json{{"curves", std::move(curves)}});
      }
      profiles.push_back(ordered_json{{"loops", std::move(loops)}});
    }
    p["sketch"]["profiles"] = std::move(profiles);
    p["extrusion"]["distance_toward"] = part.extrusion.distance_toward;
    p["extrusion"]["distance_opposite"] = part.extrusion.distance_opposite;
    p["extrusion"]["operation"] = std::string(to_string(part.extrusion.operation));
    p["extrusion"]["sketch_scale"] = part.extrusion.sketch_scale;
    parts.push_back(std::move(p));
  }
  ordered_json doc;
  doc["parts"] = std::move(parts);
  return doc.dump();
}

std::vector<Violation> validate(const CadSequence& seq) { return Validator{}.run(seq); }

CadSequence unit_square_example() {
  Loop square{{Line{{0, 0}, {1, 0}}, Line{{1, 0}, {1, 1}}, Line{{1, 1}, {0, 1}},
               Line{{0, 1}, {0, 0}}}};
  Part part;
  part.profiles = {Profile{{square}}};
  part.extrusion = {1.0, 0.0, ExtrudeOperation::NewBody, 1.0};
  return CadSequence{{part}};
}

}  // namespace cadmetrics
