#include <random>

#include "cadmetrics/schema.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace cadmetrics;
using namespace testsupport;

namespace {

bool has_code(const std::vector<Violation>& vs, ViolationCode code) {
  for (const auto& v : vs) {
    if (v.code == code) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("documented unit-square example parses to one part with four lines") {
  const auto seq = parse_sequence(cube_json());
  REQUIRE(seq.parts.size() == 1);
  REQUIRE(seq.parts[0].profiles.size() == 1);
  const auto& curves = seq.parts[0].profiles[0].loops.at(0).curves;
  CHECK(curves.size() == 4);
  for (const auto& c : curves) CHECK(std::holds_alternative<Line>(c));
  CHECK(seq == unit_square_example());
}

TEST_CASE("negative radius is an invariant violation that names its path") {
  const auto text = sequence_json({part_json({circle_loop(0, 0, -1)}, 1.0, "new_body")});
  try {
    parse_sequence(text);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.kind() == ParseErrorKind::InvariantViolation);
    CHECK(e.path() == "parts[0].sketch.profiles[0].loops[0].curves[0].radius");
  }
}

TEST_CASE("truncated text is malformed JSON") {
  const auto text = cube_json();
  try {
    parse_sequence(text.substr(0, text.size() / 2));
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.kind() == ParseErrorKind::MalformedJson);
  }
}

TEST_CASE("unknown, missing and mistyped keys are schema violations") {
  auto kind_of = [](const std::string& text) {
    try {
      parse_sequence(text);
    } catch (const ParseError& e) {
      return e.kind();
    }
    return ParseErrorKind::MalformedJson;  // unreachable for these inputs
  };
  const auto base = cube_json();
  std::string extra = base;
  extra.insert(extra.size() - 1, R"(,"color":"red")");
  CHECK(kind_of(extra) == ParseErrorKind::SchemaViolation);
  CHECK(kind_of(R"({"parts":[{"sketch":{}}]})") == ParseErrorKind::SchemaViolation);
  CHECK(kind_of(R"({"parts":"none"})") == ParseErrorKind::SchemaViolation);
}

TEST_CASE("serialize is a canonical fixpoint") {
  const auto seq = parse_sequence(cube_json());
  const auto text = serialize_sequence(seq);
  CHECK(parse_sequence(text) == seq);
  CHECK(serialize_sequence(parse_sequence(text)) == text);
  // Whitespace does not matter.
  CHECK(parse_sequence(" \n" + cube_json() + "\n\t") == seq);
}

TEST_CASE("serialized floats re-parse to the identical binary value") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  auto seq = unit_square_example();
  seq.parts[0].coordinate_system.origin = {0.1 + 0.2, 0, 0};
  CHECK(parse_sequence(serialize_sequence(seq)).parts[0].coordinate_system.origin.x == 0.1 + 0.2);
  for (int i = 0; i < 1000; ++i) {
    const Vec3 o{u(rng), u(rng) * 1e-7, std::ldexp(u(rng), -40)};
    seq.parts[0].coordinate_system.origin = o;
    seq.parts[0].extrusion.distance_toward = std::abs(u(rng)) + 1e-3;
    const auto back = parse_sequence(serialize_sequence(seq));
    REQUIRE(back == seq);
  }
}

TEST_CASE("structurally equal sequences serialize to identical bytes") {
  CHECK(serialize_sequence(parse_sequence(cube_json())) == serialize_sequence(unit_square_example()));
}

TEST_CASE("validate reports every broken invariant") {
  CHECK(validate(unit_square_example()).empty());

  auto seq = unit_square_example();
  seq.parts[0].extrusion.operation = ExtrudeOperation::Cut;
  const auto first_op = validate(seq);
  REQUIRE(first_op.size() == 1);
  CHECK(first_op[0].code == ViolationCode::FirstOpNotNewBody);

  // A 1e-3 gap is far above the 1e-6 closure tolerance.
  seq = unit_square_example();
  auto& line = std::get<Line>(seq.parts[0].profiles[0].loops[0].curves[1]);
  line.start = {1.0, 1e-3};
  const auto gap = validate(seq);
  REQUIRE(gap.size() == 1);
  CHECK(gap[0].code == ViolationCode::OpenLoop);
  CHECK(gap[0].path.rfind("parts[0].sketch.profiles[0].loops[0]", 0) == 0);

  // A gap just under the tolerance is accepted.
  line.start = {1.0, 5e-7};
  CHECK(validate(seq).empty());

  seq = unit_square_example();
  seq.parts[0].coordinate_system.z_axis = {0, 0, -1};
  CHECK(has_code(validate(seq), ViolationCode::NotRightHanded));
  seq.parts[0].coordinate_system.z_axis = {0, 0, 1.01};
  CHECK(has_code(validate(seq), ViolationCode::AxisNotUnit));

  seq = unit_square_example();
  seq.parts[0].extrusion.distance_toward = 0;
  CHECK(has_code(validate(seq), ViolationCode::ZeroExtent));
  seq.parts[0].extrusion.sketch_scale = 0;
  CHECK(has_code(validate(seq), ViolationCode::NonPositiveScale));

  seq = unit_square_example();
  seq.parts[0].profiles[0].loops[0].curves.push_back(Circle{{0.5, 0.5}, 0.1});
  CHECK(has_code(validate(seq), ViolationCode::CircleNotAlone));

  seq = unit_square_example();
  seq.parts[0].profiles[0].loops[0].curves[0] = Arc{{0, 0}, {0.5, 0}, {1, 0}};
  CHECK(has_code(validate(seq), ViolationCode::DegenerateArc));

  CHECK(has_code(validate(CadSequence{}), ViolationCode::NoParts));
}

TEST_CASE("validate is total over unchecked parses of random mutations") {
  std::mt19937_64 rng(3);
  const auto base = serialize_sequence(unit_square_example());
  int parsed = 0;
  for (int i = 0; i < 500; ++i) {
    std::string text = base;
    // Replace a digit with another digit or a minus sign.
    for (int k = 0; k < 3; ++k) {
      const auto pos = rng() % text.size();
      if (std::isdigit(static_cast<unsigned char>(text[pos]))) text[pos] = "0123456789-"[rng() % 11];
    }
    try {
      const auto seq = parse_sequence_unchecked(text);
      ++parsed;
      (void)validate(seq);
    } catch (const ParseError&) {
    }
  }
  CHECK(parsed > 0);
}
