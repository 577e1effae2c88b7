#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "shapecode/mesh.hpp"
#include "shapecode/synthetic.hpp"
#include "support.hpp"

#include <sstream>

using namespace shapecode;

namespace {

TriangleMesh parse_off(const std::string& text) {
  std::istringstream in(text);
  return parse_mesh(in, MeshFormat::off, "fixture");
}

TriangleMesh unit_cube_at(const Vec3& center) {
  TriangleMesh m = make_box(1.0, 1.0, 1.0, 1);
  m.vertices.rowwise() += center.transpose();
  return m;
}

double max_vertex_gap(const TriangleMesh& a, const TriangleMesh& b) {
  return (a.vertices - b.vertices).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("minimal OFF triangle") {
  const auto m = parse_off("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n");
  CHECK(m.vertex_count() == 3);
  REQUIRE(m.face_count() == 1);
  CHECK(m.faces.row(0) == Eigen::RowVector3i(0, 1, 2));
}

TEST_CASE("quads are fan triangulated from the first vertex") {
  const auto m = parse_off("OFF\n4 1 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n");
  REQUIRE(m.face_count() == 2);
  CHECK(m.faces.row(0) == Eigen::RowVector3i(0, 1, 2));
  CHECK(m.faces.row(1) == Eigen::RowVector3i(0, 2, 3));
}

TEST_CASE("out-of-range face index is a parse error with a line number") {
  try {
    parse_off("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 7\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 6);
    CHECK(std::string(e.kind()) == "parse");
  }
}

TEST_CASE("malformed OFF inputs are rejected") {
  CHECK_THROWS_AS(parse_off(""), ParseError);
  CHECK_THROWS_AS(parse_off("PLY\n"), ParseError);
  CHECK_THROWS_AS(parse_off("OFF\n3 1 0\n0 0 0\n1 0 0\n"), ParseError);
  CHECK_THROWS_AS(parse_off("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n2 0 1\n"), ParseError);
  CHECK_THROWS_AS(parse_off("OFF\n3 1 0\n0 0 x\n1 0 0\n0 1 0\n3 0 1 2\n"), ParseError);
}

TEST_CASE("OFF with counts on the header line and comments") {
  const auto m = parse_off("OFF 3 1 0\n# a comment\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n");
  CHECK(m.vertex_count() == 3);
  CHECK(m.face_count() == 1);
}

TEST_CASE("OBJ with slashes, polygons and negative indices") {
  std::istringstream in("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nvn 0 0 1\nf 1/1/1 2/2/1 3/3/1 4/4/1\nf -4 -3 -1\n");
  const auto m = parse_mesh(in, MeshFormat::obj);
  REQUIRE(m.face_count() == 3);
  CHECK(m.faces.row(1) == Eigen::RowVector3i(0, 2, 3));
  CHECK(m.faces.row(2) == Eigen::RowVector3i(0, 1, 3));
  std::istringstream bad("v 0 0 0\nf 1 2 3\n");
  CHECK_THROWS_AS(parse_mesh(bad, MeshFormat::obj), ParseError);
}

TEST_CASE("format is chosen from the extension") {
  CHECK(format_from_path("a/b.OFF") == MeshFormat::off);
  CHECK(format_from_path("x.obj") == MeshFormat::obj);
  CHECK_THROWS_AS(format_from_path("x.ply"), InvalidArgument);
}

TEST_CASE("unit cube is centred and scaled to unit radius") {
  const auto n = normalize_pose(unit_cube_at({5, 5, 5}));
  CHECK(area_weighted_centroid(n).norm() < 1e-12);
  CHECK(n.vertices.rowwise().norm().maxCoeff() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(n.vertices.cwiseAbs().maxCoeff() == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-12));
}

TEST_CASE("single triangle normalization by hand") {
  const auto m = parse_off("OFF\n3 1 0\n0 0 0\n2 0 0\n0 2 0\n3 0 1 2\n");
  const Vec3 c = area_weighted_centroid(m);
  CHECK(c.x() == doctest::Approx(2.0 / 3.0));
  CHECK(c.y() == doctest::Approx(2.0 / 3.0));
  CHECK(c.z() == 0.0);
  // Farthest vertex from the centroid is (2,0,0) or (0,2,0): |(4/3, -2/3)|.
  const double scale = 1.0 / std::sqrt(16.0 / 9.0 + 4.0 / 9.0);
  const auto n = normalize_pose(m);
  CHECK(n.vertices(0, 0) == doctest::Approx(-2.0 / 3.0 * scale).epsilon(1e-12));
  CHECK(n.vertices(1, 0) == doctest::Approx(4.0 / 3.0 * scale).epsilon(1e-12));
  CHECK(n.vertices(2, 1) == doctest::Approx(4.0 / 3.0 * scale).epsilon(1e-12));
}

TEST_CASE("normalization is idempotent") {
  for (const auto& cls : make_synthetic_dataset(2, 11))
    for (const auto& m : cls.models) {
      const auto once = normalize_pose(m);
      CHECK(max_vertex_gap(once, normalize_pose(once)) < 1e-12);
    }
}

TEST_CASE("normalization ignores translation and uniform scale") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-10, 10), s(0.05, 20);
  const auto base = make_torus(0.7, 0.25, 24, 12);
  const auto reference = normalize_pose(base);
  for (int trial = 0; trial < 10; ++trial) {
    TriangleMesh moved = base;
    moved.vertices = (moved.vertices * s(rng)).rowwise() + Eigen::RowVector3d(u(rng), u(rng), u(rng));
    CHECK(max_vertex_gap(normalize_pose(moved), reference) < 1e-9);
  }
}

TEST_CASE("centroid is area weighted, not the vertex mean") {
  // A large triangle near the origin and a tiny one far away.
  const auto m = parse_off("OFF\n6 2 0\n0 0 0\n1 0 0\n0 1 0\n10 0 0\n10.1 0 0\n10 0.1 0\n3 0 1 2\n3 3 4 5\n");
  const double big = 0.5, small = 0.005;
  const double expected_x = (big * (1.0 / 3.0) + small * (30.1 / 3.0)) / (big + small);
  const double expected_y = (big * (1.0 / 3.0) + small * (0.1 / 3.0)) / (big + small);
  const Vec3 c = area_weighted_centroid(m);
  CHECK(c.x() == doctest::Approx(expected_x).epsilon(1e-12));
  CHECK(c.y() == doctest::Approx(expected_y).epsilon(1e-12));
  CHECK(surface_area(m) == doctest::Approx(big + small).epsilon(1e-12));
  CHECK(std::fabs(c.x() - m.vertices.col(0).mean()) > 4.0);
}

TEST_CASE("degenerate meshes are rejected") {
  const auto flat = parse_off("OFF\n3 1 0\n0 0 0\n1 0 0\n2 0 0\n3 0 1 2\n");
  CHECK_THROWS_AS(normalize_pose(flat), DegenerateGeometry);
  TriangleMesh empty;
  CHECK_THROWS(normalize_pose(empty));
}

TEST_CASE("OFF and OBJ round trips") {
  testing::ScratchDir dir("mesh_roundtrip");
  const auto m = normalize_pose(make_cylinder(0.4, 1.2, 16, 3));
  for (const auto fmt : {MeshFormat::off, MeshFormat::obj}) {
    const auto path = dir / (fmt == MeshFormat::off ? "m.off" : "m.obj");
    save_mesh(path, m, fmt);
    const auto back = load_mesh(path);
    CHECK(back.id == "m");
    CHECK(back.faces == m.faces);
    CHECK(((back.vertices - m.vertices).array().abs() <= 1e-8 * (1.0 + m.vertices.array().abs())).all());
  }
  CHECK_THROWS_AS(load_mesh(dir / "missing.off"), IoError);
}
