#include "shapecode/synthetic.hpp"

#include "shapecode/eval.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

namespace shapecode {

namespace {

struct MeshBuilder {
  std::vector<Vec3> vertices;
  std::vector<Eigen::Vector3i> faces;

  int add(const Vec3& v) {
    vertices.push_back(v);
    return static_cast<int>(vertices.size()) - 1;
  }
  void tri(int a, int b, int c) { faces.emplace_back(a, b, c); }
  void quad(int a, int b, int c, int d) {
    tri(a, b, c);
    tri(a, c, d);
  }

  TriangleMesh build(std::string id = {}) const {
    TriangleMesh mesh;
    mesh.id = std::move(id);
    mesh.vertices.resize(static_cast<Eigen::Index>(vertices.size()), 3);
    for (std::size_t i = 0; i < vertices.size(); ++i) mesh.vertices.row(static_cast<Eigen::Index>(i)) = vertices[i];
    mesh.faces.resize(static_cast<Eigen::Index>(faces.size()), 3);
    for (std::size_t i = 0; i < faces.size(); ++i) mesh.faces.row(static_cast<Eigen::Index>(i)) = faces[i];
    return mesh;
  }
};

}  // namespace

TriangleMesh make_icosphere(int subdivisions, double radius) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  MeshBuilder b;
  for (const Vec3& v : {Vec3(-1, t, 0), Vec3(1, t, 0), Vec3(-1, -t, 0), Vec3(1, -t, 0), Vec3(0, -1, t), Vec3(0, 1, t),
                        Vec3(0, -1, -t), Vec3(0, 1, -t), Vec3(t, 0, -1), Vec3(t, 0, 1), Vec3(-t, 0, -1),
                        Vec3(-t, 0, 1)})
    b.add(v.normalized());
  b.faces = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
             {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
             {3, 8, 9},  {4, 9, 5},  {2, 4, 11}, {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int c) {
      const auto key = std::minmax(a, c);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      const int idx = b.add((b.vertices[static_cast<std::size_t>(a)] + b.vertices[static_cast<std::size_t>(c)]).normalized());
      midpoint.emplace(key, idx);
      return idx;
    };
    std::vector<Eigen::Vector3i> next;
    for (const auto& f : b.faces) {
      const int ab = mid(f[0], f[1]), bc = mid(f[1], f[2]), ca = mid(f[2], f[0]);
      next.emplace_back(f[0], ab, ca);
      next.emplace_back(f[1], bc, ab);
      next.emplace_back(f[2], ca, bc);
      next.emplace_back(ab, bc, ca);
    }
    b.faces = std::move(next);
  }
  for (auto& v : b.vertices) v *= radius;
  return b.build();
}

TriangleMesh make_box(double sx, double sy, double sz, int segments) {
  MeshBuilder b;
  const Vec3 half(sx / 2, sy / 2, sz / 2);
  // For each axis and sign, a segments x segments grid on that face.
  for (int axis = 0; axis < 3; ++axis) {
    const int u = (axis + 1) % 3, v = (axis + 2) % 3;
    for (int sign : {-1, 1}) {
      const int base = static_cast<int>(b.vertices.size());
      for (int i = 0; i <= segments; ++i)
        for (int j = 0; j <= segments; ++j) {
          Vec3 p;
          p[axis] = sign * half[axis];
          p[u] = half[u] * (2.0 * i / segments - 1.0);
          p[v] = half[v] * (2.0 * j / segments - 1.0);
          b.add(p);
        }
      for (int i = 0; i < segments; ++i)
        for (int j = 0; j < segments; ++j) {
          const int a = base + i * (segments + 1) + j;
          if (sign > 0) b.quad(a, a + segments + 1, a + segments + 2, a + 1);
          else b.quad(a, a + 1, a + segments + 2, a + segments + 1);
        }
    }
  }
  return b.build();
}

TriangleMesh make_cylinder(double radius, double height, int segments, int rings) {
  MeshBuilder b;
  for (int r = 0; r <= rings; ++r) {
    const double z = height * (static_cast<double>(r) / rings - 0.5);
    for (int s = 0; s < segments; ++s) {
      const double a = 2.0 * std::numbers::pi * s / segments;
      b.add(Vec3(radius * std::cos(a), radius * std::sin(a), z));
    }
  }
  for (int r = 0; r < rings; ++r)
    for (int s = 0; s < segments; ++s) {
      const int a = r * segments + s, n = r * segments + (s + 1) % segments;
      b.quad(a, n, n + segments, a + segments);
    }
  const int bottom = b.add(Vec3(0, 0, -height / 2));
  const int top = b.add(Vec3(0, 0, height / 2));
  for (int s = 0; s < segments; ++s) {
    b.tri(bottom, (s + 1) % segments, s);
    b.tri(top, rings * segments + s, rings * segments + (s + 1) % segments);
  }
  return b.build();
}

TriangleMesh make_torus(double major_radius, double minor_radius, int major_segments, int minor_segments) {
  MeshBuilder b;
  for (int i = 0; i < major_segments; ++i) {
    const double u = 2.0 * std::numbers::pi * i / major_segments;
    for (int j = 0; j < minor_segments; ++j) {
      const double v = 2.0 * std::numbers::pi * j / minor_segments;
      const double ring = major_radius + minor_radius * std::cos(v);
      b.add(Vec3(ring * std::cos(u), ring * std::sin(u), minor_radius * std::sin(v)));
    }
  }
  for (int i = 0; i < major_segments; ++i)
    for (int j = 0; j < minor_segments; ++j) {
      const int ni = (i + 1) % major_segments, nj = (j + 1) % minor_segments;
      b.quad(i * minor_segments + j, ni * minor_segments + j, ni * minor_segments + nj, i * minor_segments + nj);
    }
  return b.build();
}

std::vector<SyntheticClass> make_synthetic_dataset(int models_per_class, std::uint64_t seed) {
  if (models_per_class < 1) throw InvalidArgument("models_per_class must be >= 1");
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto range = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
  std::normal_distribution<double> jitter(0.0, 0.005);

  std::vector<SyntheticClass> classes{{"sphere", {}}, {"box", {}}, {"cylinder", {}}, {"torus", {}}};
  for (auto& cls : classes) {
    for (int m = 0; m < models_per_class; ++m) {
      TriangleMesh mesh;
      if (cls.name == "sphere") mesh = make_icosphere(3);
      else if (cls.name == "box") mesh = make_box(range(0.7, 1.0), range(0.7, 1.0), range(0.7, 1.0));
      else if (cls.name == "cylinder") mesh = make_cylinder(range(0.35, 0.5), range(1.1, 1.5));
      else mesh = make_torus(range(0.65, 0.8), range(0.2, 0.3));

      const Vec3 scale(range(0.85, 1.15), range(0.85, 1.15), range(0.85, 1.15));
      const Eigen::Matrix3d rotation =
          (Eigen::AngleAxisd(range(0.0, 2.0 * std::numbers::pi), Vec3::UnitZ()) *
           Eigen::AngleAxisd(range(-0.15, 0.15), Vec3::UnitX()) * Eigen::AngleAxisd(range(-0.15, 0.15), Vec3::UnitY()))
              .toRotationMatrix();
      for (Eigen::Index i = 0; i < mesh.vertex_count(); ++i) {
        Vec3 p = mesh.vertices.row(i).transpose();
        p = rotation * p.cwiseProduct(scale);
        p += Vec3(jitter(rng), jitter(rng), jitter(rng));
        mesh.vertices.row(i) = p.transpose();
      }
      std::ostringstream id;
      id << cls.name << '_' << std::setw(2) << std::setfill('0') << m;
      mesh.id = id.str();
      cls.models.push_back(std::move(mesh));
    }
  }
  return classes;
}

void write_synthetic_dataset(const std::filesystem::path& root, const std::vector<SyntheticClass>& classes) {
  std::filesystem::create_directories(root / "meshes");
  std::vector<std::pair<std::string, std::vector<std::string>>> listing;
  for (const auto& cls : classes) {
    std::vector<std::string> ids;
    for (const auto& mesh : cls.models) {
      save_mesh(root / "meshes" / (mesh.id + ".off"), mesh, MeshFormat::off);
      ids.push_back(mesh.id);
    }
    listing.emplace_back(cls.name, std::move(ids));
  }
  std::ofstream out(root / "classes.cla");
  if (!out) throw IoError("cannot write " + (root / "classes.cla").string());
  write_cla(out, listing);
}

}  // namespace shapecode
