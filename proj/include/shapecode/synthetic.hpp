#ifndef SHAPECODE_SYNTHETIC_HPP
#define SHAPECODE_SYNTHETIC_HPP

#include "shapecode/mesh.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace shapecode {

/// Procedural primitives, unit-ish size, centered at the origin.
TriangleMesh make_icosphere(int subdivisions, double radius = 1.0);
TriangleMesh make_box(double sx, double sy, double sz, int segments = 4);
TriangleMesh make_cylinder(double radius, double height, int segments = 32, int rings = 4);
TriangleMesh make_torus(double major_radius, double minor_radius, int major_segments = 32, int minor_segments = 16);

struct SyntheticClass {
  std::string name;
  std::vector<TriangleMesh> models;
};

/// Four classes (sphere, box, cylinder, torus) with per-model random
/// anisotropic scale, small tilt, spin about z and vertex jitter.
std::vector<SyntheticClass> make_synthetic_dataset(int models_per_class, std::uint64_t seed);

/// Writes <root>/meshes/<id>.off and <root>/classes.cla.
void write_synthetic_dataset(const std::filesystem::path& root, const std::vector<SyntheticClass>& classes);

}  // namespace shapecode

#endif  // SHAPECODE_SYNTHETIC_HPP
