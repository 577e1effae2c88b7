#ifndef SHAPECODE_MESH_HPP
#define SHAPECODE_MESH_HPP

#include "shapecode/types.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>

namespace shapecode {

enum class MeshFormat { off, obj };

/// Triangle soup with shared vertices. One row per vertex / per face.
struct TriangleMesh {
  RowMatrix<double> vertices{0, 3};
  Eigen::Matrix<int, Eigen::Dynamic, 3, Eigen::RowMajor> faces{0, 3};
  std::string id;

  Eigen::Index vertex_count() const { return vertices.rows(); }
  Eigen::Index face_count() const { return faces.rows(); }
};

MeshFormat format_from_path(const std::filesystem::path& path);

TriangleMesh parse_mesh(std::istream& in, MeshFormat format, std::string id = {});
TriangleMesh load_mesh(const std::filesystem::path& path, MeshFormat format);
TriangleMesh load_mesh(const std::filesystem::path& path);

/// Writes with 9 significant digits.
void write_mesh(std::ostream& out, const TriangleMesh& mesh, MeshFormat format);
void save_mesh(const std::filesystem::path& path, const TriangleMesh& mesh, MeshFormat format);

double surface_area(const TriangleMesh& mesh);
/// Sum of triangle centroids weighted by triangle area, over total area.
Vec3 area_weighted_centroid(const TriangleMesh& mesh);

/// Translates the area-weighted centroid to the origin and scales uniformly
/// so the farthest vertex lies on the unit sphere. Throws DegenerateGeometry
/// when the total surface area is zero.
TriangleMesh normalize_pose(const TriangleMesh& mesh);

/// Checks face indices and minimum sizes; throws InvalidArgument.
void validate(const TriangleMesh& mesh);

}  // namespace shapecode

#endif  // SHAPECODE_MESH_HPP
