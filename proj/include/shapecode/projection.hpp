#ifndef SHAPECODE_PROJECTION_HPP
#define SHAPECODE_PROJECTION_HPP

#include "shapecode/mesh.hpp"

#include <filesystem>
#include <iosfwd>
#include <vector>

namespace shapecode {

/// Row-major depth image; 0 is background, larger is nearer the camera.
struct DepthImage {
  RowMatrix<double> pixels;
  int view_index = 0;

  int width() const { return static_cast<int>(pixels.cols()); }
  int height() const { return static_cast<int>(pixels.rows()); }
  /// Pixels flattened row by row.
  Eigen::Map<const Vector<double>> flat() const { return {pixels.data(), pixels.size()}; }
};

struct ViewSet {
  std::string model_id;
  std::vector<DepthImage> images;

  std::size_t size() const { return images.size(); }
};

/// Viewpoints on the unit sphere, azimuth-major ordering.
struct CameraRig {
  int azimuth_count = 8;
  int elevation_count = 8;
  std::vector<Vec3> directions;

  int view_count() const { return azimuth_count * elevation_count; }
};

/// Azimuths at i*360/A degrees, elevations at -90 + (j+0.5)*180/E degrees;
/// view index = i * E + j.
CameraRig make_rig(int azimuth_count, int elevation_count);

/// Image-plane basis for a camera looking along -direction. Columns are
/// (right, up, direction) and form a right-handed frame.
Eigen::Matrix3d camera_frame(const Vec3& direction);

/// Orthographic z-buffer render of one view over the [-1,1]^3 camera volume.
/// No precondition on the mesh pose; depth is clamped into the volume.
DepthImage render_view(const TriangleMesh& mesh, const Vec3& direction, int resolution, int view_index = 0);

/// Renders every rig view. The mesh must be pose normalized.
ViewSet render_depth(const TriangleMesh& mesh, const CameraRig& rig, int resolution);

/// Binary PGM (P5, maxval 255, round(pixel*255)).
void write_pgm(std::ostream& out, const DepthImage& image);
void write_pgm(const std::filesystem::path& path, const DepthImage& image);

/// One row per view, one column per pixel.
MatrixXd stack_views(const ViewSet& views);

}  // namespace shapecode

#endif  // SHAPECODE_PROJECTION_HPP
