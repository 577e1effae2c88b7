#include "shapecode/projection.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <ostream>

namespace shapecode {

CameraRig make_rig(int azimuth_count, int elevation_count) {
  if (azimuth_count < 1 || elevation_count < 1)
    throw InvalidArgument("camera rig counts must be >= 1");
  CameraRig rig;
  rig.azimuth_count = azimuth_count;
  rig.elevation_count = elevation_count;
  const double deg = std::numbers::pi / 180.0;
  for (int i = 0; i < azimuth_count; ++i) {
    const double phi = i * (360.0 / azimuth_count) * deg;
    for (int j = 0; j < elevation_count; ++j) {
      const double theta = (-90.0 + (j + 0.5) * (180.0 / elevation_count)) * deg;
      rig.directions.emplace_back(std::cos(theta) * std::cos(phi), std::cos(theta) * std::sin(phi),
                                  std::sin(theta));
    }
  }
  return rig;
}

Eigen::Matrix3d camera_frame(const Vec3& direction) {
  const Vec3 d = direction.normalized();
  const Vec3 up_hint = std::abs(d.z()) > 0.99 ? Vec3::UnitX() : Vec3::UnitZ();
  const Vec3 right = up_hint.cross(d).normalized();
  const Vec3 up = d.cross(right);
  Eigen::Matrix3d frame;
  frame << right, up, d;
  return frame;
}

namespace {

struct ScreenVertex {
  double x, y, z;  // pixel coordinates (y down) and camera depth
};

// Edges on the top or left side of a triangle own pixel centers lying exactly
// on them. Callers orient the triangle so the area is positive (with y down,
// these edge functions are positive inside, i.e. clockwise on screen).
bool is_top_left(const ScreenVertex& a, const ScreenVertex& b) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  return (dy == 0.0 && dx > 0.0) || dy < 0.0;
}

// Evaluated from the lexicographically smaller endpoint so that the two
// triangles sharing an edge get exactly opposite values.
double edge(const ScreenVertex& a, const ScreenVertex& b, double px, double py) {
  const bool swapped = b.x < a.x || (b.x == a.x && b.y < a.y);
  const ScreenVertex& p = swapped ? b : a;
  const ScreenVertex& q = swapped ? a : b;
  const double value = (q.x - p.x) * (py - p.y) - (q.y - p.y) * (px - p.x);
  return swapped ? -value : value;
}

void raster_triangle(ScreenVertex v0, ScreenVertex v1, ScreenVertex v2, RowMatrix<double>& zbuf,
                     Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>& hit) {
  double area = edge(v0, v1, v2.x, v2.y);
  if (area == 0.0) return;
  if (area < 0.0) {
    std::swap(v1, v2);
    area = -area;
  }
  const int w = static_cast<int>(zbuf.cols());
  const int h = static_cast<int>(zbuf.rows());
  const int x0 = std::max(0, static_cast<int>(std::floor(std::min({v0.x, v1.x, v2.x}) - 0.5)));
  const int x1 = std::min(w - 1, static_cast<int>(std::ceil(std::max({v0.x, v1.x, v2.x}) - 0.5)));
  const int y0 = std::max(0, static_cast<int>(std::floor(std::min({v0.y, v1.y, v2.y}) - 0.5)));
  const int y1 = std::min(h - 1, static_cast<int>(std::ceil(std::max({v0.y, v1.y, v2.y}) - 0.5)));
  const bool tl0 = is_top_left(v1, v2), tl1 = is_top_left(v2, v0), tl2 = is_top_left(v0, v1);
  for (int row = y0; row <= y1; ++row) {
    const double py = row + 0.5;
    for (int col = x0; col <= x1; ++col) {
      const double px = col + 0.5;
      const double w0 = edge(v1, v2, px, py);
      const double w1 = edge(v2, v0, px, py);
      const double w2 = edge(v0, v1, px, py);
      if (w0 < 0.0 || w1 < 0.0 || w2 < 0.0) continue;
      if ((w0 == 0.0 && !tl0) || (w1 == 0.0 && !tl1) || (w2 == 0.0 && !tl2)) continue;
      const double z = (w0 * v0.z + w1 * v1.z + w2 * v2.z) / area;
      if (!hit(row, col) || z > zbuf(row, col)) {
        zbuf(row, col) = z;
        hit(row, col) = true;
      }
    }
  }
}

}  // namespace

DepthImage render_view(const TriangleMesh& mesh, const Vec3& direction, int resolution, int view_index) {
  if (resolution < 1) throw InvalidArgument("resolution must be >= 1");
  const Eigen::Matrix3d frame = camera_frame(direction);
  // Camera coordinates per vertex: (right, up, toward-camera).
  const RowMatrix<double> cam = mesh.vertices * frame;
  const double scale = resolution / 2.0;

  RowMatrix<double> zbuf = RowMatrix<double>::Zero(resolution, resolution);
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> hit =
      decltype(hit)::Constant(resolution, resolution, false);
  auto screen = [&](int vi) {
    return ScreenVertex{(cam(vi, 0) + 1.0) * scale, (1.0 - cam(vi, 1)) * scale, cam(vi, 2)};
  };
  for (Eigen::Index f = 0; f < mesh.face_count(); ++f)
    raster_triangle(screen(mesh.faces(f, 0)), screen(mesh.faces(f, 1)), screen(mesh.faces(f, 2)), zbuf, hit);

  DepthImage image;
  image.view_index = view_index;
  image.pixels = hit.select(((zbuf.array() + 1.0) * 0.5).min(1.0).max(0.0).matrix(), 0.0);
  return image;
}

ViewSet render_depth(const TriangleMesh& mesh, const CameraRig& rig, int resolution) {
  validate(mesh);
  if (mesh.vertices.rowwise().norm().maxCoeff() > 1.0 + 1e-6)
    throw InvalidArgument("mesh '" + mesh.id + "' is not pose normalized");
  ViewSet views;
  views.model_id = mesh.id;
  views.images.reserve(rig.directions.size());
  for (std::size_t i = 0; i < rig.directions.size(); ++i)
    views.images.push_back(render_view(mesh, rig.directions[i], resolution, static_cast<int>(i)));
  return views;
}

void write_pgm(std::ostream& out, const DepthImage& image) {
  out << "P5\n" << image.width() << ' ' << image.height() << "\n255\n";
  for (Eigen::Index r = 0; r < image.pixels.rows(); ++r)
    for (Eigen::Index c = 0; c < image.pixels.cols(); ++c)
      out.put(static_cast<char>(static_cast<unsigned char>(std::lround(image.pixels(r, c) * 255.0))));
}

void write_pgm(const std::filesystem::path& path, const DepthImage& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  write_pgm(out, image);
}

MatrixXd stack_views(const ViewSet& views) {
  if (views.images.empty()) return MatrixXd(0, 0);
  const Eigen::Index dim = views.images.front().pixels.size();
  MatrixXd rows(static_cast<Eigen::Index>(views.size()), dim);
  for (std::size_t i = 0; i < views.size(); ++i) {
    require_dims(views.images[i].pixels.size() == dim, "view sizes differ within a view set");
    rows.row(static_cast<Eigen::Index>(i)) = views.images[i].flat().transpose();
  }
  return rows;
}

}  // namespace shapecode
