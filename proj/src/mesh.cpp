#include "shapecode/mesh.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <vector>

namespace shapecode {

namespace {

// Line reader that tracks 1-based line numbers and skips blank lines and
// '#' comments.
class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  bool next(std::string& line) {
    while (std::getline(in_, line)) {
      ++number_;
      if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
    }
    return false;
  }

  std::size_t number() const { return number_; }

 private:
  std::istream& in_;
  std::size_t number_ = 0;
};

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> tokens;
  std::istringstream ss(line);
  for (std::string tok; ss >> tok;) tokens.push_back(tok);
  return tokens;
}

double to_double(const std::string& tok, std::size_t line) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (ec != std::errc() || ptr != tok.data() + tok.size())
    throw ParseError(line, "non-numeric value '" + tok + "'");
  return value;
}

long to_long(const std::string& tok, std::size_t line) {
  long value = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (ec != std::errc() || ptr != tok.data() + tok.size())
    throw ParseError(line, "non-integer value '" + tok + "'");
  return value;
}

struct Builder {
  std::vector<Vec3> vertices;
  std::vector<Eigen::Vector3i> faces;

  void add_polygon(const std::vector<long>& idx, std::size_t line) {
    if (idx.size() < 3) throw ParseError(line, "polygon with fewer than 3 vertices");
    for (long i : idx)
      if (i < 0 || i >= static_cast<long>(vertices.size()))
        throw ParseError(line, "vertex index " + std::to_string(i) + " out of range");
    // Fan from the first listed vertex.
    for (std::size_t k = 1; k + 1 < idx.size(); ++k)
      faces.emplace_back(static_cast<int>(idx[0]), static_cast<int>(idx[k]),
                         static_cast<int>(idx[k + 1]));
  }

  TriangleMesh finish(std::string id, std::size_t line) const {
    if (vertices.size() < 3) throw ParseError(line, "mesh needs at least 3 vertices");
    if (faces.empty()) throw ParseError(line, "mesh needs at least 1 face");
    TriangleMesh mesh;
    mesh.id = std::move(id);
    mesh.vertices.resize(static_cast<Eigen::Index>(vertices.size()), 3);
    for (std::size_t i = 0; i < vertices.size(); ++i)
      mesh.vertices.row(static_cast<Eigen::Index>(i)) = vertices[i].transpose();
    mesh.faces.resize(static_cast<Eigen::Index>(faces.size()), 3);
    for (std::size_t i = 0; i < faces.size(); ++i)
      mesh.faces.row(static_cast<Eigen::Index>(i)) = faces[i].transpose();
    return mesh;
  }
};

TriangleMesh parse_off(std::istream& in, std::string id) {
  LineReader reader(in);
  std::string line;
  if (!reader.next(line)) throw ParseError(reader.number(), "empty file");
  auto tokens = split(line);
  // Some writers put the counts on the header line ("OFF 8 6 12").
  if (tokens.empty() || tokens[0] != "OFF") throw ParseError(reader.number(), "missing OFF header");
  tokens.erase(tokens.begin());
  if (tokens.empty()) {
    if (!reader.next(line)) throw ParseError(reader.number(), "missing counts line");
    tokens = split(line);
  }
  if (tokens.size() < 2) throw ParseError(reader.number(), "malformed counts line");
  const long nv = to_long(tokens[0], reader.number());
  const long nf = to_long(tokens[1], reader.number());
  if (nv < 0 || nf < 0) throw ParseError(reader.number(), "negative element count");

  Builder b;
  b.vertices.reserve(static_cast<std::size_t>(nv));
  for (long i = 0; i < nv; ++i) {
    if (!reader.next(line)) throw ParseError(reader.number(), "unexpected end of file in vertex list");
    tokens = split(line);
    if (tokens.size() < 3) throw ParseError(reader.number(), "vertex line needs 3 coordinates");
    b.vertices.emplace_back(to_double(tokens[0], reader.number()), to_double(tokens[1], reader.number()),
                            to_double(tokens[2], reader.number()));
  }
  for (long f = 0; f < nf; ++f) {
    if (!reader.next(line)) throw ParseError(reader.number(), "unexpected end of file in face list");
    tokens = split(line);
    const long n = to_long(tokens[0], reader.number());
    if (n < 0 || static_cast<std::size_t>(n) + 1 > tokens.size())
      throw ParseError(reader.number(), "face vertex count does not match line");
    std::vector<long> idx;
    for (long k = 0; k < n; ++k) idx.push_back(to_long(tokens[static_cast<std::size_t>(k + 1)], reader.number()));
    b.add_polygon(idx, reader.number());
  }
  return b.finish(std::move(id), reader.number());
}

TriangleMesh parse_obj(std::istream& in, std::string id) {
  LineReader reader(in);
  Builder b;
  std::string line;
  while (reader.next(line)) {
    auto tokens = split(line);
    if (tokens[0] == "v") {
      if (tokens.size() < 4) throw ParseError(reader.number(), "vertex record needs 3 coordinates");
      b.vertices.emplace_back(to_double(tokens[1], reader.number()), to_double(tokens[2], reader.number()),
                              to_double(tokens[3], reader.number()));
    } else if (tokens[0] == "f") {
      std::vector<long> idx;
      for (std::size_t k = 1; k < tokens.size(); ++k) {
        // "i", "i/t", "i//n", "i/t/n"; negative indices are relative.
        const std::string head = tokens[k].substr(0, tokens[k].find('/'));
        long i = to_long(head, reader.number());
        if (i < 0) i = static_cast<long>(b.vertices.size()) + i;
        else i -= 1;
        idx.push_back(i);
      }
      b.add_polygon(idx, reader.number());
    }
  }
  return b.finish(std::move(id), reader.number());
}

double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) {
  return 0.5 * (b - a).cross(c - a).norm();
}

}  // namespace

MeshFormat format_from_path(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".off") return MeshFormat::off;
  if (ext == ".obj") return MeshFormat::obj;
  throw InvalidArgument("unknown mesh extension: " + path.string());
}

TriangleMesh parse_mesh(std::istream& in, MeshFormat format, std::string id) {
  return format == MeshFormat::off ? parse_off(in, std::move(id)) : parse_obj(in, std::move(id));
}

TriangleMesh load_mesh(const std::filesystem::path& path, MeshFormat format) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open mesh " + path.string());
  return parse_mesh(in, format, path.stem().string());
}

TriangleMesh load_mesh(const std::filesystem::path& path) { return load_mesh(path, format_from_path(path)); }

void write_mesh(std::ostream& out, const TriangleMesh& mesh, MeshFormat format) {
  out << std::setprecision(9);
  if (format == MeshFormat::off) {
    out << "OFF\n" << mesh.vertex_count() << ' ' << mesh.face_count() << " 0\n";
    for (Eigen::Index i = 0; i < mesh.vertex_count(); ++i)
      out << mesh.vertices(i, 0) << ' ' << mesh.vertices(i, 1) << ' ' << mesh.vertices(i, 2) << '\n';
    for (Eigen::Index f = 0; f < mesh.face_count(); ++f)
      out << "3 " << mesh.faces(f, 0) << ' ' << mesh.faces(f, 1) << ' ' << mesh.faces(f, 2) << '\n';
  } else {
    for (Eigen::Index i = 0; i < mesh.vertex_count(); ++i)
      out << "v " << mesh.vertices(i, 0) << ' ' << mesh.vertices(i, 1) << ' ' << mesh.vertices(i, 2) << '\n';
    for (Eigen::Index f = 0; f < mesh.face_count(); ++f)
      out << "f " << mesh.faces(f, 0) + 1 << ' ' << mesh.faces(f, 1) + 1 << ' ' << mesh.faces(f, 2) + 1 << '\n';
  }
}

void save_mesh(const std::filesystem::path& path, const TriangleMesh& mesh, MeshFormat format) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write mesh " + path.string());
  write_mesh(out, mesh, format);
}

void validate(const TriangleMesh& mesh) {
  if (mesh.vertex_count() < 3 || mesh.face_count() < 1)
    throw InvalidArgument("mesh needs at least 3 vertices and 1 face");
  if (mesh.faces.minCoeff() < 0 || mesh.faces.maxCoeff() >= mesh.vertex_count())
    throw InvalidArgument("face index out of range");
}

double surface_area(const TriangleMesh& mesh) {
  double total = 0.0;
  for (Eigen::Index f = 0; f < mesh.face_count(); ++f)
    total += triangle_area(mesh.vertices.row(mesh.faces(f, 0)), mesh.vertices.row(mesh.faces(f, 1)),
                           mesh.vertices.row(mesh.faces(f, 2)));
  return total;
}

Vec3 area_weighted_centroid(const TriangleMesh& mesh) {
  Vec3 weighted = Vec3::Zero();
  double total = 0.0;
  for (Eigen::Index f = 0; f < mesh.face_count(); ++f) {
    const Vec3 a = mesh.vertices.row(mesh.faces(f, 0));
    const Vec3 b = mesh.vertices.row(mesh.faces(f, 1));
    const Vec3 c = mesh.vertices.row(mesh.faces(f, 2));
    const double area = triangle_area(a, b, c);
    weighted += area * (a + b + c) / 3.0;
    total += area;
  }
  if (!(total > 0.0)) throw DegenerateGeometry("mesh '" + mesh.id + "' has zero surface area");
  return weighted / total;
}

TriangleMesh normalize_pose(const TriangleMesh& mesh) {
  validate(mesh);
  const Vec3 centroid = area_weighted_centroid(mesh);
  TriangleMesh out = mesh;
  out.vertices.rowwise() -= centroid.transpose();
  const double radius = out.vertices.rowwise().norm().maxCoeff();
  if (!(radius > 0.0)) throw DegenerateGeometry("mesh '" + mesh.id + "' collapses to a point");
  out.vertices /= radius;
  return out;
}

}  // namespace shapecode
