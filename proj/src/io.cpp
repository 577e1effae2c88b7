#include "shapecode/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace shapecode {

namespace {

using Magic = std::array<char, 8>;
constexpr Magic kMatrixMagic{'S', 'H', 'C', 'M', 'A', 'T', 'R', 'X'};
constexpr Magic kRbmMagic{'S', 'H', 'C', 'R', 'B', 'M', '\0', '\0'};
constexpr Magic kStackMagic{'S', 'H', 'C', 'D', 'B', 'N', '\0', '\0'};
constexpr Magic kNetMagic{'S', 'H', 'C', 'A', 'E', 'N', '\0', '\0'};
constexpr Magic kViewMagic{'S', 'H', 'C', 'V', 'I', 'E', 'W', '\0'};

template <typename T>
T to_little(T value) {
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(value);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  }
  return value;
}

template <typename T>
void put(std::ostream& out, T value) {
  value = to_little(value);
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw IoError("unexpected end of binary container");
  return to_little(value);
}

void put_magic(std::ostream& out, const Magic& magic) {
  out.write(magic.data(), magic.size());
  put<std::uint32_t>(out, kContainerVersion);
}

void expect_magic(std::istream& in, const Magic& magic, const char* what) {
  Magic got{};
  in.read(got.data(), got.size());
  if (!in || got != magic) throw IoError(std::string("not a ") + what + " container");
  const auto version = get<std::uint32_t>(in);
  if (version != kContainerVersion)
    throw IoError(std::string(what) + " container version " + std::to_string(version) + " is not supported");
}

template <typename Derived>
void put_row_major(std::ostream& out, const Eigen::MatrixBase<Derived>& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) put<double>(out, static_cast<double>(m(r, c)));
}

MatrixXd get_row_major(std::istream& in, std::uint64_t rows, std::uint64_t cols) {
  if (rows > (1ULL << 32) || cols > (1ULL << 32)) throw IoError("implausible matrix size in container");
  MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = get<double>(in);
  return m;
}

void put_string(std::ostream& out, const std::string& s) {
  put<std::uint64_t>(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& in) {
  const auto n = get<std::uint64_t>(in);
  if (n > (1ULL << 20)) throw IoError("implausible string length in container");
  std::string s(n, '\0');
  in.read(s.data(), static_cast<std::streamsize>(n));
  if (!in) throw IoError("unexpected end of binary container");
  return s;
}

UnitKind unit_kind(std::uint8_t raw) {
  if (raw > 1) throw IoError("unknown unit kind in container");
  return static_cast<UnitKind>(raw);
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

const char* kind_name(UnitKind k) { return k == UnitKind::binary ? "binary" : "gaussian_linear"; }

}  // namespace

std::filesystem::path sidecar_path(const std::filesystem::path& path) {
  return std::filesystem::path(path.string() + ".json");
}

void write_json(const std::filesystem::path& path, const Json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

Json read_json(const std::filesystem::path& path) {
  auto in = open_in(path);
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

void write_matrix(std::ostream& out, const MatrixXd& m) {
  put_magic(out, kMatrixMagic);
  put<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
  put<std::uint64_t>(out, static_cast<std::uint64_t>(m.cols()));
  put_row_major(out, m);
}

MatrixXd read_matrix(std::istream& in) {
  expect_magic(in, kMatrixMagic, "matrix");
  const auto rows = get<std::uint64_t>(in);
  const auto cols = get<std::uint64_t>(in);
  return get_row_major(in, rows, cols);
}

void save_matrix(const std::filesystem::path& path, const MatrixXd& m, const Json& sidecar) {
  {
    auto out = open_out(path);
    write_matrix(out, m);
  }
  if (!sidecar.is_null()) write_json(sidecar_path(path), sidecar);
}

MatrixXd load_matrix(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_matrix(in);
}

void write_rbm(std::ostream& out, const RbmLayer<double>& rbm) {
  require_dims(rbm.consistent(), "write_rbm: inconsistent layer");
  put_magic(out, kRbmMagic);
  put<std::uint64_t>(out, static_cast<std::uint64_t>(rbm.visible_count()));
  put<std::uint64_t>(out, static_cast<std::uint64_t>(rbm.hidden_count()));
  put<std::uint8_t>(out, static_cast<std::uint8_t>(rbm.visible_kind));
  put<std::uint8_t>(out, static_cast<std::uint8_t>(rbm.hidden_kind));
  put_row_major(out, rbm.weights);
  put_row_major(out, rbm.visible_bias.transpose());
  put_row_major(out, rbm.hidden_bias.transpose());
}

RbmLayer<double> read_rbm(std::istream& in) {
  expect_magic(in, kRbmMagic, "RBM");
  RbmLayer<double> rbm;
  const auto visible = get<std::uint64_t>(in);
  const auto hidden = get<std::uint64_t>(in);
  rbm.visible_kind = unit_kind(get<std::uint8_t>(in));
  rbm.hidden_kind = unit_kind(get<std::uint8_t>(in));
  rbm.weights = get_row_major(in, visible, hidden);
  rbm.visible_bias = get_row_major(in, 1, visible).transpose();
  rbm.hidden_bias = get_row_major(in, 1, hidden).transpose();
  return rbm;
}

Json rbm_to_json(const RbmLayer<double>& rbm) {
  Json j;
  j["visible_count"] = rbm.visible_count();
  j["hidden_count"] = rbm.hidden_count();
  j["visible_kind"] = kind_name(rbm.visible_kind);
  j["hidden_kind"] = kind_name(rbm.hidden_kind);
  Json weights = Json::array();
  for (Eigen::Index r = 0; r < rbm.weights.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < rbm.weights.cols(); ++c) row.push_back(rbm.weights(r, c));
    weights.push_back(std::move(row));
  }
  j["weights"] = std::move(weights);
  j["visible_bias"] = std::vector<double>(rbm.visible_bias.data(), rbm.visible_bias.data() + rbm.visible_bias.size());
  j["hidden_bias"] = std::vector<double>(rbm.hidden_bias.data(), rbm.hidden_bias.data() + rbm.hidden_bias.size());
  return j;
}

void save_stack(const std::filesystem::path& path, const DbnStack<double>& stack, const Json& manifest) {
  stack.check();
  {
    auto out = open_out(path);
    put_magic(out, kStackMagic);
    put<std::uint64_t>(out, stack.layers.size());
    for (const auto& layer : stack.layers) write_rbm(out, layer);
  }
  Json j = manifest;
  j["kind"] = "dbn_stack";
  j["layer_sizes"] = stack.layer_sizes();
  Json kinds = Json::array();
  for (const auto& layer : stack.layers) kinds.push_back(kind_name(layer.hidden_kind));
  j["hidden_kinds"] = std::move(kinds);
  write_json(sidecar_path(path), j);
}

DbnStack<double> load_stack(const std::filesystem::path& path) {
  auto in = open_in(path);
  expect_magic(in, kStackMagic, "DBN stack");
  const auto count = get<std::uint64_t>(in);
  if (count > 1024) throw IoError("implausible layer count in stack container");
  DbnStack<double> stack;
  for (std::uint64_t k = 0; k < count; ++k) stack.layers.push_back(read_rbm(in));
  stack.check();
  return stack;
}

void save_autoencoder(const std::filesystem::path& path, const AutoencoderNet<double>& net, const Json& manifest) {
  net.check();
  {
    auto out = open_out(path);
    put_magic(out, kNetMagic);
    put<std::uint64_t>(out, net.layers.size());
    put<std::uint64_t>(out, net.encoder_depth);
    for (const auto& layer : net.layers) {
      put<std::uint64_t>(out, static_cast<std::uint64_t>(layer.in_dim()));
      put<std::uint64_t>(out, static_cast<std::uint64_t>(layer.out_dim()));
      put<std::uint8_t>(out, static_cast<std::uint8_t>(layer.activation));
      put_row_major(out, layer.weights);
      put_row_major(out, layer.bias.transpose());
    }
  }
  Json j = manifest;
  j["kind"] = "autoencoder";
  j["input_dim"] = net.input_dim();
  j["code_dim"] = net.code_dim();
  j["encoder_depth"] = net.encoder_depth;
  Json dims = Json::array();
  for (const auto& layer : net.layers)
    dims.push_back({{"in", layer.in_dim()}, {"out", layer.out_dim()},
                    {"activation", layer.activation == Activation::sigmoid ? "sigmoid" : "linear"}});
  j["layers"] = std::move(dims);
  write_json(sidecar_path(path), j);
}

AutoencoderNet<double> load_autoencoder(const std::filesystem::path& path) {
  auto in = open_in(path);
  expect_magic(in, kNetMagic, "autoencoder");
  const auto count = get<std::uint64_t>(in);
  if (count > 1024) throw IoError("implausible layer count in autoencoder container");
  AutoencoderNet<double> net;
  net.encoder_depth = get<std::uint64_t>(in);
  for (std::uint64_t k = 0; k < count; ++k) {
    DenseLayer<double> layer;
    const auto in_dim = get<std::uint64_t>(in);
    const auto out_dim = get<std::uint64_t>(in);
    const auto act = get<std::uint8_t>(in);
    if (act > 1) throw IoError("unknown activation in autoencoder container");
    layer.activation = static_cast<Activation>(act);
    layer.weights = get_row_major(in, in_dim, out_dim);
    layer.bias = get_row_major(in, 1, out_dim).transpose();
    net.layers.push_back(std::move(layer));
  }
  net.check();
  return net;
}

void write_viewset(std::ostream& out, const ViewSet& views) {
  put_magic(out, kViewMagic);
  put_string(out, views.model_id);
  put<std::uint64_t>(out, views.size());
  const auto h = views.images.empty() ? 0 : views.images.front().height();
  const auto w = views.images.empty() ? 0 : views.images.front().width();
  put<std::uint64_t>(out, static_cast<std::uint64_t>(h));
  put<std::uint64_t>(out, static_cast<std::uint64_t>(w));
  for (const auto& image : views.images) {
    require_dims(image.height() == h && image.width() == w, "write_viewset: images differ in size");
    put<std::uint64_t>(out, static_cast<std::uint64_t>(image.view_index));
    put_row_major(out, image.pixels);
  }
}

ViewSet read_viewset(std::istream& in) {
  expect_magic(in, kViewMagic, "view set");
  ViewSet views;
  views.model_id = get_string(in);
  const auto count = get<std::uint64_t>(in);
  const auto h = get<std::uint64_t>(in);
  const auto w = get<std::uint64_t>(in);
  if (count > (1ULL << 20)) throw IoError("implausible view count in container");
  for (std::uint64_t i = 0; i < count; ++i) {
    DepthImage image;
    image.view_index = static_cast<int>(get<std::uint64_t>(in));
    image.pixels = get_row_major(in, h, w);
    views.images.push_back(std::move(image));
  }
  return views;
}

void save_viewset(const std::filesystem::path& path, const ViewSet& views) {
  auto out = open_out(path);
  write_viewset(out, views);
}

ViewSet load_viewset(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_viewset(in);
}

void save_distances(const std::filesystem::path& path, const DistanceMatrix& d, Json sidecar) {
  require_dims(d.values.rows() == static_cast<Eigen::Index>(d.size()) && d.values.cols() == d.values.rows(),
               "save_distances: matrix does not match its ids");
  sidecar["ids"] = d.ids;
  save_matrix(path, d.values, sidecar);
}

DistanceMatrix load_distances(const std::filesystem::path& path) {
  DistanceMatrix d;
  d.values = load_matrix(path);
  const Json side = read_json(sidecar_path(path));
  if (!side.contains("ids")) throw IoError("distance sidecar lacks ids: " + path.string());
  d.ids = side["ids"].get<std::vector<std::string>>();
  require_dims(d.values.rows() == static_cast<Eigen::Index>(d.size()) && d.values.cols() == d.values.rows(),
               "distance matrix does not match its sidecar ids");
  return d;
}

std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t seed) {
  std::uint64_t h = seed;
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t hash_file(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  std::array<char, 1 << 16> buffer{};
  while (in) {
    in.read(buffer.data(), buffer.size());
    h = fnv1a(buffer.data(), static_cast<std::size_t>(in.gcount()), h);
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  std::ostringstream ss;
  ss << std::hex << std::setw(16) << std::setfill('0') << value;
  return ss.str();
}

}  // namespace shapecode
