#ifndef SHAPECODE_IO_HPP
#define SHAPECODE_IO_HPP

#include "shapecode/autoencoder.hpp"
#include "shapecode/dbn.hpp"
#include "shapecode/match.hpp"
#include "shapecode/projection.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

namespace shapecode {

using Json = nlohmann::ordered_json;

// Binary containers: an 8-byte magic, a uint32 version, then uint64 sizes,
// uint8 enums and little-endian IEEE-754 float64 arrays (row-major). Every
// file on disk may carry a JSON sidecar at "<path>.json".
inline constexpr std::uint32_t kContainerVersion = 1;

std::filesystem::path sidecar_path(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const Json& j);
Json read_json(const std::filesystem::path& path);

void write_matrix(std::ostream& out, const MatrixXd& m);
MatrixXd read_matrix(std::istream& in);
/// Writes the matrix and, unless `sidecar` is null, its sidecar.
void save_matrix(const std::filesystem::path& path, const MatrixXd& m, const Json& sidecar = nullptr);
MatrixXd load_matrix(const std::filesystem::path& path);

void write_rbm(std::ostream& out, const RbmLayer<double>& rbm);
RbmLayer<double> read_rbm(std::istream& in);
Json rbm_to_json(const RbmLayer<double>& rbm);

void save_stack(const std::filesystem::path& path, const DbnStack<double>& stack, const Json& manifest = Json::object());
DbnStack<double> load_stack(const std::filesystem::path& path);

void save_autoencoder(const std::filesystem::path& path, const AutoencoderNet<double>& net,
                      const Json& manifest = Json::object());
AutoencoderNet<double> load_autoencoder(const std::filesystem::path& path);

void write_viewset(std::ostream& out, const ViewSet& views);
ViewSet read_viewset(std::istream& in);
void save_viewset(const std::filesystem::path& path, const ViewSet& views);
ViewSet load_viewset(const std::filesystem::path& path);

/// Distance matrices persist as a float64 matrix plus a sidecar holding the
/// ordered ids and any extra fields.
void save_distances(const std::filesystem::path& path, const DistanceMatrix& d, Json sidecar = Json::object());
DistanceMatrix load_distances(const std::filesystem::path& path);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::uint64_t hash_file(const std::filesystem::path& path);
std::string hex64(std::uint64_t value);

}  // namespace shapecode

#endif  // SHAPECODE_IO_HPP
