#ifndef SHAPECODE_PIPELINE_HPP
#define SHAPECODE_PIPELINE_HPP

#include "shapecode/autoencoder.hpp"
#include "shapecode/bof.hpp"
#include "shapecode/eval.hpp"
#include "shapecode/fusion.hpp"
#include "shapecode/io.hpp"

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace shapecode {

/// Every knob of the staged pipeline. Defaults describe the full-size setup
/// (8x8 views at 72x72, 5184-1000-500-250-30, 40 CD epochs in batches of
/// 100, learning rates 0.1 / 0.001, p = 2, equal fusion weights, 1500 words).
struct PipelineConfig {
  std::filesystem::path dataset;  // directory searched recursively for .off/.obj
  std::filesystem::path labels;   // .cla; defaults to <dataset>/classes.cla
  std::filesystem::path out = "shapecode_out";

  int azimuth = 8;
  int elevation = 8;
  int resolution = 72;

  LayerSizes layers = psb_layer_sizes();
  int pretrain_epochs = 40;
  int pretrain_batch = 100;
  double lr_binary = 0.1;
  double lr_top = 0.001;
  double initial_momentum = 0.5;
  double final_momentum = 0.9;
  double weight_decay = 0.0002;

  int finetune_epochs = 100;
  int finetune_batch = 100;
  double finetune_lr = 0.01;

  double p = 2.0;
  FusionWeights fusion;
  ScaleNormalizer normalizer = ScaleNormalizer::mean;

  int vocab_size = 1500;
  std::size_t vocab_sample = 100000;
  int grid_step = 8;
  int patch_size = 16;
  int kmeans_iterations = 100;

  std::uint64_t seed = 0;
  int threads = 0;  // 0: hardware concurrency
  bool force = false;

  /// Applies one "key = value" setting; throws InvalidArgument for unknown keys.
  void set(const std::string& key, const std::string& value);
  void check() const;
  std::map<std::string, std::string> to_map() const;
};

/// Flat "key = value" lines; '#' starts a comment.
PipelineConfig parse_config(std::istream& in, PipelineConfig base = {});
PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base = {});

/// Artifact names inside the output directory.
namespace artifacts {
inline const char* const kViews = "views";
inline const char* const kStack = "dbn.stack";
inline const char* const kNet = "autoencoder.net";
inline const char* const kCodes = "codes.mat";
inline const char* const kGlobal = "global.dist";
inline const char* const kVocabulary = "vocabulary.mat";
inline const char* const kHistograms = "histograms.mat";
inline const char* const kLocal = "local.dist";
inline const char* const kFused = "fused.dist";
inline const char* const kReportJson = "report.json";
inline const char* const kReportText = "report.txt";
}  // namespace artifacts

/// Raised when an artifact exists but was built from different inputs and
/// --force was not given.
class StaleArtifact : public Error {
 public:
  explicit StaleArtifact(const std::string& what) : Error("stale", what) {}
};

struct StageResult {
  std::size_t computed = 0;  // work items (re)built
  std::size_t skipped = 0;   // work items already up to date
};

/// Sorted mesh paths under the dataset directory.
std::vector<std::filesystem::path> find_meshes(const std::filesystem::path& root);

/// Runs fn(i) for i in [0, n) on a bounded pool; rethrows the first failure.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

StageResult run_render(const PipelineConfig& cfg, std::ostream& log);
StageResult run_pretrain(const PipelineConfig& cfg, std::ostream& log);
StageResult run_finetune(const PipelineConfig& cfg, std::ostream& log);
StageResult run_encode(const PipelineConfig& cfg, std::ostream& log);
StageResult run_distances(const PipelineConfig& cfg, std::ostream& log);
StageResult run_bof(const PipelineConfig& cfg, std::ostream& log);
StageResult run_fuse(const PipelineConfig& cfg, std::ostream& log);

/// Scores every distance matrix present (global, local, fused) and writes
/// report.json / report.txt. Returns method name -> report.
std::vector<std::pair<std::string, RetrievalReport>> run_evaluate(const PipelineConfig& cfg, std::ostream& log);

struct RetrievalHit {
  std::string id;
  double distance;
};
/// Top-k of the named matrix ("global", "local", "fused") for one query.
std::vector<RetrievalHit> run_retrieve(const PipelineConfig& cfg, const std::string& query, std::size_t top_k,
                                       const std::string& matrix = "fused");

/// Generates the procedural benchmark under `root`.
void run_synthetic(const std::filesystem::path& root, int models_per_class, std::uint64_t seed, std::ostream& log);

/// All view archives in id order, plus the stacked training matrix.
std::vector<ViewSet> load_all_views(const PipelineConfig& cfg);

}  // namespace shapecode

#endif  // SHAPECODE_PIPELINE_HPP
