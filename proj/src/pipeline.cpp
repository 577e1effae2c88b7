#include "shapecode/pipeline.hpp"

#include "shapecode/synthetic.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace shapecode {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  std::istringstream ss(value);
  T out{};
  ss >> out;
  if (!ss || !(ss >> std::ws).eof()) throw InvalidArgument("config key '" + key + "': bad value '" + value + "'");
  return out;
}

LayerSizes parse_layers(const std::string& value) {
  LayerSizes sizes;
  std::string item;
  std::istringstream ss(value);
  while (std::getline(ss, item, value.find(',') != std::string::npos ? ',' : '-'))
    sizes.push_back(parse_number<Eigen::Index>("layers", trim(item)));
  return sizes;
}

std::string join_layers(const LayerSizes& sizes) {
  std::string out;
  for (std::size_t i = 0; i < sizes.size(); ++i) out += (i ? "," : "") + std::to_string(sizes[i]);
  return out;
}

std::string fmt(double v) {
  std::ostringstream ss;
  ss << std::setprecision(17) << v;
  return ss.str();
}

}  // namespace

void PipelineConfig::set(const std::string& key, const std::string& value) {
  if (key == "dataset") dataset = value;
  else if (key == "labels") labels = value;
  else if (key == "out") out = value;
  else if (key == "azimuth") azimuth = parse_number<int>(key, value);
  else if (key == "elevation") elevation = parse_number<int>(key, value);
  else if (key == "resolution") resolution = parse_number<int>(key, value);
  else if (key == "layers") layers = parse_layers(value);
  else if (key == "pretrain_epochs") pretrain_epochs = parse_number<int>(key, value);
  else if (key == "pretrain_batch") pretrain_batch = parse_number<int>(key, value);
  else if (key == "lr_binary") lr_binary = parse_number<double>(key, value);
  else if (key == "lr_top") lr_top = parse_number<double>(key, value);
  else if (key == "initial_momentum") initial_momentum = parse_number<double>(key, value);
  else if (key == "final_momentum") final_momentum = parse_number<double>(key, value);
  else if (key == "weight_decay") weight_decay = parse_number<double>(key, value);
  else if (key == "finetune_epochs") finetune_epochs = parse_number<int>(key, value);
  else if (key == "finetune_batch") finetune_batch = parse_number<int>(key, value);
  else if (key == "finetune_lr") finetune_lr = parse_number<double>(key, value);
  else if (key == "p") p = parse_number<double>(key, value);
  else if (key == "w_global") fusion.global = parse_number<double>(key, value);
  else if (key == "w_local") fusion.local = parse_number<double>(key, value);
  else if (key == "normalizer") normalizer = parse_normalizer(value);
  else if (key == "vocab_size") vocab_size = parse_number<int>(key, value);
  else if (key == "vocab_sample") vocab_sample = parse_number<std::size_t>(key, value);
  else if (key == "grid_step") grid_step = parse_number<int>(key, value);
  else if (key == "patch_size") patch_size = parse_number<int>(key, value);
  else if (key == "kmeans_iterations") kmeans_iterations = parse_number<int>(key, value);
  else if (key == "seed") seed = parse_number<std::uint64_t>(key, value);
  else if (key == "threads") threads = parse_number<int>(key, value);
  else throw InvalidArgument("unknown config key '" + key + "'");
}

void PipelineConfig::check() const {
  if (azimuth < 1 || elevation < 1 || resolution < 1) throw InvalidArgument("rig and resolution must be >= 1");
  if (layers.size() < 2) throw InvalidArgument("layers needs at least an input and a code size");
  if (layers.front() != static_cast<Eigen::Index>(resolution) * resolution)
    throw InvalidArgument("first layer size " + std::to_string(layers.front()) + " != resolution^2 = " +
                          std::to_string(resolution * resolution));
  for (auto s : layers)
    if (s < 1) throw InvalidArgument("layer sizes must be positive");
  if (!(p >= 1.0)) throw InvalidArgument("p must be >= 1");
}

std::map<std::string, std::string> PipelineConfig::to_map() const {
  return {{"dataset", dataset.string()},
          {"labels", labels.string()},
          {"out", out.string()},
          {"azimuth", std::to_string(azimuth)},
          {"elevation", std::to_string(elevation)},
          {"resolution", std::to_string(resolution)},
          {"layers", join_layers(layers)},
          {"pretrain_epochs", std::to_string(pretrain_epochs)},
          {"pretrain_batch", std::to_string(pretrain_batch)},
          {"lr_binary", fmt(lr_binary)},
          {"lr_top", fmt(lr_top)},
          {"initial_momentum", fmt(initial_momentum)},
          {"final_momentum", fmt(final_momentum)},
          {"weight_decay", fmt(weight_decay)},
          {"finetune_epochs", std::to_string(finetune_epochs)},
          {"finetune_batch", std::to_string(finetune_batch)},
          {"finetune_lr", fmt(finetune_lr)},
          {"p", fmt(p)},
          {"w_global", fmt(fusion.global)},
          {"w_local", fmt(fusion.local)},
          {"normalizer", to_string(normalizer)},
          {"vocab_size", std::to_string(vocab_size)},
          {"vocab_sample", std::to_string(vocab_sample)},
          {"grid_step", std::to_string(grid_step)},
          {"patch_size", std::to_string(patch_size)},
          {"kmeans_iterations", std::to_string(kmeans_iterations)},
          {"seed", std::to_string(seed)},
          {"threads", std::to_string(threads)}};
}

PipelineConfig parse_config(std::istream& in, PipelineConfig base) {
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(number, "expected 'key = value'");
    try {
      base.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const InvalidArgument& e) {
      throw ParseError(number, e.what());
    }
  }
  return base;
}

PipelineConfig load_config(const fs::path& path, PipelineConfig base) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  return parse_config(in, std::move(base));
}

// ---------------------------------------------------------------------------
// Helpers
// ---------------------------------------------------------------------------

std::vector<fs::path> find_meshes(const fs::path& root) {
  if (root.empty() || !fs::is_directory(root)) throw IoError("mesh directory not found: " + root.string());
  std::vector<fs::path> paths;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".off" || ext == ".obj") paths.push_back(entry.path());
  }
  std::sort(paths.begin(), paths.end(), [](const fs::path& a, const fs::path& b) {
    return a.stem().string() != b.stem().string() ? a.stem().string() < b.stem().string() : a < b;
  });
  for (std::size_t i = 1; i < paths.size(); ++i)
    if (paths[i].stem() == paths[i - 1].stem())
      throw InvalidArgument("duplicate model id '" + paths[i].stem().string() + "'");
  if (paths.empty()) throw IoError("no .off/.obj meshes under " + root.string());
  return paths;
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  std::size_t workers = threads > 0 ? static_cast<std::size_t>(threads) : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = n;
        }
      }
    });
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

namespace {

struct Fingerprint {
  std::uint64_t h = 0xcbf29ce484222325ULL;

  Fingerprint& add(const std::string& s) {
    h = fnv1a(s.data(), s.size(), h);
    h = fnv1a("\x1f", 1, h);
    return *this;
  }
  Fingerprint& add(const std::string& key, const std::string& value) { return add(key + "=" + value); }
  std::string str() const { return hex64(h); }
};

fs::path views_path(const PipelineConfig& cfg, const std::string& id) {
  return cfg.out / artifacts::kViews / (id + ".views");
}

// True when the artifact must be (re)built. An existing artifact built from
// other inputs is refused unless forced.
bool needs_build(const fs::path& artifact, const std::string& inputs_hash, bool force) {
  if (force) return true;
  if (!fs::exists(artifact) || !fs::exists(sidecar_path(artifact))) return true;
  const Json side = read_json(sidecar_path(artifact));
  if (side.value("inputs_hash", std::string()) == inputs_hash) return false;
  throw StaleArtifact(artifact.string() + " was built from different inputs; rerun with --force");
}

std::string inputs_hash_of(const fs::path& artifact) {
  if (!fs::exists(sidecar_path(artifact))) throw IoError("missing artifact " + artifact.string());
  return read_json(sidecar_path(artifact)).value("inputs_hash", std::string());
}

std::vector<std::string> model_ids(const PipelineConfig& cfg) {
  std::vector<std::string> ids;
  for (const auto& p : find_meshes(cfg.dataset)) ids.push_back(p.stem().string());
  return ids;
}

// Identifies the full set of rendered views by their recorded input hashes.
std::string views_fingerprint(const PipelineConfig& cfg, const std::vector<std::string>& ids) {
  Fingerprint fp;
  for (const auto& id : ids) {
    const fs::path p = views_path(cfg, id);
    if (!fs::exists(p)) throw IoError("missing view archive for '" + id + "'; run render first");
    fp.add(id, inputs_hash_of(p));
  }
  return fp.str();
}

MatrixXd training_matrix(const std::vector<ViewSet>& views) {
  Eigen::Index rows = 0, cols = 0;
  for (const auto& v : views) {
    rows += static_cast<Eigen::Index>(v.size());
    if (!v.images.empty()) cols = v.images.front().pixels.size();
  }
  MatrixXd data(rows, cols);
  Eigen::Index r = 0;
  for (const auto& v : views) {
    const MatrixXd block = stack_views(v);
    require_dims(block.cols() == cols, "view archives differ in resolution");
    data.middleRows(r, block.rows()) = block;
    r += block.rows();
  }
  return data;
}

Json config_json(const PipelineConfig& cfg) {
  Json j = Json::object();
  for (const auto& [k, v] : cfg.to_map()) j[k] = v;
  return j;
}

}  // namespace

std::vector<ViewSet> load_all_views(const PipelineConfig& cfg) {
  const auto ids = model_ids(cfg);
  std::vector<ViewSet> views(ids.size());
  parallel_for(ids.size(), cfg.threads, [&](std::size_t i) {
    const fs::path p = views_path(cfg, ids[i]);
    if (!fs::exists(p)) throw IoError("missing view archive for '" + ids[i] + "'; run render first");
    views[i] = load_viewset(p);
  });
  return views;
}

// ---------------------------------------------------------------------------
// Stages
// ---------------------------------------------------------------------------

StageResult run_render(const PipelineConfig& cfg, std::ostream& log) {
  cfg.check();
  const auto meshes = find_meshes(cfg.dataset);
  const CameraRig rig = make_rig(cfg.azimuth, cfg.elevation);
  fs::create_directories(cfg.out / artifacts::kViews);
  std::vector<char> built(meshes.size(), 0);
  parallel_for(meshes.size(), cfg.threads, [&](std::size_t i) {
    const std::string id = meshes[i].stem().string();
    const fs::path target = views_path(cfg, id);
    const std::string inputs = Fingerprint()
                                   .add("mesh", hex64(hash_file(meshes[i])))
                                   .add("azimuth", std::to_string(cfg.azimuth))
                                   .add("elevation", std::to_string(cfg.elevation))
                                   .add("resolution", std::to_string(cfg.resolution))
                                   .str();
    if (!needs_build(target, inputs, cfg.force)) return;
    TriangleMesh mesh = normalize_pose(load_mesh(meshes[i]));
    mesh.id = id;
    save_viewset(target, render_depth(mesh, rig, cfg.resolution));
    write_json(sidecar_path(target), Json{{"kind", "view_set"},
                                          {"model_id", id},
                                          {"source", meshes[i].string()},
                                          {"views", rig.view_count()},
                                          {"resolution", cfg.resolution},
                                          {"inputs_hash", inputs}});
    built[i] = 1;
  });
  StageResult result;
  result.computed = static_cast<std::size_t>(std::count(built.begin(), built.end(), 1));
  result.skipped = meshes.size() - result.computed;
  log << "render: " << result.computed << " rendered, " << result.skipped << " up to date\n";
  return result;
}

StageResult run_pretrain(const PipelineConfig& cfg, std::ostream& log) {
  cfg.check();
  const auto ids = model_ids(cfg);
  const fs::path target = cfg.out / artifacts::kStack;
  const std::string inputs = Fingerprint()
                                 .add("views", views_fingerprint(cfg, ids))
                                 .add("layers", join_layers(cfg.layers))
                                 .add("epochs", std::to_string(cfg.pretrain_epochs))
                                 .add("batch", std::to_string(cfg.pretrain_batch))
                                 .add("lr_binary", fmt(cfg.lr_binary))
                                 .add("lr_top", fmt(cfg.lr_top))
                                 .add("momentum", fmt(cfg.initial_momentum) + "/" + fmt(cfg.final_momentum))
                                 .add("weight_decay", fmt(cfg.weight_decay))
                                 .add("seed", std::to_string(cfg.seed))
                                 .str();
  if (!needs_build(target, inputs, cfg.force)) {
    log << "pretrain: up to date\n";
    return {0, 1};
  }
  const MatrixXd data = training_matrix(load_all_views(cfg));
  auto schedule = default_pretrain_schedule(cfg.layers.size() - 1, cfg.pretrain_epochs, cfg.pretrain_batch,
                                            cfg.lr_binary, cfg.lr_top, cfg.seed);
  for (auto& c : schedule) {
    c.initial_momentum = cfg.initial_momentum;
    c.final_momentum = cfg.final_momentum;
    c.weight_decay = cfg.weight_decay;
  }
  log << "pretrain: " << data.rows() << " images, layers " << join_layers(cfg.layers) << '\n';
  const auto trained = pretrain(data, cfg.layers, schedule);
  for (std::size_t k = 0; k < trained.layer_errors.size(); ++k)
    for (std::size_t e = 0; e < trained.layer_errors[k].size(); ++e)
      log << "pretrain layer " << k << " epoch " << e + 1 << '/' << trained.layer_errors[k].size()
          << " recon_error " << std::setprecision(6) << std::fixed << trained.layer_errors[k][e]
          << std::defaultfloat << '\n';
  save_stack(target, trained.stack,
             Json{{"inputs_hash", inputs}, {"config", config_json(cfg)}, {"layer_errors", trained.layer_errors}});
  return {1, 0};
}

StageResult run_finetune(const PipelineConfig& cfg, std::ostream& log) {
  cfg.check();
  const auto ids = model_ids(cfg);
  const fs::path stack_file = cfg.out / artifacts::kStack;
  if (!fs::exists(stack_file)) throw IoError("missing " + stack_file.string() + "; run pretrain first");
  const fs::path target = cfg.out / artifacts::kNet;
  const std::string inputs = Fingerprint()
                                 .add("stack", hex64(hash_file(stack_file)))
                                 .add("views", views_fingerprint(cfg, ids))
                                 .add("epochs", std::to_string(cfg.finetune_epochs))
                                 .add("batch", std::to_string(cfg.finetune_batch))
                                 .add("lr", fmt(cfg.finetune_lr))
                                 .add("seed", std::to_string(cfg.seed))
                                 .str();
  if (!needs_build(target, inputs, cfg.force)) {
    log << "finetune: up to date\n";
    return {0, 1};
  }
  const auto stack = load_stack(stack_file);
  const MatrixXd data = training_matrix(load_all_views(cfg));
  FinetuneConfig fc;
  fc.learning_rate = cfg.finetune_lr;
  fc.epochs = cfg.finetune_epochs;
  fc.minibatch_size = cfg.finetune_batch;
  fc.rng_seed = cfg.seed + 1000;
  const auto tuned = finetune(unfold(stack), data, fc);
  log << "finetune epoch 0/" << fc.epochs << " rmse " << std::fixed << std::setprecision(6) << tuned.initial_rmse
      << '\n';
  for (std::size_t e = 0; e < tuned.epoch_rmse.size(); ++e)
    log << "finetune epoch " << e + 1 << '/' << fc.epochs << " rmse " << tuned.epoch_rmse[e] << '\n';
  log << std::defaultfloat;
  save_autoencoder(target, tuned.net,
                   Json{{"inputs_hash", inputs},
                        {"config", config_json(cfg)},
                        {"initial_rmse", tuned.initial_rmse},
                        {"epoch_rmse", tuned.epoch_rmse}});
  return {1, 0};
}

StageResult run_encode(const PipelineConfig& cfg, std::ostream& log) {
  const auto ids = model_ids(cfg);
  const fs::path net_file = cfg.out / artifacts::kNet;
  if (!fs::exists(net_file)) throw IoError("missing " + net_file.string() + "; run finetune first");
  const fs::path target = cfg.out / artifacts::kCodes;
  const std::string inputs =
      Fingerprint().add("net", hex64(hash_file(net_file))).add("views", views_fingerprint(cfg, ids)).str();
  if (!needs_build(target, inputs, cfg.force)) {
    log << "encode: up to date\n";
    return {0, 1};
  }
  const auto net = load_autoencoder(net_file);
  const auto views = load_all_views(cfg);
  const Eigen::Index np = static_cast<Eigen::Index>(views.front().size());
  for (const auto& v : views)
    require_dims(static_cast<Eigen::Index>(v.size()) == np, "models have different view counts");
  MatrixXd codes(np * static_cast<Eigen::Index>(views.size()), net.code_dim());
  parallel_for(views.size(), cfg.threads, [&](std::size_t i) {
    codes.middleRows(static_cast<Eigen::Index>(i) * np, np) = encode_batch(net, stack_views(views[i]));
  });
  std::vector<int> view_indices;
  for (const auto& image : views.front().images) view_indices.push_back(image.view_index);
  save_matrix(target, codes,
              Json{{"kind", "code_sets"},
                   {"ids", ids},
                   {"views_per_model", np},
                   {"view_indices", view_indices},
                   {"code_dim", net.code_dim()},
                   {"inputs_hash", inputs}});
  log << "encode: " << ids.size() << " models x " << np << " views -> " << net.code_dim() << "-d codes\n";
  return {ids.size(), 0};
}

StageResult run_distances(const PipelineConfig& cfg, std::ostream& log) {
  const fs::path codes_file = cfg.out / artifacts::kCodes;
  if (!fs::exists(codes_file)) throw IoError("missing " + codes_file.string() + "; run encode first");
  const fs::path target = cfg.out / artifacts::kGlobal;
  const std::string inputs = Fingerprint().add("codes", hex64(hash_file(codes_file))).add("p", fmt(cfg.p)).str();
  if (!needs_build(target, inputs, cfg.force)) {
    log << "distances: up to date\n";
    return {0, 1};
  }
  const MatrixXd codes = load_matrix(codes_file);
  const Json side = read_json(sidecar_path(codes_file));
  const auto ids = side.at("ids").get<std::vector<std::string>>();
  const auto np = side.at("views_per_model").get<Eigen::Index>();
  require_dims(codes.rows() == np * static_cast<Eigen::Index>(ids.size()), "codes matrix does not match sidecar");
  std::vector<CodeSet<double>> sets;
  for (std::size_t i = 0; i < ids.size(); ++i)
    sets.push_back({ids[i], codes.middleRows(static_cast<Eigen::Index>(i) * np, np)});
  DistanceMatrix d = prepare_distance_matrix(sets);
  parallel_for(sets.size(), cfg.threads, [&](std::size_t q) { fill_distance_rows(sets, cfg.p, q, q + 1, d); });
  save_distances(target, d,
                 Json{{"kind", "global_distances"},
                      {"views_per_model", np},
                      {"code_dim", codes.cols()},
                      {"p", cfg.p},
                      {"inputs_hash", inputs}});
  log << "distances: " << ids.size() << "x" << ids.size() << " matrix (p=" << cfg.p << ")\n";
  return {1, 0};
}

StageResult run_bof(const PipelineConfig& cfg, std::ostream& log) {
  const auto ids = model_ids(cfg);
  const fs::path target = cfg.out / artifacts::kLocal;
  const std::string inputs = Fingerprint()
                                 .add("views", views_fingerprint(cfg, ids))
                                 .add("vocab_size", std::to_string(cfg.vocab_size))
                                 .add("vocab_sample", std::to_string(cfg.vocab_sample))
                                 .add("grid_step", std::to_string(cfg.grid_step))
                                 .add("patch_size", std::to_string(cfg.patch_size))
                                 .add("kmeans_iterations", std::to_string(cfg.kmeans_iterations))
                                 .add("seed", std::to_string(cfg.seed))
                                 .str();
  if (!needs_build(target, inputs, cfg.force)) {
    log << "bof: up to date\n";
    return {0, 1};
  }
  const auto views = load_all_views(cfg);
  const DescriptorParams params{cfg.grid_step, cfg.patch_size};
  std::vector<DescriptorBag> bags(views.size());
  parallel_for(views.size(), cfg.threads, [&](std::size_t i) { bags[i] = extract_descriptors(views[i], params); });
  const MatrixXd sample = sample_descriptors(bags, cfg.vocab_sample, cfg.seed + 3000);
  log << "bof: " << sample.rows() << " sampled descriptors, K=" << cfg.vocab_size << '\n';
  const Vocabulary vocab = build_vocabulary(sample, cfg.vocab_size, cfg.seed + 2000, {cfg.kmeans_iterations, 1e-6});
  std::vector<BofHistogram> hists(bags.size());
  parallel_for(bags.size(), cfg.threads, [&](std::size_t i) { hists[i] = quantize(bags[i], vocab); });

  MatrixXd hist_rows(static_cast<Eigen::Index>(hists.size()), vocab.size());
  std::vector<std::string> empty_models;
  std::vector<std::size_t> descriptor_counts;
  for (std::size_t i = 0; i < hists.size(); ++i) {
    hist_rows.row(static_cast<Eigen::Index>(i)) = hists[i].values.transpose();
    if (hists[i].empty_model) empty_models.push_back(hists[i].model_id);
    descriptor_counts.push_back(static_cast<std::size_t>(bags[i].size()));
  }
  save_matrix(cfg.out / artifacts::kVocabulary, vocab.centroids,
              Json{{"kind", "vocabulary"},
                   {"k", vocab.size()},
                   {"rng_seed", vocab.rng_seed},
                   {"iterations", vocab.iterations},
                   {"distortion", vocab.distortion}});
  save_matrix(cfg.out / artifacts::kHistograms, hist_rows,
              Json{{"kind", "bof_histograms"},
                   {"ids", ids},
                   {"descriptor_counts", descriptor_counts},
                   {"empty_models", empty_models}});
  save_distances(target, bof_distance_matrix(hists),
                 Json{{"kind", "local_distances"}, {"metric", "l1"}, {"inputs_hash", inputs}});
  log << "bof: vocabulary converged after " << vocab.iterations << " iterations; " << empty_models.size()
      << " models without descriptors\n";
  return {1, 0};
}

StageResult run_fuse(const PipelineConfig& cfg, std::ostream& log) {
  const fs::path g = cfg.out / artifacts::kGlobal, l = cfg.out / artifacts::kLocal;
  const fs::path target = cfg.out / artifacts::kFused;
  for (const auto& p : {g, l})
    if (!fs::exists(p)) throw IoError("missing " + p.string() + "; run distances and bof first");
  const std::string inputs = Fingerprint()
                                 .add("global", hex64(hash_file(g)))
                                 .add("local", hex64(hash_file(l)))
                                 .add("w_global", fmt(cfg.fusion.global))
                                 .add("w_local", fmt(cfg.fusion.local))
                                 .add("normalizer", to_string(cfg.normalizer))
                                 .str();
  if (!needs_build(target, inputs, cfg.force)) {
    log << "fuse: up to date\n";
    return {0, 1};
  }
  const auto dg = load_distances(g);
  const auto dl = load_distances(l);
  save_distances(target, fuse(dg, dl, cfg.fusion, cfg.normalizer),
                 Json{{"kind", "fused_distances"},
                      {"w_global", cfg.fusion.global},
                      {"w_local", cfg.fusion.local},
                      {"normalizer", to_string(cfg.normalizer)},
                      {"scale_global", off_diagonal_scale(dg, cfg.normalizer)},
                      {"scale_local", off_diagonal_scale(dl, cfg.normalizer)},
                      {"inputs_hash", inputs}});
  log << "fuse: weights " << cfg.fusion.global << '/' << cfg.fusion.local << ", " << to_string(cfg.normalizer)
      << " normalizer\n";
  return {1, 0};
}

namespace {

fs::path labels_path(const PipelineConfig& cfg) {
  return cfg.labels.empty() ? cfg.dataset / "classes.cla" : cfg.labels;
}

fs::path matrix_path(const PipelineConfig& cfg, const std::string& name) {
  if (name == "global") return cfg.out / artifacts::kGlobal;
  if (name == "local") return cfg.out / artifacts::kLocal;
  if (name == "fused") return cfg.out / artifacts::kFused;
  throw InvalidArgument("unknown distance matrix '" + name + "' (expected global, local or fused)");
}

}  // namespace

std::vector<std::pair<std::string, RetrievalReport>> run_evaluate(const PipelineConfig& cfg, std::ostream& log) {
  const ClassLabels labels = load_cla(labels_path(cfg));
  std::vector<std::pair<std::string, RetrievalReport>> rows;
  Json all = Json::object();
  for (const char* name : {"global", "local", "fused"}) {
    const fs::path p = matrix_path(cfg, name);
    if (!fs::exists(p)) continue;
    auto report = evaluate(load_distances(p), labels);
    all[name] = Json::parse(report_json(report, name));
    rows.emplace_back(name, std::move(report));
  }
  if (rows.empty()) throw IoError("no distance matrices under " + cfg.out.string() + "; run distances first");
  write_json(cfg.out / artifacts::kReportJson, all);
  const std::string table = report_table(rows);
  {
    std::ofstream out(cfg.out / artifacts::kReportText);
    if (!out) throw IoError("cannot write report table");
    out << table;
  }
  log << table;
  return rows;
}

std::vector<RetrievalHit> run_retrieve(const PipelineConfig& cfg, const std::string& query, std::size_t top_k,
                                       const std::string& matrix) {
  const DistanceMatrix d = load_distances(matrix_path(cfg, matrix));
  const auto it = std::find(d.ids.begin(), d.ids.end(), query);
  if (it == d.ids.end()) throw InvalidArgument("unknown query model '" + query + "'");
  const auto q = static_cast<std::size_t>(it - d.ids.begin());
  const auto ranked = rank_queries(d);
  std::vector<RetrievalHit> hits;
  for (std::size_t r = 0; r < ranked[q].size() && r < top_k; ++r)
    hits.push_back({d.ids[ranked[q][r]], d.values(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(ranked[q][r]))});
  return hits;
}

void run_synthetic(const fs::path& root, int models_per_class, std::uint64_t seed, std::ostream& log) {
  const auto classes = make_synthetic_dataset(models_per_class, seed);
  write_synthetic_dataset(root, classes);
  log << "synthetic: " << classes.size() << " classes x " << models_per_class << " models -> " << root.string()
      << '\n';
}

}  // namespace shapecode
