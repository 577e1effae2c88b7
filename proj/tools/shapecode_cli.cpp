// shapecode: staged command-line driver for the view-based retrieval pipeline.

#include "shapecode/pipeline.hpp"

#include <CLI11.hpp>

#include <iomanip>
#include <iostream>

namespace {

using shapecode::PipelineConfig;

struct CommonOptions {
  std::string config;
  std::string dataset;
  std::string labels;
  std::string out;
  std::string layers;
  std::vector<std::string> settings;
  std::uint64_t seed = 0;
  int threads = -1;
  bool force = false;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config, "flat key = value config file")->check(CLI::ExistingFile);
  cmd->add_option("--dataset", o.dataset, "mesh directory (searched recursively)");
  cmd->add_option("--labels", o.labels, "class file (.cla); defaults to <dataset>/classes.cla");
  cmd->add_option("--out", o.out, "artifact directory");
  cmd->add_option("--layers", o.layers, "layer sizes, e.g. 5184,1000,500,250,30");
  cmd->add_option("--seed", o.seed, "global random seed");
  cmd->add_option("--threads", o.threads, "worker threads for per-model work (0: all cores)");
  cmd->add_option("--set", o.settings, "override any config key: --set key=value");
  cmd->add_flag("--force", o.force, "rebuild artifacts even when present or stale");
}

PipelineConfig resolve(const CLI::App& cmd, const CommonOptions& o) {
  PipelineConfig cfg;
  if (!o.config.empty()) cfg = shapecode::load_config(o.config);
  if (!o.dataset.empty()) cfg.dataset = o.dataset;
  if (!o.labels.empty()) cfg.labels = o.labels;
  if (!o.out.empty()) cfg.out = o.out;
  if (!o.layers.empty()) cfg.set("layers", o.layers);
  if (cmd.count("--seed")) cfg.seed = o.seed;
  if (o.threads >= 0) cfg.threads = o.threads;
  for (const auto& s : o.settings) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw shapecode::InvalidArgument("--set expects key=value, got '" + s + "'");
    cfg.set(s.substr(0, eq), s.substr(eq + 1));
  }
  cfg.force = o.force;
  return cfg;
}

void print_error(const std::string& kind, const std::string& message, int layer = -1) {
  shapecode::Json j{{"error", kind}, {"message", message}};
  if (layer >= 0) j["layer"] = layer;
  std::cerr << j.dump() << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Depth-view autoencoder shape retrieval"};
  app.require_subcommand(1);

  CommonOptions common;
  std::string query, matrix = "fused";
  std::size_t top_k = 10;
  int per_class = 10;
  std::string synthetic_root;

  struct Stage {
    const char* name;
    const char* help;
  };
  const Stage stages[] = {{"render", "render depth views of every mesh"},
                          {"pretrain", "greedy layer-wise RBM pretraining"},
                          {"finetune", "unfold the stack and fine-tune the autoencoder"},
                          {"encode", "encode every view into a code set"},
                          {"bof", "bag-of-features histograms and local distances"},
                          {"distances", "set-to-set distance matrix over code sets"},
                          {"fuse", "weighted fusion of global and local distances"},
                          {"evaluate", "NN / FT / ST for every available distance matrix"},
                          {"retrieve", "ranked list for one query model"},
                          {"synthetic", "generate the procedural benchmark dataset"}};
  std::map<std::string, CLI::App*> commands;
  for (const auto& s : stages) {
    auto* cmd = app.add_subcommand(s.name, s.help);
    add_common(cmd, common);
    commands[s.name] = cmd;
  }
  commands["retrieve"]->add_option("--query", query, "model id")->required();
  commands["retrieve"]->add_option("--top-k", top_k, "number of results");
  commands["retrieve"]->add_option("--matrix", matrix, "global, local or fused")
      ->check(CLI::IsMember({"global", "local", "fused"}));
  commands["synthetic"]->add_option("--per-class", per_class, "models per class");
  commands["synthetic"]->add_option("root", synthetic_root, "output directory (defaults to --dataset)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    print_error("usage", e.what());
    return 2;
  }

  try {
    const CLI::App* cmd = app.get_subcommands().front();
    const std::string name = cmd->get_name();
    PipelineConfig cfg = resolve(*cmd, common);

    if (name == "synthetic") {
      const std::filesystem::path root = synthetic_root.empty() ? cfg.dataset : std::filesystem::path(synthetic_root);
      if (root.empty()) throw shapecode::InvalidArgument("synthetic needs a root directory or --dataset");
      shapecode::run_synthetic(root, per_class, cfg.seed, std::cout);
    } else if (name == "render") {
      shapecode::run_render(cfg, std::cout);
    } else if (name == "pretrain") {
      shapecode::run_pretrain(cfg, std::cout);
    } else if (name == "finetune") {
      shapecode::run_finetune(cfg, std::cout);
    } else if (name == "encode") {
      shapecode::run_encode(cfg, std::cout);
    } else if (name == "distances") {
      shapecode::run_distances(cfg, std::cout);
    } else if (name == "bof") {
      shapecode::run_bof(cfg, std::cout);
    } else if (name == "fuse") {
      shapecode::run_fuse(cfg, std::cout);
    } else if (name == "evaluate") {
      shapecode::run_evaluate(cfg, std::cout);
    } else if (name == "retrieve") {
      const auto hits = shapecode::run_retrieve(cfg, query, top_k, matrix);
      for (std::size_t i = 0; i < hits.size(); ++i)
        std::cout << i + 1 << '\t' << hits[i].id << '\t' << std::setprecision(10) << hits[i].distance << '\n';
    }
  } catch (const shapecode::TrainingDiverged& e) {
    print_error(e.kind(), e.what(), e.stage_index());
    return 3;
  } catch (const shapecode::Error& e) {
    print_error(e.kind(), e.what());
    return 1;
  } catch (const std::exception& e) {
    print_error("internal", e.what());
    return 1;
  }
  return 0;
}
