#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "shapecode/pipeline.hpp"
#include "shapecode/synthetic.hpp"
#include "support.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <regex>
#include <sstream>
#include <thread>

#include <sys/wait.h>

using namespace shapecode;
namespace fs = std::filesystem;

namespace {

/// A configuration small enough to run every stage in a couple of seconds.
PipelineConfig tiny_config(const fs::path& dataset, const fs::path& out) {
  PipelineConfig cfg;
  cfg.dataset = dataset;
  cfg.out = out;
  cfg.resolution = 16;
  cfg.layers = {256, 24, 6};
  cfg.pretrain_epochs = 3;
  cfg.pretrain_batch = 64;
  cfg.finetune_epochs = 3;
  cfg.finetune_batch = 64;
  cfg.vocab_size = 12;
  cfg.vocab_sample = 3000;
  cfg.grid_step = 4;
  cfg.patch_size = 8;
  cfg.threads = 2;
  cfg.seed = 4;
  return cfg;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct Run {
  int code;
  std::string out, err;
};

Run run_cli(const std::string& args, const fs::path& scratch) {
  const fs::path out = scratch / "cli.out", err = scratch / "cli.err";
  const std::string cmd = std::string(SHAPECODE_CLI) + " " + args + " >" + out.string() + " 2>" + err.string();
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

}  // namespace

TEST_CASE("config files and key overrides") {
  std::istringstream text(
      "# comment line\n"
      "dataset = /data/psb\n"
      "resolution = 32   # trailing comment\n"
      "layers = 1024-200-50-10\n"
      "\n"
      "w_local = 0.5\n"
      "normalizer = median\n");
  const auto cfg = parse_config(text);
  CHECK(cfg.dataset == "/data/psb");
  CHECK(cfg.resolution == 32);
  CHECK(cfg.layers == LayerSizes{1024, 200, 50, 10});
  CHECK(cfg.fusion.local == 0.5);
  CHECK(cfg.normalizer == ScaleNormalizer::median);
  CHECK_NOTHROW(cfg.check());
  CHECK(cfg.to_map().at("layers") == "1024,200,50,10");

  PipelineConfig defaults;
  CHECK(defaults.layers == psb_layer_sizes());
  CHECK(defaults.resolution == 72);
  CHECK(defaults.pretrain_epochs == 40);
  CHECK(defaults.vocab_size == 1500);
  CHECK_NOTHROW(defaults.check());

  PipelineConfig c;
  c.set("layers", "100,10");
  CHECK_THROWS_AS(c.check(), InvalidArgument);  // 100 != 72^2
  CHECK_THROWS_AS(c.set("colour", "red"), InvalidArgument);
  CHECK_THROWS_AS(c.set("resolution", "big"), InvalidArgument);
  CHECK_THROWS_AS(c.set("p", "2x"), InvalidArgument);

  std::istringstream bad("resolution = 32\nno equals sign here\n");
  try {
    parse_config(bad);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
}

TEST_CASE("mesh discovery") {
  testing::ScratchDir dir("pipe_find");
  CHECK_THROWS_AS(find_meshes(dir / "missing"), IoError);
  CHECK_THROWS_AS(find_meshes(dir.path()), IoError);
  fs::create_directories(dir / "a/b");
  save_mesh(dir / "a/b/zeta.off", make_box(1, 1, 1, 1), MeshFormat::off);
  save_mesh(dir / "alpha.obj", make_box(1, 1, 1, 1), MeshFormat::obj);
  std::ofstream(dir / "notes.txt") << "ignored";
  const auto found = find_meshes(dir.path());
  REQUIRE(found.size() == 2);
  CHECK(found[0].stem() == "alpha");
  CHECK(found[1].stem() == "zeta");
  save_mesh(dir / "a/alpha.off", make_box(1, 1, 1, 1), MeshFormat::off);
  CHECK_THROWS_AS(find_meshes(dir.path()), InvalidArgument);
}

TEST_CASE("parallel_for visits every index and rethrows") {
  std::vector<int> hits(100, 0);
  parallel_for(hits.size(), 3, [&](std::size_t i) { hits[i] += 1; });
  CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
  CHECK_THROWS_AS(parallel_for(10, 2, [](std::size_t i) { if (i == 7) throw InvalidArgument("boom"); }),
                  InvalidArgument);
}

TEST_CASE("rendering is incremental and refuses stale artifacts") {
  testing::ScratchDir dir("pipe_render");
  fs::create_directories(dir / "data");
  save_mesh(dir / "data/ring.off", make_torus(0.7, 0.2, 16, 8), MeshFormat::off);
  auto cfg = tiny_config(dir / "data", dir / "out");
  std::ostringstream log;

  CHECK(run_render(cfg, log).computed == 1);
  const fs::path archive = dir / "out/views/ring.views";
  const auto views = load_viewset(archive);
  CHECK(views.size() == 64);
  CHECK(views.images[0].width() == 16);
  CHECK(read_json(sidecar_path(archive)).contains("inputs_hash"));

  const auto stamp = fs::last_write_time(archive);
  std::this_thread::sleep_for(std::chrono::milliseconds(20));
  const auto again = run_render(cfg, log);
  CHECK(again.computed == 0);
  CHECK(again.skipped == 1);
  CHECK(fs::last_write_time(archive) == stamp);

  save_mesh(dir / "data/ring.off", make_torus(0.6, 0.3, 16, 8), MeshFormat::off);
  CHECK_THROWS_AS(run_render(cfg, log), StaleArtifact);
  cfg.force = true;
  CHECK(run_render(cfg, log).computed == 1);
  cfg.force = false;
  CHECK(run_render(cfg, log).skipped == 1);
}

TEST_CASE("later stages report missing inputs") {
  testing::ScratchDir dir("pipe_missing");
  const auto cfg = tiny_config(dir / "data", dir / "out");
  std::ostringstream log;
  CHECK_THROWS_AS(run_finetune(cfg, log), IoError);
  CHECK_THROWS_AS(run_encode(cfg, log), IoError);
  CHECK_THROWS_AS(run_distances(cfg, log), IoError);
  CHECK_THROWS_AS(run_fuse(cfg, log), IoError);
  CHECK_THROWS_AS(run_evaluate(cfg, log), IoError);
}

TEST_CASE("the staged pipeline end to end") {
  testing::ScratchDir dir("pipe_full");
  std::ostringstream log;
  run_synthetic(dir / "data", 3, 2, log);
  REQUIRE(fs::exists(dir / "data/classes.cla"));
  auto cfg = tiny_config(dir / "data", dir / "out");

  CHECK(run_render(cfg, log).computed == 12);

  std::ostringstream pre_log;
  run_pretrain(cfg, pre_log);
  CHECK(pre_log.str().find("pretrain layer 1 epoch 3/3 recon_error ") != std::string::npos);

  std::ostringstream ft_log;
  run_finetune(cfg, ft_log);
  const std::regex line("finetune epoch ([0-9]+)/3 rmse ([0-9.]+)");
  const std::string ft_text = ft_log.str();
  int epochs_logged = 0;
  for (std::sregex_iterator it(ft_text.begin(), ft_text.end(), line), end; it != end; ++it) ++epochs_logged;
  CHECK(epochs_logged == 4);  // initial value plus one per epoch

  run_encode(cfg, log);
  const MatrixXd codes = load_matrix(cfg.out / artifacts::kCodes);
  CHECK(codes.rows() == 12 * 64);
  CHECK(codes.cols() == 6);

  run_distances(cfg, log);
  const auto global = load_distances(cfg.out / artifacts::kGlobal);
  CHECK(global.size() == 12);
  CHECK(global.values.diagonal().isZero(0.0));
  CHECK((global.values.array() >= 0.0).all());

  run_bof(cfg, log);
  const auto local = load_distances(cfg.out / artifacts::kLocal);
  CHECK(local.ids == global.ids);
  run_fuse(cfg, log);

  const auto rows = run_evaluate(cfg, log);
  REQUIRE(rows.size() == 3);
  const auto labels = load_cla(dir / "data/classes.cla");
  const auto direct = evaluate(global, labels);
  CHECK(rows[0].first == "global");
  CHECK(rows[0].second.nn == direct.nn);
  CHECK(rows[0].second.ft == direct.ft);
  const Json report = read_json(cfg.out / artifacts::kReportJson);
  CHECK(report["fused"]["st"].get<double>() == rows[2].second.st);
  CHECK(slurp(cfg.out / artifacts::kReportText).find("Algorithm") == 0);

  // Every stage is now up to date.
  std::ostringstream quiet;
  CHECK(run_render(cfg, quiet).computed == 0);
  run_pretrain(cfg, quiet);
  run_finetune(cfg, quiet);
  run_encode(cfg, quiet);
  run_distances(cfg, quiet);
  run_bof(cfg, quiet);
  run_fuse(cfg, quiet);
  CHECK(quiet.str().find("pretrain: up to date") != std::string::npos);
  CHECK(quiet.str().find("finetune: up to date") != std::string::npos);
  CHECK(quiet.str().find("fuse: up to date") != std::string::npos);

  // A changed training setting invalidates the stack.
  auto changed = cfg;
  changed.pretrain_epochs = 4;
  CHECK_THROWS_AS(run_pretrain(changed, quiet), StaleArtifact);

  CHECK_THROWS_AS(run_retrieve(cfg, "nobody", 3), InvalidArgument);
  CHECK_THROWS_AS(run_retrieve(cfg, global.ids[0], 3, "sideways"), InvalidArgument);
  const auto hits = run_retrieve(cfg, global.ids[0], 3, "global");
  CHECK(hits.size() == 3);
  CHECK(hits[0].distance <= hits[1].distance);
}

TEST_CASE("retrieving a duplicated model returns its twin first") {
  testing::ScratchDir dir("pipe_twin");
  std::ostringstream log;
  run_synthetic(dir / "data", 2, 8, log);
  const auto meshes = find_meshes(dir / "data");
  fs::copy_file(meshes[3], meshes[3].parent_path() / (meshes[3].stem().string() + "_twin.off"));
  auto cfg = tiny_config(dir / "data", dir / "out");
  run_render(cfg, log);
  run_pretrain(cfg, log);
  run_finetune(cfg, log);
  run_encode(cfg, log);
  run_distances(cfg, log);
  run_bof(cfg, log);
  run_fuse(cfg, log);
  const std::string query = meshes[3].stem().string();
  for (const char* matrix : {"global", "local", "fused"}) {
    const auto hits = run_retrieve(cfg, query, 2, matrix);
    REQUIRE(hits.size() == 2);
    CHECK(hits[0].id == query + "_twin");
    CHECK(hits[0].distance == 0.0);
  }
}

TEST_CASE("command line errors") {
  testing::ScratchDir dir("pipe_cli");
  fs::create_directories(dir / "out");

  const auto missing = run_cli("finetune --out " + (dir / "out").string(), dir.path());
  CHECK(missing.code == 1);
  const auto err = Json::parse(missing.err.substr(0, missing.err.find('\n')));
  CHECK(err["error"] == "io");
  CHECK_FALSE(err["message"].get<std::string>().empty());

  CHECK(run_cli("frobnicate", dir.path()).code == 2);
  CHECK(run_cli("render --set colour=red", dir.path()).code != 0);
  CHECK(run_cli("retrieve --out " + (dir / "out").string(), dir.path()).code == 2);

  const auto made = run_cli("synthetic --per-class 1 " + (dir / "syn").string(), dir.path());
  CHECK(made.code == 0);
  CHECK(fs::exists(dir / "syn/classes.cla"));
  CHECK(find_meshes(dir / "syn").size() == 4);

  const std::string common = " --dataset " + (dir / "syn").string() + " --out " + (dir / "cli_out").string() +
                             " --layers 256,16,4 --set resolution=16 --set pretrain_epochs=2";
  CHECK(run_cli("render" + common, dir.path()).code == 0);
  const auto diverged = run_cli("pretrain" + common + " --set lr_top=1e308", dir.path());
  CHECK(diverged.code == 3);
  const auto info = Json::parse(diverged.err.substr(0, diverged.err.find('\n')));
  CHECK(info["error"] == "diverged");
  CHECK(info["layer"] == 1);
}
