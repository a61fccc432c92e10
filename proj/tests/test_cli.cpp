#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include <json.hpp>

#include "pointvet/io/dataset.hpp"
#include "pointvet/io/image.hpp"
#include "pointvet/io/ply.hpp"

using namespace pvet;
namespace fs = std::filesystem;

namespace {

const fs::path& work_root() {
  static const fs::path root = [] {
    const fs::path p = fs::temp_directory_path() / "pointvet_cli_tests";
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return root;
}

std::string wpath(const std::string& name) { return (work_root() / name).string(); }

struct RunResult {
  int code = -1;
  std::string output;
};

RunResult run_cli(const std::string& args) {
  static int counter = 0;
  const std::string log = wpath("invoke_" + std::to_string(counter++) + ".log");
  const std::string cmd = std::string(PVET_CLI_PATH) + " " + args + " > " + log + " 2>&1";
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(log);
  std::stringstream ss;
  ss << in.rdbuf();
  r.output = ss.str();
  return r;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool same_bytes(const std::string& a, const std::string& b) { return slurp(a) == slurp(b); }

int line_count(const std::string& text) {
  int n = 0;
  for (char c : text) n += c == '\n' ? 1 : 0;
  return n;
}

const std::string kTinyScene =
    "synth.enabled=true synth.images=8 synth.width=32 synth.height=32 synth.spacing=0.12";

// One shared synth output for tests that only need its files.
const std::string& synth_dir() {
  static const std::string dir = [] {
    const std::string d = wpath("base_synth");
    const auto r = run_cli("synth " + kTinyScene + " --seed 5 --out " + d);
    REQUIRE(r.code == 0);
    return d;
  }();
  return dir;
}

}  // namespace

TEST_CASE("invocation basics") {
  SUBCASE("a subcommand is required") {
    const auto r = run_cli("");
    CHECK(r.code == 1);
    CHECK(r.output.find("subcommand") != std::string::npos);
  }
  SUBCASE("--version") {
    const auto r = run_cli("--version");
    CHECK(r.code == 0);
    CHECK(r.output.find("pointvet 0.1.0") != std::string::npos);
  }
  SUBCASE("--help lists the subcommands") {
    const auto r = run_cli("--help");
    CHECK(r.code == 0);
    CHECK(r.output.find("synth") != std::string::npos);
    CHECK(r.output.find("train") != std::string::npos);
  }
  SUBCASE("unknown config key") {
    const auto r = run_cli("synth nope=1 --out " + wpath("never"));
    CHECK(r.code == 1);
    CHECK(r.output.find("unknown config key") != std::string::npos);
  }
  SUBCASE("override without equals sign") {
    const auto r = run_cli("synth soup --out " + wpath("never2"));
    CHECK(r.code == 1);
    CHECK(r.output.find("key=value") != std::string::npos);
  }
  SUBCASE("bad value in an override") {
    const auto r = run_cli("synth optim.epochs=lots --out " + wpath("never3"));
    CHECK(r.code == 1);
  }
}

TEST_CASE("synth writes a complete dataset") {
  const std::string dir = synth_dir();
  for (int i = 0; i < 8; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "images/img_%03d.png", i);
    CHECK(fs::exists(fs::path(dir) / name));
  }
  CHECK(fs::exists(fs::path(dir) / "manifest.json"));
  CHECK(fs::exists(fs::path(dir) / "gt.ply"));
  CHECK(fs::exists(fs::path(dir) / "degraded.ply"));
  CHECK(fs::exists(fs::path(dir) / "scene_info.json"));
  CHECK(fs::exists(fs::path(dir) / "resolved_config.cfg"));
  CHECK(fs::exists(fs::path(dir) / "run_info.json"));

  const std::string resolved = slurp(dir + "/resolved_config.cfg");
  CHECK(resolved.find("synth.width = 32") != std::string::npos);
  CHECK(resolved.find("seed = 5") != std::string::npos);

  const auto info = nlohmann::json::parse(slurp(dir + "/run_info.json"));
  CHECK(info.at("subcommand") == "synth");
  CHECK(info.at("seed") == 5);

  const auto scene = nlohmann::json::parse(slurp(dir + "/scene_info.json"));
  CHECK(scene.at("spacing") == 0.12);

  const Dataset ds = io::load_dataset(dir + "/manifest.json");
  CHECK(ds.view_count() == 8);
  CHECK(ds.images[0].width == 32);

  SUBCASE("same seed reproduces the files, another seed does not") {
    const std::string again = wpath("synth_again");
    REQUIRE(run_cli("synth " + kTinyScene + " --seed 5 --out " + again).code == 0);
    CHECK(same_bytes(dir + "/gt.ply", again + "/gt.ply"));
    CHECK(same_bytes(dir + "/images/img_003.png", again + "/images/img_003.png"));

    const std::string other = wpath("synth_other");
    REQUIRE(run_cli("synth " + kTinyScene + " --seed 7 --out " + other).code == 0);
    CHECK(!same_bytes(dir + "/gt.ply", other + "/gt.ply"));
  }
}

TEST_CASE("train runs end to end") {
  const std::string dir = wpath("train_short");
  const auto r = run_cli("train " + kTinyScene + " optim.epochs=2 --seed 5 --out " + dir);
  REQUIRE(r.code == 0);
  CHECK(fs::exists(fs::path(dir) / "cloud_round0.ply"));
  CHECK(fs::exists(fs::path(dir) / "cloud_final.ply"));
  CHECK(fs::exists(fs::path(dir) / "render_before_000.png"));
  CHECK(fs::exists(fs::path(dir) / "render_after_000.png"));

  const std::string csv = slurp(dir + "/metrics.csv");
  CHECK(csv.rfind("epoch,", 0) == 0);
  CHECK(line_count(csv) == 3);  // header + one row per epoch

  SUBCASE("zero epochs leave the cloud untouched") {
    const std::string frozen = wpath("train_zero");
    REQUIRE(run_cli("train " + kTinyScene + " optim.epochs=0 --seed 5 --out " + frozen).code ==
            0);
    CHECK(same_bytes(frozen + "/cloud_round0.ply", frozen + "/cloud_final.ply"));
    CHECK(line_count(slurp(frozen + "/metrics.csv")) == 1);
  }
}

TEST_CASE("render emits one image per view and is thread independent") {
  const std::string dir = wpath("render_t1");
  const auto r =
      run_cli("render " + kTinyScene + " render.steepness=50 --seed 5 --threads 1 --out " + dir);
  REQUIRE(r.code == 0);
  for (int i = 0; i < 8; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "render_%03d.png", i);
    CHECK(fs::exists(fs::path(dir) / name));
  }
  const std::string dir2 = wpath("render_t2");
  REQUIRE(run_cli("render " + kTinyScene + " render.steepness=50 --seed 5 --threads 2 --out " +
                  dir2)
              .code == 0);
  for (int i = 0; i < 8; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "render_%03d.png", i);
    CHECK(same_bytes(dir + "/" + name, dir2 + "/" + name));
  }
}

TEST_CASE("vet writes error maps, a volume and the augmented cloud") {
  const std::string dir = wpath("vet_pass");
  const auto r = run_cli("vet " + kTinyScene + " --seed 5 --out " + dir);
  REQUIRE(r.code == 0);
  // every_kth defaults to 20, so view 0 is held out and 1..7 are train views
  for (int v = 1; v < 8; ++v) {
    char name[32];
    std::snprintf(name, sizeof(name), "error_%03d.pfm", v);
    CHECK(fs::exists(fs::path(dir) / name));
  }
  CHECK(!fs::exists(fs::path(dir) / "error_000.pfm"));
  CHECK(fs::exists(fs::path(dir) / "volume.raw"));
  CHECK(fs::exists(fs::path(dir) / "volume.raw.json"));
  CHECK(fs::exists(fs::path(dir) / "augmented.ply"));
}

TEST_CASE("eval reports perfect scores for the ground truth against itself") {
  const std::string dir = wpath("eval_gt");
  const auto r = run_cli("eval " + kTinyScene + " render.steepness=50 --seed 5 --truth-cloud " +
                         synth_dir() + "/gt.ply --out " + dir);
  REQUIRE(r.code == 0);
  const auto report = nlohmann::json::parse(slurp(dir + "/report.json"));
  CHECK(report.at("image_metrics").at("mean_psnr").get<double>() == 99.0);
  CHECK(report.at("image_metrics").at("mean_ssim").get<double>() ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(report.at("f_score").at("f_score").get<double>() == 1.0);
  CHECK(report.at("f_score").at("tau").get<double>() == doctest::Approx(0.24).epsilon(1e-12));
  CHECK(fs::exists(fs::path(dir) / "report.txt"));

  SUBCASE("cloud-only evaluation needs no dataset") {
    const std::string dir2 = wpath("eval_cloud_only");
    const auto r2 = run_cli("eval cloud=" + synth_dir() + "/gt.ply --truth-cloud " + synth_dir() +
                            "/gt.ply --tau 0.1 --out " + dir2);
    REQUIRE(r2.code == 0);
    const auto rep = nlohmann::json::parse(slurp(dir2 + "/report.json"));
    CHECK(rep.at("f_score").at("recall").get<double>() == 1.0);
    CHECK(!rep.contains("image_metrics"));
  }
  SUBCASE("without a cloud or dataset eval is a config error") {
    CHECK(run_cli("eval --tau 0.1 --out " + wpath("eval_nothing")).code == 1);
  }
}

TEST_CASE("clean thresholds by opacity") {
  const PointCloud gt = io::read_ply(synth_dir() + "/gt.ply");

  const std::string keep = wpath("clean_keep");
  REQUIRE(run_cli("clean cloud=" + synth_dir() + "/gt.ply optim.clean_threshold=0.3 --out " +
                  keep)
              .code == 0);
  CHECK(io::read_ply(keep + "/cleaned.ply").size() == gt.size());

  const std::string drop = wpath("clean_drop");
  REQUIRE(run_cli("clean cloud=" + synth_dir() + "/gt.ply optim.clean_threshold=0.9 --out " +
                  drop)
              .code == 0);
  CHECK(io::read_ply(drop + "/cleaned.ply").empty());  // sigmoid(1) < 0.9 at steepness 1

  SUBCASE("clean without a cloud is a config error") {
    CHECK(run_cli("clean --out " + wpath("clean_none")).code == 1);
  }
}

TEST_CASE("data problems exit with code 2") {
  SUBCASE("missing dataset") {
    const auto r = run_cli("train dataset=" + wpath("no_such_manifest.json") +
                           " cloud=" + synth_dir() + "/gt.ply --out " + wpath("missing_ds"));
    CHECK(r.code == 2);
    CHECK(r.output.find("cannot open") != std::string::npos);
  }
  SUBCASE("corrupt point cloud") {
    const std::string bad = wpath("bad.ply");
    std::ofstream(bad) << "this is not a ply file\n";
    CHECK(run_cli("clean cloud=" + bad + " --out " + wpath("corrupt_out")).code == 2);
  }
}

TEST_CASE("non-finite losses exit with code 3") {
  const std::string dir = wpath("nan_ds");
  fs::create_directories(dir);

  Camera cam;
  cam.fx = cam.fy = 4.0;
  cam.cx = cam.cy = 2.0;
  cam.width = cam.height = 4;
  io::DatasetManifest m;
  m.cameras = {cam};
  m.images = {{"nan.pfm", 0}};
  m.every_kth = 0;  // keep the single view in the train split
  io::write_manifest(m, dir + "/manifest.json");
  io::write_pfm(ImageBuffer(4, 4, 3, std::numeric_limits<double>::quiet_NaN()),
                dir + "/nan.pfm");

  PointCloud cloud;
  cloud.append(Point{{0, 0, 2}}, 0);
  io::write_ply(cloud, dir + "/pt.ply");

  const auto r = run_cli("train dataset=" + dir + "/manifest.json cloud=" + dir +
                         "/pt.ply optim.epochs=1 --out " + wpath("nan_out"));
  CHECK(r.code == 3);
  CHECK(r.output.find("non-finite") != std::string::npos);
}

TEST_CASE("config files merge with overrides") {
  const std::string cfg = wpath("scene.cfg");
  std::ofstream(cfg) << "# tiny scene\nsynth.enabled = true\nsynth.images = 8\n"
                     << "synth.width = 24\nsynth.height = 24\nsynth.spacing = 0.15\n";
  const std::string dir = wpath("from_config");
  const auto r = run_cli("synth --config " + cfg + " --seed 9 --out " + dir);
  REQUIRE(r.code == 0);
  CHECK(io::read_png(dir + "/images/img_000.png").width == 24);
  const std::string resolved = slurp(dir + "/resolved_config.cfg");
  CHECK(resolved.find("synth.width = 24") != std::string::npos);
  CHECK(resolved.find("seed = 9") != std::string::npos);

  SUBCASE("missing config file") {
    CHECK(run_cli("synth --config " + wpath("ghost.cfg") + " --out " + wpath("ghost_out")).code ==
          1);
  }
}
