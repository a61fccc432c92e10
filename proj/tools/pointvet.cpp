#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "pointvet/core/dataset.hpp"
#include "pointvet/core/errors.hpp"
#include "pointvet/eval/fscore.hpp"
#include "pointvet/eval/metrics.hpp"
#include "pointvet/eval/synth.hpp"
#include "pointvet/io/colmap.hpp"
#include "pointvet/io/config.hpp"
#include "pointvet/io/dataset.hpp"
#include "pointvet/io/image.hpp"
#include "pointvet/io/ply.hpp"
#include "pointvet/io/volume.hpp"
#include "pointvet/optim/train.hpp"
#include "pointvet/raster/raster.hpp"
#include "pointvet/spawn/spawn.hpp"
#include "pointvet/vet/vet.hpp"

namespace {

using namespace pvet;
namespace fs = std::filesystem;

constexpr const char* kVersion = "0.1.0";

struct CommonArgs {
  std::string config_path;
  std::string seed;
  std::string threads;
  std::string out;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "key=value config file");
  cmd->add_option("--seed", args.seed, "master RNG seed");
  cmd->add_option("--threads", args.threads, "worker thread cap");
  cmd->add_option("--out", args.out, "output directory");
  cmd->add_option("overrides", args.overrides,
                  "config overrides as key=value (dotted keys, e.g. optim.clean_threshold=0.3)");
}

io::PipelineConfig resolve_config(const CommonArgs& args) {
  io::PipelineConfig cfg;
  if (!args.config_path.empty()) io::read_config_file(cfg, args.config_path);
  if (!args.seed.empty()) io::apply_config_value(cfg, "seed", args.seed);
  if (!args.threads.empty()) io::apply_config_value(cfg, "threads", args.threads);
  if (!args.out.empty()) io::apply_config_value(cfg, "out", args.out);
  for (const std::string& ov : args.overrides) {
    const size_t eq = ov.find('=');
    if (eq == std::string::npos)
      throw ConfigError("override '" + ov + "' is not of the form key=value");
    io::apply_config_value(cfg, ov.substr(0, eq), ov.substr(eq + 1));
  }
  if (cfg.threads < 1) throw ConfigError("threads must be >= 1");
  return cfg;
}

// Every run directory carries enough to reproduce it.
void write_run_artifacts(const io::PipelineConfig& cfg, const std::string& subcommand,
                         int argc, char** argv) {
  fs::create_directories(cfg.out);
  {
    std::ofstream out(fs::path(cfg.out) / "resolved_config.cfg");
    out << io::serialize_config(cfg);
  }
  nlohmann::json info;
  std::ostringstream cmdline;
  for (int i = 0; i < argc; ++i) cmdline << (i ? " " : "") << argv[i];
  info["command"] = cmdline.str();
  info["subcommand"] = subcommand;
  info["seed"] = cfg.seed;
  info["threads"] = cfg.threads;
  info["version"] = kVersion;
  std::ofstream out(fs::path(cfg.out) / "run_info.json");
  out << info.dump(2) << "\n";
}

Vec3 parse_background(const io::PipelineConfig& cfg) {
  const auto v = io::parse_double_list(cfg.render.background, "render.background");
  if (v.size() != 3) throw ConfigError("render.background needs 3 comma-separated values");
  return {v[0], v[1], v[2]};
}

eval::SynthSpec synth_spec_from(const io::PipelineConfig& cfg) {
  eval::SynthSpec spec;
  spec.primitives.clear();
  std::istringstream ss(cfg.synth.primitives);
  std::string name;
  while (std::getline(ss, name, ',')) {
    if (name == "sphere")
      spec.primitives.push_back(eval::Primitive::Sphere);
    else if (name == "cube")
      spec.primitives.push_back(eval::Primitive::Cube);
    else if (name == "plane")
      spec.primitives.push_back(eval::Primitive::Plane);
    else if (name == "branches")
      spec.primitives.push_back(eval::Primitive::Branches);
    else
      throw ConfigError("unknown primitive '" + name + "'");
  }
  spec.image_count = cfg.synth.images;
  spec.width = cfg.synth.width;
  spec.height = cfg.synth.height;
  spec.spacing = cfg.synth.spacing;
  spec.outlier_count = cfg.synth.outliers;
  spec.seed = cfg.seed;
  spec.background = parse_background(cfg);
  if (!cfg.synth.ablations.empty()) {
    std::istringstream groups(cfg.synth.ablations);
    std::string group;
    while (std::getline(groups, group, ';')) {
      const auto v = io::parse_double_list(group, "synth.ablations");
      if (v.size() != 6)
        throw ConfigError("synth.ablations: each ';'-separated group needs 6 numbers");
      spec.ablations.push_back(Box3{{v[0], v[1], v[2]}, {v[3], v[4], v[5]}});
    }
  }
  return spec;
}

optim::TrainConfig train_config_from(const io::PipelineConfig& cfg) {
  optim::TrainConfig tc;
  tc.epochs = cfg.optim.epochs;
  if (cfg.optim.loss == "l1")
    tc.loss = optim::LossKind::L1;
  else if (cfg.optim.loss == "l2")
    tc.loss = optim::LossKind::L2;
  else
    throw ConfigError("optim.loss must be l1 or l2");
  tc.adam.lr_color = cfg.optim.lr_color;
  tc.adam.lr_alpha = cfg.optim.lr_alpha;
  tc.lr_decay = cfg.optim.lr_decay;
  tc.clean_every = cfg.optim.clean_every;
  tc.clean_threshold = cfg.optim.clean_threshold;
  tc.opacity_bias = cfg.optim.opacity_bias;
  tc.narrowing_factor = cfg.optim.narrowing_factor;
  tc.transition_epoch = cfg.optim.transition_epoch;

  const auto epochs = io::parse_int_list(cfg.schedule.spawn_epochs, "schedule.spawn_epochs");
  const int rounds = std::min<int>(cfg.schedule.vet_iterations, int(epochs.size()));
  tc.spawn_epochs.assign(epochs.begin(), epochs.begin() + rounds);

  if (cfg.vet.metric == "l1")
    tc.error_map.metric = vet::ErrorMetric::L1;
  else if (cfg.vet.metric == "l2")
    tc.error_map.metric = vet::ErrorMetric::L2;
  else if (cfg.vet.metric == "ssim")
    tc.error_map.metric = vet::ErrorMetric::SSIM;
  else
    throw ConfigError("vet.metric must be l1, l2 or ssim");
  tc.error_map.focus = cfg.vet.focus;
  tc.recon.dims = {cfg.vet.grid, cfg.vet.grid, cfg.vet.grid};
  tc.recon.tv_weight = cfg.vet.tv_weight;
  tc.recon.iterations = cfg.vet.iterations;
  tc.recon.step_size = cfg.vet.step_size;
  tc.recon.ray_step = cfg.vet.ray_step;
  tc.inner_fraction = cfg.vet.inner_fraction;

  tc.spawn.p_max = cfg.spawn.p_max;
  tc.spawn.seed = cfg.seed;
  if (cfg.spawn.color_init == "view_average")
    tc.spawn.color_init = spawn::ColorInit::ViewAverage;
  else if (cfg.spawn.color_init == "midgray")
    tc.spawn.color_init = spawn::ColorInit::Midgray;
  else
    throw ConfigError("spawn.color_init must be view_average or midgray");

  tc.background = parse_background(cfg);
  tc.threads = cfg.threads;
  return tc;
}

spawn::EnvConfig env_config_from(const io::PipelineConfig& cfg) {
  spawn::EnvConfig ec;
  ec.layers = cfg.env.layers;
  ec.points_per_layer = cfg.env.points_per_layer;
  ec.radii = io::parse_double_list(cfg.env.radii, "env.radii");
  return ec;
}

struct Inputs {
  Dataset dataset;
  PointCloud cloud;
  std::optional<eval::SyntheticScene> scene;
};

Inputs load_inputs(const io::PipelineConfig& cfg, bool need_cloud) {
  Inputs in;
  if (cfg.synth.enabled) {
    in.scene = eval::synth_scene(synth_spec_from(cfg), cfg.threads);
    in.dataset = make_dataset(in.scene->cameras, in.scene->images, cfg.split.every_kth);
    in.cloud = in.scene->degraded;
  } else {
    if (cfg.dataset.empty())
      throw ConfigError("no dataset configured (set dataset= or synth.enabled=true)");
    in.dataset = io::load_dataset(cfg.dataset);
    if (need_cloud) {
      if (!cfg.cloud.empty())
        in.cloud = io::read_ply(cfg.cloud);
      else if (!cfg.colmap.empty())
        in.cloud = io::read_colmap(cfg.colmap).points;
      else
        throw ConfigError("no initial cloud configured (set cloud= or colmap=)");
    }
  }
  if (need_cloud && cfg.env.enabled && !in.cloud.empty()) {
    const Box3 box = vet::scene_bbox(in.cloud, cfg.vet.inner_fraction);
    for (const Point& p : spawn::build_environment(box, env_config_from(cfg)))
      in.cloud.append(p, 0);
  }
  return in;
}

std::string view_name(const char* prefix, int index, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s%03d%s", prefix, index, ext);
  return buf;
}

void render_views(const PointCloud& cloud, const Dataset& dataset, const std::vector<int>& views,
                  double steepness, const Vec3& background, bool opaque, int threads,
                  const fs::path& dir, const char* prefix) {
  for (int v : views) {
    const Camera& cam = dataset.cameras[size_t(v)];
    const auto frags = raster::collect_fragments(cloud, cam, threads);
    const ImageBuffer img =
        opaque ? raster::render_opaque(cloud, cam, frags, steepness, background, threads)
               : raster::render_blend(cloud, cam, frags, steepness, background, threads);
    io::write_png(img, (dir / view_name(prefix, v, ".png")).string());
  }
}

int cmd_synth(const io::PipelineConfig& cfg) {
  const eval::SyntheticScene scene = eval::synth_scene(synth_spec_from(cfg), cfg.threads);
  const fs::path out(cfg.out);
  fs::create_directories(out / "images");

  io::DatasetManifest manifest;
  manifest.every_kth = cfg.split.every_kth;
  manifest.cameras = scene.cameras;
  for (size_t i = 0; i < scene.images.size(); ++i) {
    const std::string rel = "images/" + view_name("img_", int(i), ".png");
    io::write_png(scene.images[i], (out / rel).string());
    manifest.images.push_back({rel, int(i)});
  }
  io::write_manifest(manifest, (out / "manifest.json").string());
  io::write_ply(scene.ground_truth, (out / "gt.ply").string());
  io::write_ply(scene.degraded, (out / "degraded.ply").string());

  nlohmann::json info;
  info["spacing"] = scene.spacing;
  info["outlier_count"] = scene.outlier_positions.size();
  info["seed"] = cfg.seed;
  info["ablations"] = nlohmann::json::array();
  for (const Box3& b : scene.ablations)
    info["ablations"].push_back({b.min.x, b.min.y, b.min.z, b.max.x, b.max.y, b.max.z});
  std::ofstream si(out / "scene_info.json");
  si << info.dump(2) << "\n";

  std::cerr << "synth: " << scene.ground_truth.size() << " gt points, " << scene.degraded.size()
            << " degraded points, " << scene.images.size() << " views -> " << cfg.out << "\n";
  return 0;
}

int cmd_train(const io::PipelineConfig& cfg) {
  Inputs in = load_inputs(cfg, true);
  const optim::TrainConfig tc = train_config_from(cfg);
  const fs::path out(cfg.out);
  fs::create_directories(out);

  io::write_ply(in.cloud, (out / "cloud_round0.ply").string());
  render_views(in.cloud, in.dataset, in.dataset.eval_indices, 1.0, tc.background, false,
               cfg.threads, out, "render_before_");

  optim::TrainResult result = optim::train(in.dataset, std::move(in.cloud), tc);

  for (const optim::SpawnEvent& ev : result.spawns) {
    const std::string tag = std::to_string(ev.generation);
    io::write_volume(ev.volume, (out / ("volume_round" + tag + ".raw")).string());
    io::write_ply(ev.cloud_after, (out / ("cloud_round" + tag + ".ply")).string());
    std::cerr << "train: spawn round " << ev.generation << " at epoch " << ev.epoch << ": +"
              << ev.spawned << " points\n";
  }
  io::write_ply(result.cloud, (out / "cloud_final.ply").string());
  {
    std::ofstream csv(out / "metrics.csv");
    csv << optim::log_to_csv(result.log);
  }

  const double final_steepness =
      optim::steepness_at(std::max(0, tc.epochs - 1), result.state);
  render_views(result.cloud, in.dataset, in.dataset.eval_indices, final_steepness, tc.background,
               false, cfg.threads, out, "render_after_");

  if (!result.log.empty()) {
    const auto& last = result.log.back();
    std::cerr << "train: " << tc.epochs << " epochs, final loss " << last.loss << ", "
              << last.point_count << " points";
    if (std::isfinite(last.eval_psnr)) std::cerr << ", held-out PSNR " << last.eval_psnr << " dB";
    std::cerr << "\n";
  }
  return 0;
}

int cmd_render(const io::PipelineConfig& cfg) {
  Inputs in = load_inputs(cfg, true);
  const Vec3 background = parse_background(cfg);
  const bool opaque = cfg.render.mode == "opaque";
  if (!opaque && cfg.render.mode != "blend")
    throw ConfigError("render.mode must be blend or opaque");
  const fs::path out(cfg.out);
  fs::create_directories(out);

  for (size_t v = 0; v < in.dataset.view_count(); ++v) {
    const auto t0 = std::chrono::steady_clock::now();
    const Camera& cam = in.dataset.cameras[v];
    const auto frags = raster::collect_fragments(in.cloud, cam, cfg.threads);
    const ImageBuffer img =
        opaque
            ? raster::render_opaque(in.cloud, cam, frags, cfg.render.steepness, background,
                                    cfg.threads)
            : raster::render_blend(in.cloud, cam, frags, cfg.render.steepness, background,
                                   cfg.threads);
    io::write_png(img, (out / view_name("render_", int(v), ".png")).string());
    const auto t1 = std::chrono::steady_clock::now();
    std::cerr << "render: view " << v << " "
              << std::chrono::duration<double, std::milli>(t1 - t0).count() << " ms\n";
  }
  return 0;
}

int cmd_vet(const io::PipelineConfig& cfg) {
  Inputs in = load_inputs(cfg, true);
  const optim::TrainConfig tc = train_config_from(cfg);
  const fs::path out(cfg.out);
  fs::create_directories(out);

  std::vector<ImageBuffer> maps;
  std::vector<Camera> cams;
  std::vector<ImageBuffer> truths;
  for (int v : in.dataset.train_indices) {
    const Camera& cam = in.dataset.cameras[size_t(v)];
    const auto frags = raster::collect_fragments(in.cloud, cam, cfg.threads);
    const ImageBuffer render = raster::render_blend(in.cloud, cam, frags, cfg.render.steepness,
                                                    tc.background, cfg.threads);
    const ImageBuffer err = vet::error_map(render, in.dataset.images[size_t(v)], tc.error_map);
    ImageBuffer prep = vet::preprocess_error(err, tc.error_map.resolved_focus());
    io::write_pfm(prep, (out / view_name("error_", v, ".pfm")).string());
    maps.push_back(std::move(prep));
    cams.push_back(cam);
    truths.push_back(in.dataset.images[size_t(v)]);
  }

  const Box3 box = vet::scene_bbox(in.cloud, cfg.vet.inner_fraction);
  const vet::ReconResult recon =
      vet::reconstruct_volume(maps, cams, box, tc.recon, cfg.threads);
  io::write_volume(recon.volume, (out / "volume.raw").string());

  size_t spawned = 0;
  PointCloud augmented = in.cloud;
  if (!recon.nothing_to_reconstruct) {
    const auto fresh = spawn::spawn_from_volume(recon.volume, tc.spawn, cams, truths, cfg.threads);
    spawned = fresh.size();
    for (const Point& p : fresh) augmented.append(p, 1);
  }
  io::write_ply(augmented, (out / "augmented.ply").string());
  std::cerr << "vet: " << maps.size() << " error maps, spawned " << spawned << " points\n";
  return 0;
}

int cmd_eval(const io::PipelineConfig& cfg, const std::string& truth_cloud_path, double tau_flag) {
  const bool have_dataset = cfg.synth.enabled || !cfg.dataset.empty();
  Inputs in;
  if (have_dataset) {
    in = load_inputs(cfg, true);
  } else {
    if (cfg.cloud.empty())
      throw ConfigError("eval: set cloud= (and dataset= for image metrics)");
    in.cloud = io::read_ply(cfg.cloud);
  }
  const Vec3 background = parse_background(cfg);
  const fs::path out(cfg.out);
  fs::create_directories(out);

  nlohmann::json report;
  std::ostringstream table;
  report["split"] = {{"every_kth", in.dataset.every_kth}};

  if (have_dataset) {
    const bool opaque = cfg.render.mode == "opaque";
    double psnr_acc = 0.0, ssim_acc = 0.0;
    nlohmann::json views = nlohmann::json::array();
    table << "view      psnr_db      ssim\n";
    for (int v : in.dataset.eval_indices) {
      const Camera& cam = in.dataset.cameras[size_t(v)];
      const auto frags = raster::collect_fragments(in.cloud, cam, cfg.threads);
      const ImageBuffer img =
          opaque ? raster::render_opaque(in.cloud, cam, frags, cfg.render.steepness, background,
                                         cfg.threads)
                 : raster::render_blend(in.cloud, cam, frags, cfg.render.steepness, background,
                                        cfg.threads);
      const double p = eval::psnr(img, in.dataset.images[size_t(v)]);
      const double s = eval::ssim(img, in.dataset.images[size_t(v)]);
      psnr_acc += p;
      ssim_acc += s;
      views.push_back({{"view", v}, {"psnr", p}, {"ssim", s}});
      char line[128];
      std::snprintf(line, sizeof(line), "%4d  %11.4f  %8.5f\n", v, p, s);
      table << line;
    }
    if (!in.dataset.eval_indices.empty()) {
      const double n = double(in.dataset.eval_indices.size());
      report["image_metrics"] = {{"views", views},
                                 {"mean_psnr", psnr_acc / n},
                                 {"mean_ssim", ssim_acc / n},
                                 {"mode", cfg.render.mode},
                                 {"steepness", cfg.render.steepness}};
      char line[128];
      std::snprintf(line, sizeof(line), "mean  %11.4f  %8.5f\n", psnr_acc / n, ssim_acc / n);
      table << line;
    }
  }

  if (!truth_cloud_path.empty()) {
    if (in.cloud.empty()) throw ConfigError("eval: --truth-cloud needs cloud= (or synth)");
    const PointCloud truth = io::read_ply(truth_cloud_path);
    double tau = tau_flag;
    if (!(tau > 0.0)) {
      // Derive tau from the scene's sampling spacing when available.
      double spacing = cfg.synth.enabled ? cfg.synth.spacing : 0.0;
      if (!cfg.dataset.empty()) {
        const fs::path info = fs::path(cfg.dataset).parent_path() / "scene_info.json";
        std::ifstream si(info);
        if (si) {
          nlohmann::json j;
          si >> j;
          spacing = j.value("spacing", spacing);
        }
      }
      if (!(spacing > 0.0))
        throw ConfigError("eval: pass --tau (no scene_info.json to derive it from)");
      tau = cfg.eval.tau_factor * spacing;
    }
    const eval::FScoreReport f = eval::f_score(in.cloud, truth, tau);
    report["f_score"] = {{"precision", f.precision},
                         {"recall", f.recall},
                         {"f_score", f.f_score},
                         {"tau", f.tau}};
    char line[160];
    std::snprintf(line, sizeof(line), "f-score: P=%.4f R=%.4f F=%.4f (tau=%g)\n", f.precision,
                  f.recall, f.f_score, f.tau);
    table << line;
  }

  {
    std::ofstream js(out / "report.json");
    js << report.dump(2) << "\n";
    std::ofstream txt(out / "report.txt");
    txt << table.str();
  }
  std::cerr << "eval: report written to " << (out / "report.json").string() << "\n";
  return 0;
}

int cmd_clean(const io::PipelineConfig& cfg) {
  if (cfg.cloud.empty()) throw ConfigError("clean: set cloud=");
  PointCloud cloud = io::read_ply(cfg.cloud);
  optim::OptimState state;
  state.clean_threshold = cfg.optim.clean_threshold;
  state.resize_moments(cloud.size());
  const auto report = optim::clean_points(cloud, state, cfg.render.steepness);
  const fs::path out(cfg.out);
  fs::create_directories(out);
  io::write_ply(cloud, (out / "cleaned.ply").string());
  std::cerr << "clean: removed " << report.removed_total << " points, kept " << cloud.size()
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"point cloud completion via visual error tomography"};
  app.set_version_flag("--version", std::string("pointvet ") + kVersion);
  app.require_subcommand(1);

  CommonArgs common;
  std::string truth_cloud;
  double tau_flag = 0.0;

  CLI::App* c_train = app.add_subcommand("train", "optimize a point cloud against a dataset");
  CLI::App* c_render = app.add_subcommand("render", "render a cloud from dataset cameras");
  CLI::App* c_vet = app.add_subcommand("vet", "one error-tomography + spawn pass, no training");
  CLI::App* c_eval = app.add_subcommand("eval", "held-out image metrics and cloud f-score");
  CLI::App* c_synth = app.add_subcommand("synth", "materialize a synthetic dataset");
  CLI::App* c_clean = app.add_subcommand("clean", "threshold points by opacity");
  for (CLI::App* cmd : {c_train, c_render, c_vet, c_eval, c_synth, c_clean})
    add_common(cmd, common);
  c_eval->add_option("--truth-cloud", truth_cloud, "ground-truth PLY for the f-score");
  c_eval->add_option("--tau", tau_flag, "f-score distance threshold, world units");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    const io::PipelineConfig cfg = resolve_config(common);
    const std::string sub = app.get_subcommands().front()->get_name();
    write_run_artifacts(cfg, sub, argc, argv);
    if (sub == "train") return cmd_train(cfg);
    if (sub == "render") return cmd_render(cfg);
    if (sub == "vet") return cmd_vet(cfg);
    if (sub == "eval") return cmd_eval(cfg, truth_cloud, tau_flag);
    if (sub == "synth") return cmd_synth(cfg);
    if (sub == "clean") return cmd_clean(cfg);
    std::cerr << "error: unknown subcommand\n";
    return 1;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
