#include "pointvet/optim/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "pointvet/core/errors.hpp"
#include "pointvet/core/rng.hpp"
#include "pointvet/eval/metrics.hpp"
#include "pointvet/raster/raster.hpp"

namespace pvet::optim {

namespace {

double mean_psnr(const PointCloud& cloud, const Dataset& dataset, const std::vector<int>& views,
                 double steepness, const Vec3& background, int threads) {
  if (views.empty()) return std::numeric_limits<double>::quiet_NaN();
  double acc = 0.0;
  for (int v : views) {
    const auto frags = raster::collect_fragments(cloud, dataset.cameras[size_t(v)], threads);
    const ImageBuffer img = raster::render_blend(cloud, dataset.cameras[size_t(v)], frags,
                                                 steepness, background, threads);
    acc += eval::psnr(img, dataset.images[size_t(v)]);
  }
  return acc / double(views.size());
}

}  // namespace

TrainResult train(const Dataset& dataset, PointCloud cloud, const TrainConfig& config) {
  if (dataset.train_indices.empty())
    throw std::invalid_argument("train: dataset has no training views");
  if (config.epochs < 0) throw std::invalid_argument("train: negative epoch count");

  TrainResult result;
  OptimState& state = result.state;
  state.adam = config.adam;
  state.narrowing_factor = config.narrowing_factor;
  state.opacity_bias = config.opacity_bias;
  state.clean_every = config.clean_every;
  state.clean_threshold = config.clean_threshold;
  if (config.transition_epoch >= 0) state.transition_start_epoch = config.transition_epoch;
  state.resize_moments(cloud.size());

  // VET localizes error relative to where the scene started out.
  Box3 scene_box;
  bool have_box = false;
  if (!cloud.empty()) {
    bool any_scene = false;
    for (const Point& p : cloud.points) any_scene |= !p.is_environment;
    if (any_scene) {
      scene_box = vet::scene_bbox(cloud, config.inner_fraction);
      have_box = true;
    }
  }

  const int n_views = int(dataset.train_indices.size());
  int spawn_round = 0;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    state.epoch = epoch;
    const double steepness = steepness_at(epoch, state);

    CloudGradients grads;
    grads.color.assign(cloud.size(), Vec3{});
    grads.alpha_raw.assign(cloud.size(), 0.0);
    double loss_sum = 0.0;
    double psnr_sum = 0.0;

    for (int v : dataset.train_indices) {
      const Camera& cam = dataset.cameras[size_t(v)];
      const ImageBuffer& truth = dataset.images[size_t(v)];
      const auto frags = raster::collect_fragments(cloud, cam, config.threads);
      const ImageBuffer render =
          raster::render_blend(cloud, cam, frags, steepness, config.background, config.threads);
      const auto [loss, pixel_grad] = loss_and_pixel_grad(render, truth, config.loss);
      loss_sum += loss;
      psnr_sum += eval::psnr(render, truth);
      const raster::BlendGradients g = raster::backward_blend(
          cloud, cam, frags, steepness, pixel_grad, config.background, config.threads);
      for (size_t i = 0; i < cloud.size(); ++i) {
        grads.color[i] += g.d_color[i];
        grads.alpha_raw[i] += g.d_alpha_raw[i];
      }
    }

    const double loss = loss_sum / double(n_views);
    if (!std::isfinite(loss))
      throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch));
    const double inv = 1.0 / double(n_views);
    for (size_t i = 0; i < cloud.size(); ++i) {
      grads.color[i] *= inv;
      grads.alpha_raw[i] *= inv;
    }

    apply_opacity_bias(grads, config.opacity_bias);
    double lr_scale = 1.0;
    if (config.lr_decay) {
      if (epoch >= (config.epochs * 8) / 10)
        lr_scale = 0.25;
      else if (epoch >= (config.epochs * 6) / 10)
        lr_scale = 0.5;
    }
    adam_step(state, cloud, grads, lr_scale);

    EpochLog entry;
    entry.epoch = epoch;
    entry.loss = loss;
    entry.train_psnr = psnr_sum / double(n_views);
    entry.steepness = steepness;
    entry.eval_psnr = std::numeric_limits<double>::quiet_NaN();
    if (config.eval_every > 0 && (epoch % config.eval_every == 0 || epoch + 1 == config.epochs))
      entry.eval_psnr = mean_psnr(cloud, dataset, dataset.eval_indices, steepness,
                                  config.background, config.threads);

    if (config.clean_every > 0 && (epoch + 1) % config.clean_every == 0)
      clean_points(cloud, state, steepness);

    if (std::find(config.spawn_epochs.begin(), config.spawn_epochs.end(), epoch + 1) !=
        config.spawn_epochs.end()) {
      ++spawn_round;
      SpawnEvent event;
      event.epoch = epoch + 1;
      event.generation = spawn_round;

      if (have_box && n_views >= 2) {
        std::vector<ImageBuffer> maps;
        std::vector<Camera> cams;
        std::vector<ImageBuffer> truths;
        maps.reserve(size_t(n_views));
        for (int v : dataset.train_indices) {
          const Camera& cam = dataset.cameras[size_t(v)];
          const auto frags = raster::collect_fragments(cloud, cam, config.threads);
          const ImageBuffer render = raster::render_blend(cloud, cam, frags, steepness,
                                                          config.background, config.threads);
          const ImageBuffer err = vet::error_map(render, dataset.images[size_t(v)],
                                                 config.error_map);
          maps.push_back(vet::preprocess_error(err, config.error_map.resolved_focus()));
          cams.push_back(cam);
          truths.push_back(dataset.images[size_t(v)]);
        }
        vet::ReconResult recon =
            vet::reconstruct_volume(maps, cams, scene_box, config.recon, config.threads);
        event.volume = std::move(recon.volume);
        if (!recon.nothing_to_reconstruct) {
          spawn::SpawnConfig round_cfg = config.spawn;
          round_cfg.seed = substream_seed(config.spawn.seed, uint64_t(spawn_round));
          const std::vector<Point> fresh =
              spawn::spawn_from_volume(event.volume, round_cfg, cams, truths, config.threads);
          event.spawned = fresh.size();
          for (const Point& p : fresh) cloud.append(p, spawn_round);
          state.resize_moments(cloud.size());
        }
      }
      event.cloud_after = cloud;
      result.spawns.push_back(std::move(event));
    }

    entry.point_count = cloud.size();
    result.log.push_back(entry);
  }

  result.cloud = std::move(cloud);
  return result;
}

std::string log_to_csv(const std::vector<EpochLog>& log) {
  std::ostringstream out;
  out << "epoch,loss,train_psnr,eval_psnr,points,steepness\n";
  out.precision(10);
  for (const EpochLog& e : log) {
    out << e.epoch << ',' << e.loss << ',' << e.train_psnr << ',';
    if (std::isfinite(e.eval_psnr)) out << e.eval_psnr;
    out << ',' << e.point_count << ',' << e.steepness << '\n';
  }
  return out.str();
}

}  // namespace pvet::optim
