#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace pvet::io {

// Every tunable of the pipeline, flat key=value with dotted keys. List-valued
// keys stay as comma-separated strings until their consumer parses them.
struct PipelineConfig {
  std::string dataset;  // manifest path
  std::string cloud;    // initial point cloud (PLY)
  std::string colmap;   // COLMAP text model dir (alternative to dataset+cloud)
  std::string out = "out";
  uint64_t seed = 1;
  int threads = 1;

  struct Synth {
    bool enabled = false;
    std::string primitives = "sphere";
    int images = 16;
    int width = 128;
    int height = 128;
    double spacing = 0.02;
    int outliers = 0;
    std::string ablations;  // "x0,y0,z0,x1,y1,z1" groups separated by ';'
  } synth;

  struct Optim {
    int epochs = 300;
    std::string loss = "l1";  // l1 | l2
    double lr_color = 0.02;
    double lr_alpha = 0.02;
    bool lr_decay = true;
    int clean_every = 50;
    double clean_threshold = 0.3;
    double opacity_bias = 1e-7;
    double narrowing_factor = 0.01;
    int transition_epoch = -1;  // < 0 disables the opaque transition
  } optim;

  struct Schedule {
    std::string spawn_epochs = "200,400,600";
    int vet_iterations = 1;  // how many spawn_epochs entries are used
  } schedule;

  struct Vet {
    std::string metric = "l1";  // l1 | l2 | ssim
    double focus = -1.0;        // < 0: metric default
    int grid = 64;
    double tv_weight = 0.001;
    int iterations = 40;
    double step_size = 0.0;  // <= 0: 1 / views
    double ray_step = 0.5;
    double inner_fraction = 0.95;
  } vet;

  struct Spawn {
    int p_max = 10;
    std::string color_init = "view_average";  // view_average | midgray
  } spawn;

  struct Env {
    bool enabled = false;
    int layers = 4;
    int points_per_layer = 2000;
    std::string radii = "2,4,8,16";
  } env;

  struct Split {
    int every_kth = 20;
  } split;

  struct Eval {
    double tau_factor = 2.0;
  } eval;

  struct Render {
    std::string background = "0,0,0";
    std::string mode = "blend";  // blend | opaque
    double steepness = 1.0;
  } render;
};

// One key=value assignment; unknown keys or unparsable values raise
// ConfigError.
void apply_config_value(PipelineConfig& config, const std::string& key,
                        const std::string& value);

// '#'-comment, blank-line-tolerant key=value file.
void read_config_file(PipelineConfig& config, const std::string& path);

// All keys with their current values, parseable by read_config_file.
std::string serialize_config(const PipelineConfig& config);

// Shared list parsing for comma-separated config values.
std::vector<double> parse_double_list(const std::string& text, const std::string& key);
std::vector<int> parse_int_list(const std::string& text, const std::string& key);

}  // namespace pvet::io
