#pragma once

#include "stride/guidance.hpp"
#include "stride/model.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace stride {

struct DataConfig {
  int source_terrains = 12;    // 8 x 8 m training terrains
  int clips_per_style = 60;
  std::vector<std::string> styles = {"walk", "crouch", "zombie", "jump"};
  int bank_extra_patches = 72;  // random patches beyond one per clip
  int clip_frames = 60;
  int heldout_terrains = 10;
  int heldout_cases = 50;
  double fractal_amplitude = 0.15;  // m
  double max_slope_deg = 10.0;
  double max_stair_rise = 0.12;  // m
  double max_curvature = 0.35;   // rad / m
  double speed_jitter = 0.15;    // relative
};

struct FitConfig {
  double jump_threshold = 0.3;  // l, meters
  int top = 3;
};

struct DiffusionConfig {
  int steps = 100;
  double lambda = 4.0;
  int window_stride = 10;
};

struct TrainConfig {
  int steps = 20000;
  int batch = 16;
  double lr = 5e-4;
  double lr_final = 2e-5;  // cosine decay target
  int warmup = 500;
  double clip = 1.0;
  double weight_decay = 0.0;
  int log_every = 500;
};

struct SampleConfig {
  double goal_reach_eps = 0.15;  // m, horizontal
  int max_segments = 1;
  bool refresh_scene = true;
};

/// Everything a run needs. Text form: "[section]" headers and "key = value"
/// lines, '#' comments; unknown sections or keys are errors.
struct PipelineConfig {
  std::uint64_t seed = 1;
  int jobs = 0;  // 0 = hardware concurrency
  std::filesystem::path work_dir = "run";
  DataConfig data;
  FitConfig fit;
  DiffusionConfig diffusion;
  ModelConfig model;
  TrainConfig train;
  GuidanceSpec guidance;
  SampleConfig sample;

  /// Throws InvalidParams naming the offending key.
  void validate() const;

  std::string to_text() const;
  /// Starts from the defaults and applies every key in `text`. Throws
  /// InvalidParams on syntax errors, unknown keys or bad values.
  static PipelineConfig from_text(const std::string& text);
  static PipelineConfig load(const std::filesystem::path& path);

  /// A tiny end-to-end configuration that runs in seconds.
  static PipelineConfig smoke();

  std::vector<int> style_ids() const;
};

}  // namespace stride
