#pragma once

#include "stride/config.hpp"
#include "stride/fitting.hpp"
#include "stride/scene.hpp"

#include <filesystem>
#include <random>
#include <vector>

namespace stride {

/// Independent stream seed for (run seed, stage, item); SplitMix64 mixing.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);

/// A captured clip in patch-local coordinates: placed by (center, yaw) on
/// a source terrain, walking path centered on the origin, source height at the
/// origin subtracted.
struct Clip {
  MotionSegment motion;
  int style = 0;
  int source = 0;
  Vec2 center = Vec2::Zero();
  double yaw = 0.0;
};

/// Held-out evaluation pair: a reference clip in world coordinates on a
/// held-out terrain, its first k frames as the seed and its frame N-1 root
/// and facing as the goal.
struct HeldOutCase {
  int terrain = 0;
  int style = 0;
  MotionSegment reference;
  GoalFrame goal;

  MotionSegment seed() const;
};

struct DataSet {
  std::vector<HeightField> sources;
  std::vector<TerrainPatch> bank;
  std::vector<Clip> clips;
  std::vector<HeightField> heldout_terrains;
  std::vector<HeldOutCase> heldout;
};

/// Procedural data: source terrains cycling flat, slope, stairs and fractal;
/// clips_per_style clips per style; a bank holding each clip's own patch
/// plus random extra patches; held-out terrains and cases. Deterministic in
/// config.seed regardless of the job count.
DataSet gen_data(const PipelineConfig& config);

/// Directory layout: sources/, bank/ (+ index.json), clips/ (+ index.json),
/// heldout/ (+ index.json). Throws FormatError when reading a bad layout.
void write_dataset(const std::filesystem::path& dir, const DataSet& data);
DataSet read_dataset(const std::filesystem::path& dir);
std::vector<TerrainPatch> read_bank(const std::filesystem::path& dir);
std::vector<Clip> read_clips(const std::filesystem::path& dir);

/// Top fits of one clip with their offset-shifted, contact-refined patches.
struct ClipFit {
  int clip = 0;
  std::vector<FitResult> results;
  std::vector<TerrainPatch> refined;
};

std::vector<ClipFit> fit_clips(const std::vector<Clip>& clips, const std::vector<TerrainPatch>& bank,
                               const PipelineConfig& config);
/// index.json for reading back, report.jsonl with one record per clip, and
/// clip_NNNN_rK.hgt refined patches.
void write_fits(const std::filesystem::path& dir, const std::vector<ClipFit>& fits);
std::vector<ClipFit> read_fits(const std::filesystem::path& dir);

using FloatRows = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// One canonical training window with its scene rows and per-frame styles.
struct TrainingSample {
  int clip = 0;
  int rank = 0;  // fit rank of the terrain
  bool mirrored = false;
  int window = 0;  // first clip frame
  CanonicalTransform transform;
  FloatRows features;  // N x 139
  FloatRows scene;     // N x 144
  std::vector<int> styles;

  FeatureMatrix feature_matrix() const { return features.cast<double>(); }
};

/// Windows of N frames at `window_stride` from every clip, each paired with
/// every refined terrain of the clip and with the mirrored clip on the
/// mirrored terrain. The goal of a window is its final root and facing.
/// Windows whose scene lattice leaves the terrain are dropped.
std::vector<TrainingSample> build_training_set(const std::vector<Clip>& clips,
                                               const std::vector<ClipFit>& fits,
                                               const PipelineConfig& config);

/// Shard: "SHD1", u32 version, u64 record count, then u32-length-prefixed
/// records {clip, rank, mirrored, window, transform, frames, features,
/// scene, styles}; little-endian, float32 payloads.
inline constexpr std::uint32_t kShardVersion = 1;
void write_shard(const std::filesystem::path& path, const std::vector<TrainingSample>& samples);
std::vector<TrainingSample> read_shard(const std::filesystem::path& path);

/// Writes shard_000.bin, shard_001.bin, ... with at most `per_shard` records.
void write_shards(const std::filesystem::path& dir, const std::vector<TrainingSample>& samples,
                  int per_shard = 512);
std::vector<TrainingSample> read_shards(const std::filesystem::path& dir);

}  // namespace stride
