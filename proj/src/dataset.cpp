#include "stride/dataset.hpp"

#include "stride/gait.hpp"
#include "stride/io_util.hpp"
#include "stride/kinematics.hpp"
#include "stride/mirror.hpp"
#include "stride/motion_io.hpp"
#include "stride/parallel.hpp"

#include <json.hpp>

#include <cstdio>

namespace stride {

namespace fs = std::filesystem;
using nlohmann::json;

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(seed) ^ stream) ^ index);
}

namespace {

enum Stream : std::uint64_t {
  kSourceStream = 1,
  kBankStream,
  kClipStream,
  kHeldOutTerrainStream,
  kHeldOutCaseStream,
};

constexpr double kTerrainSide = 8.0;

HeightField make_terrain(std::uint64_t seed, int index, const DataConfig& cfg) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  TerrainParams p;
  p.origin = Vec2::Constant(-0.5 * kTerrainSide);
  p.rows = p.cols = static_cast<int>(std::lround(kTerrainSide / p.cell_size)) + 1;
  const auto kind = static_cast<TerrainKind>(index % 4);
  switch (kind) {
    case TerrainKind::kFlat:
      break;
    case TerrainKind::kSlope:
      p.slope_deg = cfg.max_slope_deg * (0.3 + 0.7 * u(rng));
      p.slope_dir = 2.0 * kPi * u(rng);
      break;
    case TerrainKind::kStairs:
      p.stair_rise = cfg.max_stair_rise * (0.4 + 0.6 * u(rng));
      p.stair_run = 0.3 + 0.15 * u(rng);
      p.stair_dir = u(rng) < 0.5 ? 0.0 : 1.0;
      break;
    case TerrainKind::kFractal:
      p.amplitude = cfg.fractal_amplitude * (0.5 + 0.5 * u(rng));
      p.wavelength = 1.5 + 1.5 * u(rng);
      break;
  }
  return generate_terrain(seed, kind, p);
}

struct Placement {
  GaitParams params;
  GaitPath path;
  Vec2 center;
  double yaw = 0.0;
};

Placement random_placement(std::mt19937_64& rng, int style, double half_range, const DataConfig& cfg) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto sym = [&](double a) { return a * (2.0 * u(rng) - 1.0); };
  Placement p;
  p.params = gait_params(style);
  p.params.speed *= 1.0 + sym(cfg.speed_jitter);
  p.params.cycle *= 1.0 + sym(0.1);
  p.center = Vec2(sym(half_range), sym(half_range));
  p.yaw = wrap_angle(2.0 * kPi * u(rng));
  p.path.yaw = p.yaw;
  p.path.curvature = sym(cfg.max_curvature);
  p.path.phase = u(rng);
  p.path.start = centered_start(p.params, p.path, cfg.clip_frames, 30.0, p.center);
  return p;
}

std::string indexed(const char* stem, int i, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s_%04d%s", stem, i, ext);
  return buf;
}

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }
Vec3 vec_from(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }

template <typename Fn>
auto with_format_errors(const fs::path& where, Fn&& fn) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw FormatError(where.string() + ": " + e.what());
  }
}

}  // namespace

MotionSegment HeldOutCase::seed() const { return reference.slice(0, kSeedFrames); }

DataSet gen_data(const PipelineConfig& config) {
  config.validate();
  const DataConfig& cfg = config.data;
  DataSet data;
  data.sources.resize(cfg.source_terrains);
  parallel_for(cfg.source_terrains, config.jobs, [&](int i) {
    data.sources[i] = make_terrain(derive_seed(config.seed, kSourceStream, i), i, cfg);
  });

  // Patch footprints (radius 2 sqrt 2) stay inside the 8 m terrain for
  // centers within +-1.1 m.
  const double patch_range = 1.1;
  const std::vector<int> styles = config.style_ids();
  const int clip_count = cfg.clips_per_style * static_cast<int>(styles.size());
  data.clips.resize(clip_count);
  parallel_for(clip_count, config.jobs, [&](int i) {
    std::mt19937_64 rng(derive_seed(config.seed, kClipStream, i));
    Clip& clip = data.clips[i];
    clip.style = styles[i % styles.size()];
    clip.source = static_cast<int>(rng() % cfg.source_terrains);
    const Placement p = random_placement(rng, clip.style, patch_range, cfg);
    const HeightField& field = data.sources[clip.source];
    const MotionSegment world = synthesize_gait(default_skeleton(), field, p.params, p.path, cfg.clip_frames);
    const Vec3 anchor(p.center.x(), field.height_at(p.center.x(), p.center.y()), p.center.y());
    clip.motion = apply_transform(world, CanonicalTransform{p.yaw, anchor});
    clip.center = p.center;
    clip.yaw = p.yaw;
  });

  data.bank.resize(clip_count + cfg.bank_extra_patches);
  parallel_for(static_cast<int>(data.bank.size()), config.jobs, [&](int i) {
    int source = 0;
    Vec2 center;
    double yaw = 0.0;
    if (i < clip_count) {
      source = data.clips[i].source;
      center = data.clips[i].center;
      yaw = data.clips[i].yaw;
    } else {
      std::mt19937_64 rng(derive_seed(config.seed, kBankStream, i));
      std::uniform_real_distribution<double> u(-1.0, 1.0);
      source = static_cast<int>(rng() % cfg.source_terrains);
      center = Vec2(patch_range * u(rng), patch_range * u(rng));
      yaw = kPi * u(rng);
    }
    data.bank[i] = sample_patch(data.sources[source], center, yaw);
    data.bank[i].id = i;
    data.bank[i].source_id = source;
  });

  data.heldout_terrains.resize(cfg.heldout_terrains);
  parallel_for(cfg.heldout_terrains, config.jobs, [&](int i) {
    data.heldout_terrains[i] = make_terrain(derive_seed(config.seed, kHeldOutTerrainStream, i), i, cfg);
  });
  data.heldout.resize(cfg.heldout_cases);
  parallel_for(cfg.heldout_cases, config.jobs, [&](int i) {
    std::mt19937_64 rng(derive_seed(config.seed, kHeldOutCaseStream, i));
    HeldOutCase& c = data.heldout[i];
    c.terrain = i % cfg.heldout_terrains;
    c.style = styles[(i / cfg.heldout_terrains + i) % styles.size()];
    const Placement p = random_placement(rng, c.style, 1.8, cfg);
    c.reference =
        synthesize_gait(default_skeleton(), data.heldout_terrains[c.terrain], p.params, p.path, cfg.clip_frames);
    const int last = kSegmentFrames - 1;
    c.goal = GoalFrame::from_yaw(c.reference.root[last],
                                 heading_yaw(sixd_to_matrix(c.reference.rotation(last, kPelvis))));
  });
  return data;
}

void write_dataset(const fs::path& dir, const DataSet& data) {
  for (const char* sub : {"sources", "bank", "clips", "heldout"}) fs::create_directories(dir / sub);
  for (size_t i = 0; i < data.sources.size(); ++i) {
    write_hgt(dir / "sources" / indexed("source", static_cast<int>(i), ".hgt"), data.sources[i]);
  }
  json bank = json::array();
  for (const auto& p : data.bank) {
    write_hgt(dir / "bank" / indexed("patch", p.id, ".hgt"), p.field);
    bank.push_back({{"id", p.id}, {"source_id", p.source_id}, {"yaw", p.yaw}});
  }
  write_text_file(dir / "bank" / "index.json", json{{"format", "stride-bank"}, {"version", 1}, {"patches", bank}}.dump(1));

  json clips = json::array();
  for (size_t i = 0; i < data.clips.size(); ++i) {
    const Clip& c = data.clips[i];
    MotionDocument doc;
    doc.segment = c.motion;
    doc.styles.assign(c.motion.frame_count(), c.style);
    write_motion(dir / "clips" / indexed("clip", static_cast<int>(i), ".json"), doc);
    clips.push_back({{"style", c.style}, {"source", c.source}, {"center", {c.center.x(), c.center.y()}}, {"yaw", c.yaw}});
  }
  write_text_file(dir / "clips" / "index.json", json{{"format", "stride-clips"}, {"version", 1}, {"clips", clips}}.dump(1));

  for (size_t i = 0; i < data.heldout_terrains.size(); ++i) {
    write_hgt(dir / "heldout" / indexed("terrain", static_cast<int>(i), ".hgt"), data.heldout_terrains[i]);
  }
  json cases = json::array();
  for (size_t i = 0; i < data.heldout.size(); ++i) {
    const HeldOutCase& c = data.heldout[i];
    MotionDocument doc;
    doc.segment = c.reference;
    doc.styles.assign(c.reference.frame_count(), c.style);
    write_motion(dir / "heldout" / indexed("case", static_cast<int>(i), ".json"), doc);
    cases.push_back({{"terrain", c.terrain},
                     {"style", c.style},
                     {"goal", {{"position", vec_json(c.goal.position)}, {"facing", {c.goal.facing.x(), c.goal.facing.y()}}}}});
  }
  write_text_file(dir / "heldout" / "index.json",
                  json{{"format", "stride-heldout"}, {"version", 1}, {"terrains", data.heldout_terrains.size()}, {"cases", cases}}.dump(1));
}

std::vector<TerrainPatch> read_bank(const fs::path& dir) {
  return with_format_errors(dir, [&] {
    std::vector<TerrainPatch> bank;
    const json index = json::parse(read_text_file(dir / "index.json"));
    for (const auto& e : index.at("patches")) {
      TerrainPatch p;
      p.id = e.at("id");
      p.source_id = e.at("source_id");
      p.yaw = e.at("yaw");
      p.field = read_hgt(dir / indexed("patch", p.id, ".hgt"));
      if (p.id != static_cast<int>(bank.size())) throw FormatError("bank ids must be dense");
      bank.push_back(std::move(p));
    }
    return bank;
  });
}

std::vector<Clip> read_clips(const fs::path& dir) {
  return with_format_errors(dir, [&] {
    std::vector<Clip> clips;
    const json index = json::parse(read_text_file(dir / "index.json"));
    int i = 0;
    for (const auto& e : index.at("clips")) {
      Clip c;
      c.motion = read_motion(dir / indexed("clip", i++, ".json")).segment;
      c.style = e.at("style");
      c.source = e.at("source");
      c.center = Vec2(e.at("center").at(0).get<double>(), e.at("center").at(1).get<double>());
      c.yaw = e.at("yaw");
      clips.push_back(std::move(c));
    }
    return clips;
  });
}

DataSet read_dataset(const fs::path& dir) {
  DataSet data;
  for (const auto& p : list_files(dir / "sources", ".hgt")) data.sources.push_back(read_hgt(p));
  data.bank = read_bank(dir / "bank");
  data.clips = read_clips(dir / "clips");
  with_format_errors(dir / "heldout", [&] {
    const json index = json::parse(read_text_file(dir / "heldout" / "index.json"));
    const int terrains = index.at("terrains");
    for (int i = 0; i < terrains; ++i) {
      data.heldout_terrains.push_back(read_hgt(dir / "heldout" / indexed("terrain", i, ".hgt")));
    }
    int i = 0;
    for (const auto& e : index.at("cases")) {
      HeldOutCase c;
      c.reference = read_motion(dir / "heldout" / indexed("case", i++, ".json")).segment;
      c.terrain = e.at("terrain");
      c.style = e.at("style");
      c.goal.position = vec_from(e.at("goal").at("position"));
      c.goal.facing = Vec2(e.at("goal").at("facing").at(0).get<double>(), e.at("goal").at("facing").at(1).get<double>());
      if (c.terrain < 0 || c.terrain >= terrains) throw FormatError("held-out case refers to a missing terrain");
      data.heldout.push_back(std::move(c));
    }
    return 0;
  });
  return data;
}

std::vector<ClipFit> fit_clips(const std::vector<Clip>& clips, const std::vector<TerrainPatch>& bank,
                               const PipelineConfig& config) {
  std::vector<ClipFit> fits(clips.size());
  const Skeleton& skel = default_skeleton();
  // Patches are searched serially per clip; clips run in parallel.
  parallel_for(static_cast<int>(clips.size()), config.jobs, [&](int i) {
    const Clip& clip = clips[i];
    const JointPositions pos = forward_kinematics(skel, clip.motion);
    FitOptions opt;
    opt.jump_threshold = config.fit.jump_threshold;
    opt.jump_gait = is_jump_style(clip.style);
    ClipFit& f = fits[i];
    f.clip = i;
    f.results = patch_search(skel, clip.motion, pos, bank, opt, config.fit.top, 1);
    const auto constraints = contact_constraints(skel, clip.motion, pos);
    for (const FitResult& r : f.results) {
      TerrainPatch refined = rbf_refine(shift_patch(bank[r.patch_id], r.vertical_offset), constraints);
      f.refined.push_back(std::move(refined));
    }
  });
  return fits;
}

void write_fits(const fs::path& dir, const std::vector<ClipFit>& fits) {
  fs::create_directories(dir);
  json all = json::array();
  std::string report = json{{"format", "stride-fit-report"}, {"version", 1}}.dump() + "\n";
  for (const ClipFit& f : fits) {
    json results = json::array();
    for (size_t k = 0; k < f.results.size(); ++k) {
      const FitResult& r = f.results[k];
      results.push_back({{"patch_id", r.patch_id},
                         {"vertical_offset", r.vertical_offset},
                         {"error_total", r.error_total},
                         {"error_contact", r.error_contact},
                         {"error_penetration", r.error_penetration},
                         {"error_jump", r.error_jump}});
      char name[64];
      std::snprintf(name, sizeof(name), "clip_%04d_r%zu.hgt", f.clip, k);
      write_hgt(dir / name, f.refined[k].field);
    }
    all.push_back({{"clip", f.clip}, {"results", results}});
    report += json{{"clip", f.clip}, {"results", results}}.dump() + "\n";
  }
  write_text_file(dir / "report.jsonl", report);
  write_text_file(dir / "index.json", json{{"format", "stride-fits"}, {"version", 1}, {"fits", all}}.dump(1));
}

std::vector<ClipFit> read_fits(const fs::path& dir) {
  return with_format_errors(dir, [&] {
    std::vector<ClipFit> fits;
    const json index = json::parse(read_text_file(dir / "index.json"));
    for (const auto& e : index.at("fits")) {
      ClipFit f;
      f.clip = e.at("clip");
      for (const auto& r : e.at("results")) {
        FitResult fr;
        fr.patch_id = r.at("patch_id");
        fr.vertical_offset = r.at("vertical_offset");
        fr.error_total = r.at("error_total");
        fr.error_contact = r.at("error_contact");
        fr.error_penetration = r.at("error_penetration");
        fr.error_jump = r.at("error_jump");
        char name[64];
        std::snprintf(name, sizeof(name), "clip_%04d_r%zu.hgt", f.clip, f.results.size());
        TerrainPatch p;
        p.field = read_hgt(dir / name);
        p.id = fr.patch_id;
        f.results.push_back(fr);
        f.refined.push_back(std::move(p));
      }
      fits.push_back(std::move(f));
    }
    return fits;
  });
}

std::vector<TrainingSample> build_training_set(const std::vector<Clip>& clips,
                                               const std::vector<ClipFit>& fits,
                                               const PipelineConfig& config) {
  const Skeleton& skel = default_skeleton();
  std::vector<std::vector<TrainingSample>> per_fit(fits.size());
  parallel_for(static_cast<int>(fits.size()), config.jobs, [&](int fi) {
    const ClipFit& f = fits[fi];
    if (f.clip < 0 || f.clip >= static_cast<int>(clips.size())) throw InvalidParams("fit refers to a missing clip");
    const Clip& clip = clips[f.clip];
    for (size_t rank = 0; rank < f.refined.size(); ++rank) {
      for (int m = 0; m < 2; ++m) {
        const MotionSegment motion = m ? mirror_motion(clip.motion, skel) : clip.motion;
        const HeightField terrain = m ? f.refined[rank].field.mirrored_x() : f.refined[rank].field;
        for (int start = 0; start + kSegmentFrames <= motion.frame_count(); start += config.diffusion.window_stride) {
          const MotionSegment window = motion.slice(start, kSegmentFrames);
          const int last = kSegmentFrames - 1;
          const GoalFrame goal = GoalFrame::from_yaw(
              window.root[last], heading_yaw(sixd_to_matrix(window.rotation(last, kPelvis))));
          TrainingSample s;
          const MotionSegment canonical = canonicalize_motion(window, goal, &s.transform);
          SceneEmbedding scene;
          try {
            scene = sample_scene_embedding(TerrainView(terrain, s.transform), canonical);
          } catch (const OutOfBounds&) {
            continue;
          }
          s.clip = f.clip;
          s.rank = static_cast<int>(rank);
          s.mirrored = m == 1;
          s.window = start;
          s.features = to_features(canonical).cast<float>();
          s.scene.resize(kSegmentFrames, kSceneGridSize);
          for (int i = 0; i < kSegmentFrames; ++i) {
            for (int k = 0; k < kSceneGridSize; ++k) s.scene(i, k) = static_cast<float>(scene.grids[i][k]);
          }
          s.styles.assign(kSegmentFrames, clip.style);
          per_fit[fi].push_back(std::move(s));
        }
      }
    }
  });
  std::vector<TrainingSample> out;
  for (auto& v : per_fit) {
    for (auto& s : v) out.push_back(std::move(s));
  }
  return out;
}

namespace {

constexpr char kShardMagic[4] = {'S', 'H', 'D', '1'};

void put_sample(ByteWriter& w, const TrainingSample& s) {
  ByteWriter r;
  r.put<std::int32_t>(s.clip);
  r.put<std::int32_t>(s.rank);
  r.put<std::uint8_t>(s.mirrored ? 1 : 0);
  r.put<std::int32_t>(s.window);
  r.put<double>(s.transform.yaw);
  for (int k = 0; k < 3; ++k) r.put<double>(s.transform.translation(k));
  const auto frames = static_cast<std::int32_t>(s.features.rows());
  r.put<std::int32_t>(frames);
  r.put_bytes(s.features.data(), sizeof(float) * s.features.size());
  r.put_bytes(s.scene.data(), sizeof(float) * s.scene.size());
  for (int v : s.styles) r.put<std::int32_t>(v);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(r.bytes().size()));
  w.put_bytes(r.bytes().data(), r.bytes().size());
}

TrainingSample get_sample(ByteReader& in) {
  const auto length = in.get<std::uint32_t>();
  if (length > in.remaining()) throw FormatError("shard record overruns the file");
  const size_t end = in.position() + length;
  TrainingSample s;
  s.clip = in.get<std::int32_t>();
  s.rank = in.get<std::int32_t>();
  s.mirrored = in.get<std::uint8_t>() != 0;
  s.window = in.get<std::int32_t>();
  s.transform.yaw = in.get<double>();
  for (int k = 0; k < 3; ++k) s.transform.translation(k) = in.get<double>();
  const auto frames = in.get<std::int32_t>();
  if (frames <= 0 || frames > 4096) throw FormatError("bad frame count in shard record");
  s.features.resize(frames, kFeatureWidth);
  s.scene.resize(frames, kSceneGridSize);
  in.get_bytes(s.features.data(), sizeof(float) * s.features.size());
  in.get_bytes(s.scene.data(), sizeof(float) * s.scene.size());
  s.styles.resize(frames);
  for (int& v : s.styles) v = in.get<std::int32_t>();
  if (in.position() != end) throw FormatError("shard record length mismatch");
  return s;
}

}  // namespace

void write_shard(const fs::path& path, const std::vector<TrainingSample>& samples) {
  ByteWriter w;
  w.put_bytes(kShardMagic, 4);
  w.put<std::uint32_t>(kShardVersion);
  w.put<std::uint64_t>(samples.size());
  for (const auto& s : samples) put_sample(w, s);
  write_binary_file(path, w.bytes());
}

std::vector<TrainingSample> read_shard(const fs::path& path) {
  const std::vector<char> bytes = read_binary_file(path);
  ByteReader in(bytes);
  char magic[4];
  in.get_bytes(magic, 4);
  if (std::memcmp(magic, kShardMagic, 4) != 0) throw FormatError(path.string() + ": not a training shard");
  if (in.get<std::uint32_t>() != kShardVersion) throw FormatError(path.string() + ": unsupported shard version");
  const auto count = in.get<std::uint64_t>();
  std::vector<TrainingSample> out;
  for (std::uint64_t i = 0; i < count; ++i) out.push_back(get_sample(in));
  if (in.remaining() != 0) throw FormatError(path.string() + ": trailing bytes");
  return out;
}

void write_shards(const fs::path& dir, const std::vector<TrainingSample>& samples, int per_shard) {
  fs::create_directories(dir);
  for (const auto& old : list_files(dir, ".bin")) fs::remove(old);
  for (size_t begin = 0, k = 0; begin < samples.size(); begin += per_shard, ++k) {
    const size_t end = std::min(samples.size(), begin + per_shard);
    write_shard(dir / indexed("shard", static_cast<int>(k), ".bin"),
                std::vector<TrainingSample>(samples.begin() + begin, samples.begin() + end));
  }
}

std::vector<TrainingSample> read_shards(const fs::path& dir) {
  std::vector<TrainingSample> out;
  for (const auto& p : list_files(dir, ".bin")) {
    auto part = read_shard(p);
    for (auto& s : part) out.push_back(std::move(s));
  }
  return out;
}

}  // namespace stride
