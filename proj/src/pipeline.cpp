#include "stride/pipeline.hpp"

#include "stride/dataset.hpp"
#include "stride/io_util.hpp"
#include "stride/motion_io.hpp"
#include "stride/parallel.hpp"
#include "stride/train.hpp"

#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

namespace stride {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kEvalStream = 201;
constexpr std::uint64_t kDiversityStream = 202;
constexpr int kDiversityCases = 5;
constexpr int kDiversitySamples = 3;

std::vector<std::string> content_lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    if (line.find_first_not_of(" \t\r") != std::string::npos) out.push_back(line);
  }
  return out;
}

class StageClock {
 public:
  StageClock(std::ostream* log, const char* stage) : log_(log), stage_(stage) {}
  ~StageClock() {
    if (!log_) return;
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    *log_ << "[" << stage_ << "] done in " << s << " s\n" << std::flush;
  }
  StageClock(const StageClock&) = delete;
  StageClock& operator=(const StageClock&) = delete;

 private:
  std::ostream* log_;
  const char* stage_;
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string case_name(int i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "case_%04d", i);
  return buf;
}

nlohmann::ordered_json report_json(const EvalReport& r) {
  return {{"penetration_cm", r.penetration_cm}, {"contact_dist_cm", r.contact_dist_cm},
          {"goal_pos_cm", r.goal_pos_cm},       {"goal_rot_rad", r.goal_rot_rad},
          {"foot_skate_cm", r.foot_skate_cm},   {"diversity", r.diversity},
          {"sequences", r.sequences.size()}};
}

}  // namespace

std::vector<GoalSpec> parse_goals(const std::string& text) {
  std::vector<GoalSpec> out;
  for (const auto& line : content_lines(text)) {
    std::istringstream in(line);
    double x, y, z, fx, fz;
    int style;
    std::string extra;
    if (!(in >> x >> y >> z >> fx >> fz >> style) || (in >> extra)) {
      throw InvalidParams("goal line must be 'x y z fx fz style_id': " + line);
    }
    const Vec2 f(fx, fz);
    if (!(f.norm() > 1e-9)) throw InvalidParams("goal facing must be non-zero: " + line);
    if (style < 0 || style >= static_cast<int>(style_names().size())) throw InvalidParams("unknown style id: " + line);
    GoalSpec g{{Vec3(x, y, z), f.normalized()}, style};
    g.goal.validate();
    out.push_back(g);
  }
  if (out.empty()) throw InvalidParams("goals file lists no goals");
  return out;
}

std::vector<GoalSpec> read_goals(const fs::path& path) { return parse_goals(read_text_file(path)); }

std::string goals_to_text(const std::vector<GoalSpec>& goals) {
  std::ostringstream out;
  out.precision(17);
  for (const auto& g : goals) {
    out << g.goal.position.x() << ' ' << g.goal.position.y() << ' ' << g.goal.position.z() << ' '
        << g.goal.facing.x() << ' ' << g.goal.facing.y() << ' ' << g.style << '\n';
  }
  return out.str();
}

std::vector<StyleChange> parse_styles(const std::string& text) {
  std::vector<StyleChange> out;
  for (const auto& line : content_lines(text)) {
    std::istringstream in(line);
    StyleChange c;
    std::string extra;
    if (!(in >> c.frame_start >> c.style) || (in >> extra)) {
      throw InvalidParams("style line must be 'frame_start style_id': " + line);
    }
    if (c.frame_start < 0 || (!out.empty() && c.frame_start <= out.back().frame_start)) {
      throw InvalidParams("style change points must be non-negative and ascending");
    }
    if (c.style < 0 || c.style >= static_cast<int>(style_names().size())) throw InvalidParams("unknown style id: " + line);
    out.push_back(c);
  }
  return out;
}

std::vector<StyleChange> read_styles(const fs::path& path) { return parse_styles(read_text_file(path)); }

MotionSegment rest_seed(const HeightField& terrain, const Vec2& xz, double yaw) {
  const Vec3 ground(xz.x(), terrain.height_at(xz.x(), xz.y()), xz.y());
  return rest_pose_segment(default_skeleton(), kSeedFrames, ground, yaw);
}

void stage_gen_data(const PipelineConfig& config, std::ostream* log) {
  run_stage("gen-data", [&] {
    StageClock clock(log, "gen-data");
    const PipelinePaths paths{config.work_dir};
    fs::create_directories(paths.root);
    write_text_file(paths.config(), config.to_text());
    const DataSet data = gen_data(config);
    if (fs::exists(paths.data())) fs::remove_all(paths.data());
    write_dataset(paths.data(), data);
    if (log) {
      *log << "[gen-data] " << data.sources.size() << " source terrains, " << data.clips.size() << " clips, "
           << data.bank.size() << " bank patches, " << data.heldout.size() << " held-out cases\n";
    }
  });
}

void stage_fit(const PipelineConfig& config, std::ostream* log) {
  run_stage("fit", [&] {
    StageClock clock(log, "fit");
    const PipelinePaths paths{config.work_dir};
    const DataSet data = read_dataset(paths.data());
    const std::vector<ClipFit> fits = fit_clips(data.clips, data.bank, config);
    if (fs::exists(paths.fits())) fs::remove_all(paths.fits());
    write_fits(paths.fits(), fits);
    if (log) {
      int own = 0;
      for (const auto& f : fits) own += !f.results.empty() && f.results.front().patch_id == f.clip;
      *log << "[fit] " << fits.size() << " clips fitted; own patch ranked first for " << own << "\n";
    }
  });
}

void stage_build_train(const PipelineConfig& config, std::ostream* log) {
  run_stage("build-train", [&] {
    StageClock clock(log, "build-train");
    const PipelinePaths paths{config.work_dir};
    const DataSet data = read_dataset(paths.data());
    const std::vector<ClipFit> fits = read_fits(paths.fits());
    const std::vector<TrainingSample> samples = build_training_set(data.clips, fits, config);
    if (samples.empty()) throw InvalidParams("no training windows survived");
    write_shards(paths.shards(), samples);
    if (log) *log << "[build-train] " << samples.size() << " training samples\n";
  });
}

void stage_train(const PipelineConfig& config, std::ostream* log) {
  run_stage("train", [&] {
    StageClock clock(log, "train");
    const PipelinePaths paths{config.work_dir};
    const std::vector<TrainingSample> samples = read_shards(paths.shards());
    const Normalizer normalizer = fit_normalizer(samples);
    fs::create_directories(paths.checkpoint().parent_path());
    std::ofstream train_log(paths.train_log());
    MotionTransformer model = train_denoiser(samples, normalizer, config, [&](const TrainStats& s) {
      nlohmann::ordered_json j{{"step", s.step},         {"loss", s.loss},
                               {"feature", s.feature_term}, {"position", s.position_term},
                               {"grad_norm", s.grad_norm}, {"lr", s.lr}};
      train_log << j.dump() << '\n' << std::flush;
      if (log) *log << "[train] " << j.dump() << '\n' << std::flush;
    });
    save_checkpoint(paths.checkpoint(), model, Checkpoint{config.model, normalizer, config.train.steps});
    if (log) *log << "[train] " << model.parameter_count() << " parameters\n";
  });
}

EvalSummary stage_eval(const PipelineConfig& config, std::ostream* log) {
  return run_stage("eval", [&] {
    StageClock clock(log, "eval");
    const PipelinePaths paths{config.work_dir};
    const DataSet data = read_dataset(paths.data());
    const TransformerDenoiser denoiser = load_checkpoint(paths.checkpoint());
    const NoiseSchedule schedule(config.diffusion.steps);
    const Skeleton& skel = default_skeleton();
    const int cases = static_cast<int>(data.heldout.size());

    RolloutOptions base;
    base.max_segments = config.sample.max_segments;
    base.goal_reach_eps = config.sample.goal_reach_eps;
    base.refresh_scene = config.sample.refresh_scene;
    RolloutOptions guided_opt = base;
    guided_opt.guidance = config.guidance;

    std::array<std::vector<SequenceMetrics>, 2> metrics;
    std::array<std::vector<MotionSegment>, 2> motions;
    for (int v = 0; v < 2; ++v) {
      metrics[v].resize(cases);
      motions[v].resize(cases);
    }
    parallel_for(cases, config.jobs, [&](int i) {
      const HeldOutCase& c = data.heldout[i];
      const HeightField& terrain = data.heldout_terrains[c.terrain];
      for (int v = 0; v < 2; ++v) {
        std::mt19937_64 rng(derive_seed(config.seed, kEvalStream, i));
        const RolloutResult r = autoregressive_rollout(denoiser, skel, terrain, {c.goal}, {{0, c.style}}, c.seed(),
                                                       schedule, v ? guided_opt : base, rng);
        motions[v][i] = r.motion;
        metrics[v][i] = evaluate_sequence(case_name(i), r.motion, skel, terrain, c.goal);
      }
    });

    // Diversity: several samples of the same condition on the first cases.
    std::array<double, 2> div{0.0, 0.0};
    const int dcases = std::min(kDiversityCases, cases);
    for (int v = 0; v < 2; ++v) {
      std::vector<double> per_case(dcases);
      parallel_for(dcases, config.jobs, [&](int i) {
        const HeldOutCase& c = data.heldout[i];
        std::vector<MotionSegment> samples;
        RolloutOptions opt = v ? guided_opt : base;
        opt.max_segments = 1;
        for (int k = 0; k < kDiversitySamples; ++k) {
          std::mt19937_64 rng(derive_seed(config.seed, kDiversityStream, i * kDiversitySamples + k));
          samples.push_back(autoregressive_rollout(denoiser, skel, data.heldout_terrains[c.terrain], {c.goal},
                                                   {{0, c.style}}, c.seed(), schedule, opt, rng)
                                .motion);
        }
        per_case[i] = diversity(samples, skel);
      });
      for (double d : per_case) div[v] += d / std::max(1, dcases);
    }

    EvalSummary out{aggregate_report(metrics[0], div[0]), aggregate_report(metrics[1], div[1])};
    const char* names[2] = {"unguided", "guided"};
    for (int v = 0; v < 2; ++v) {
      const fs::path dir = paths.eval() / names[v];
      fs::create_directories(dir);
      for (int i = 0; i < cases; ++i) {
        MotionDocument doc;
        doc.segment = motions[v][i];
        write_motion(dir / (case_name(i) + ".json"), doc);
      }
      write_text_file(paths.eval() / (std::string("report_") + names[v] + ".jsonl"),
                      report_to_jsonl(v ? out.guided : out.unguided));
    }
    nlohmann::ordered_json summary;
    summary["format"] = "stride-eval-summary";
    summary["version"] = 1;
    summary["unguided"] = report_json(out.unguided);
    summary["guided"] = report_json(out.guided);
    write_text_file(paths.eval() / "summary.json", summary.dump(2) + "\n");
    if (log) *log << "[eval] " << summary.dump() << "\n";
    return out;
  });
}

EvalSummary run_pipeline(const PipelineConfig& config, std::ostream* log) {
  run_stage("config", [&] { config.validate(); });
  stage_gen_data(config, log);
  stage_fit(config, log);
  stage_build_train(config, log);
  stage_train(config, log);
  return stage_eval(config, log);
}

}  // namespace stride
