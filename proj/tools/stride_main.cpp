// stride: procedural data, terrain fitting, training, sampling and evaluation.

#include "stride/dataset.hpp"
#include "stride/io_util.hpp"
#include "stride/motion_io.hpp"
#include "stride/pipeline.hpp"
#include "stride/train.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using namespace stride;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

struct Globals {
  std::string config_path;
  std::string preset = "full";
  std::string work;
  int jobs = -1;

  PipelineConfig config() const {
    PipelineConfig c = config_path.empty() ? (preset == "smoke" ? PipelineConfig::smoke() : PipelineConfig{})
                                           : PipelineConfig::load(config_path);
    if (!work.empty()) c.work_dir = work;
    if (jobs >= 0) c.jobs = jobs;
    c.validate();
    return c;
  }
};

MotionSegment seed_from_args(const std::string& seed_motion, const std::vector<double>& start,
                             const HeightField& terrain) {
  if (!seed_motion.empty()) {
    const MotionSegment m = read_motion(seed_motion).segment;
    if (m.frame_count() < kSeedFrames) throw InvalidParams("seed motion needs at least 10 frames");
    return m.slice(m.frame_count() - kSeedFrames, kSeedFrames);
  }
  const std::vector<double> s = start.empty() ? std::vector<double>{0.0, 0.0, 0.0} : start;
  return rest_seed(terrain, Vec2(s[0], s[1]), s[2]);
}

// Goals for each motion: one shared goal, or one per motion in order.
const GoalFrame& goal_for(const std::vector<GoalSpec>& goals, size_t i) {
  return goals.size() == 1 ? goals[0].goal : goals.at(i).goal;
}

void print_summary(const EvalSummary& s) {
  const std::pair<const char*, const EvalReport*> rows[] = {{"unguided:", &s.unguided}, {"guided:  ", &s.guided}};
  for (const auto& [name, r] : rows) {
    std::cout << name << " penetration " << r->penetration_cm << " cm, skate "
              << r->foot_skate_cm << " cm, goal " << r->goal_pos_cm << " cm / " << r->goal_rot_rad << " rad\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stride: terrain-aware motion synthesis with guided diffusion"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "Config file (key = value with [sections])")->check(CLI::ExistingFile);
  app.add_option("--preset", g.preset, "Built-in config when --config is absent")
      ->check(CLI::IsMember({"full", "smoke"}));
  app.add_option("--work", g.work, "Work directory (overrides the config)");
  app.add_option("--jobs", g.jobs, "Worker threads; 0 = all cores")->check(CLI::NonNegativeNumber);

  std::function<void()> action;
  std::ostream* log = &std::cerr;

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "Generate source terrains, clips, bank and held-out cases");
  std::string gen_out;
  gen->add_option("--out", gen_out, "Dataset directory (default WORK/data)");
  gen->callback([&] {
    action = [&] {
      const PipelineConfig c = g.config();
      if (gen_out.empty()) return stage_gen_data(c, log);
      run_stage("gen-data", [&] {
        const DataSet data = gen_data(c);
        write_dataset(gen_out, data);
      });
    };
  });

  // fit
  auto* fit = app.add_subcommand("fit", "Fit clips onto bank patches and refine the best ones");
  std::string fit_motions, fit_bank, fit_out;
  std::optional<int> fit_top;
  std::optional<double> fit_jump;
  fit->add_option("--motions", fit_motions, "Clip directory (default WORK/data/clips)");
  fit->add_option("--bank", fit_bank, "Bank directory (default WORK/data/bank)");
  fit->add_option("--out", fit_out, "Fit directory (default WORK/fits)");
  fit->add_option("--top", fit_top, "Patches kept per clip");
  fit->add_option("--jump-threshold", fit_jump, "Jump clearance threshold in meters");
  fit->callback([&] {
    action = [&] {
      PipelineConfig c = g.config();
      if (fit_top) c.fit.top = *fit_top;
      if (fit_jump) c.fit.jump_threshold = *fit_jump;
      const PipelinePaths paths{c.work_dir};
      run_stage("fit", [&] {
        c.validate();
        const auto clips = read_clips(fit_motions.empty() ? paths.data() / "clips" : fs::path(fit_motions));
        const auto bank = read_bank(fit_bank.empty() ? paths.data() / "bank" : fs::path(fit_bank));
        const fs::path out = fit_out.empty() ? paths.fits() : fs::path(fit_out);
        write_fits(out, fit_clips(clips, bank, c));
        *log << "[fit] " << clips.size() << " clips against " << bank.size() << " patches -> " << out << "\n";
      });
    };
  });

  // build-train
  auto* build = app.add_subcommand("build-train", "Cut canonical training windows into shards");
  std::string build_motions, build_fits, build_out;
  build->add_option("--motions", build_motions, "Clip directory (default WORK/data/clips)");
  build->add_option("--fits", build_fits, "Fit directory (default WORK/fits)");
  build->add_option("--out", build_out, "Shard directory (default WORK/shards)");
  build->callback([&] {
    action = [&] {
      const PipelineConfig c = g.config();
      const PipelinePaths paths{c.work_dir};
      run_stage("build-train", [&] {
        const auto clips = read_clips(build_motions.empty() ? paths.data() / "clips" : fs::path(build_motions));
        const auto fits = read_fits(build_fits.empty() ? paths.fits() : fs::path(build_fits));
        const auto samples = build_training_set(clips, fits, c);
        if (samples.empty()) throw InvalidParams("no training windows survived");
        write_shards(build_out.empty() ? paths.shards() : fs::path(build_out), samples);
        *log << "[build-train] " << samples.size() << " training samples\n";
      });
    };
  });

  // train
  auto* train = app.add_subcommand("train", "Train the denoiser on shards");
  std::string train_data, train_out;
  std::optional<int> train_steps;
  train->add_option("--data", train_data, "Shard directory (default WORK/shards)");
  train->add_option("--steps", train_steps, "Optimizer steps");
  train->add_option("--out", train_out, "Checkpoint path (default WORK/model/checkpoint.bin)");
  train->callback([&] {
    action = [&] {
      PipelineConfig c = g.config();
      if (train_steps) c.train.steps = *train_steps;
      const PipelinePaths paths{c.work_dir};
      run_stage("train", [&] {
        c.validate();
        const auto samples = read_shards(train_data.empty() ? paths.shards() : fs::path(train_data));
        const Normalizer norm = fit_normalizer(samples);
        const fs::path out = train_out.empty() ? paths.checkpoint() : fs::path(train_out);
        if (out.has_parent_path()) fs::create_directories(out.parent_path());
        MotionTransformer model = train_denoiser(samples, norm, c, [&](const TrainStats& s) {
          *log << "[train] step " << s.step << " loss " << s.loss << " lr " << s.lr << "\n";
        });
        save_checkpoint(out, model, Checkpoint{c.model, norm, c.train.steps});
      });
    };
  });

  // sample
  auto* sample = app.add_subcommand("sample", "Roll out motion towards goals on a terrain");
  std::string s_ckpt, s_terrain, s_goals, s_styles, s_out, s_seed_motion;
  std::vector<double> s_start;
  std::uint64_t s_seed = 0;
  bool s_unguided = false;
  std::optional<int> s_max_segments;
  sample->add_option("--ckpt", s_ckpt, "Checkpoint")->required()->check(CLI::ExistingFile);
  sample->add_option("--terrain", s_terrain, "Height field (.hgt)")->required()->check(CLI::ExistingFile);
  sample->add_option("--goals", s_goals, "Goals file")->required()->check(CLI::ExistingFile);
  sample->add_option("--styles", s_styles, "Style change points (default: each goal's style)")
      ->check(CLI::ExistingFile);
  sample->add_option("--seed", s_seed, "Sampling seed");
  sample->add_option("--out", s_out, "Output motion (.json)")->required();
  auto* seed_opt = sample->add_option("--seed-motion", s_seed_motion, "Seed motion; its last 10 frames are used")
                       ->check(CLI::ExistingFile);
  sample->add_option("--start", s_start, "Rest-pose start: x z yaw")->expected(3)->excludes(seed_opt);
  sample->add_flag("--unguided", s_unguided, "Disable scene guidance");
  sample->add_option("--max-segments", s_max_segments, "Segment budget for the whole rollout");
  sample->callback([&] {
    action = [&] {
      const PipelineConfig c = g.config();
      run_stage("sample", [&] {
        const HeightField terrain = read_hgt(s_terrain);
        const auto goals = read_goals(s_goals);
        std::vector<StyleChange> styles;
        if (!s_styles.empty()) {
          styles = read_styles(s_styles);
        } else {
          styles.push_back({0, goals.front().style});
        }
        const TransformerDenoiser denoiser = load_checkpoint(s_ckpt);
        RolloutOptions opt;
        opt.max_segments = s_max_segments.value_or(std::max(c.sample.max_segments, 4 * static_cast<int>(goals.size())));
        opt.goal_reach_eps = c.sample.goal_reach_eps;
        opt.refresh_scene = c.sample.refresh_scene;
        opt.guidance = s_unguided ? GuidanceSpec::none() : c.guidance;
        std::vector<GoalFrame> frames;
        for (const auto& gs : goals) frames.push_back(gs.goal);
        std::mt19937_64 rng(s_seed);
        const RolloutResult r =
            autoregressive_rollout(denoiser, default_skeleton(), terrain, frames, styles,
                                   seed_from_args(s_seed_motion, s_start, terrain), NoiseSchedule(c.diffusion.steps), opt, rng);
        MotionDocument doc;
        doc.segment = r.motion;
        doc.styles = r.styles;
        write_motion(s_out, doc);
        *log << "[sample] " << r.motion.frame_count() << " frames, " << r.segments << " segments, "
             << r.goals_reached << "/" << goals.size() << " goals reached\n";
      });
    };
  });

  // eval
  auto* eval = app.add_subcommand("eval", "Score motions against a terrain and goals");
  std::string e_motions, e_terrain, e_goals, e_out;
  eval->add_option("--motions", e_motions, "Directory of motion files (.json)")->required()->check(CLI::ExistingDirectory);
  eval->add_option("--terrain", e_terrain, "Height field (.hgt)")->required()->check(CLI::ExistingFile);
  eval->add_option("--goals", e_goals, "Goals file: one shared goal or one per motion")->required()->check(CLI::ExistingFile);
  eval->add_option("--out", e_out, "Report (.jsonl)")->required();
  eval->callback([&] {
    action = [&] {
      run_stage("eval", [&] {
        const HeightField terrain = read_hgt(e_terrain);
        const auto goals = read_goals(e_goals);
        const auto files = list_files(e_motions, ".json");
        if (files.empty()) throw InvalidParams("no motion files in " + e_motions);
        if (goals.size() != 1 && goals.size() != files.size()) {
          throw InvalidParams("goals file must list one goal or one per motion");
        }
        const Skeleton& skel = default_skeleton();
        std::vector<SequenceMetrics> seqs;
        std::vector<MotionSegment> motions;
        for (size_t i = 0; i < files.size(); ++i) {
          motions.push_back(read_motion(files[i]).segment);
          seqs.push_back(evaluate_sequence(files[i].stem().string(), motions.back(), skel, terrain, goal_for(goals, i)));
        }
        // Diversity is only defined for two or more equal-length samples.
        double div = 0.0;
        bool same_length = motions.size() >= 2;
        for (const auto& m : motions) same_length = same_length && m.frame_count() == motions.front().frame_count();
        if (same_length) div = diversity(motions, skel);
        const EvalReport report = aggregate_report(seqs, div);
        write_text_file(e_out, report_to_jsonl(report));
        *log << "[eval] penetration " << report.penetration_cm << " cm, goal " << report.goal_pos_cm << " cm / "
             << report.goal_rot_rad << " rad, skate " << report.foot_skate_cm << " cm\n";
      });
    };
  });

  // export-obj
  auto* exp = app.add_subcommand("export-obj", "Write a height field as a closed OBJ mesh");
  std::string x_terrain, x_out;
  double x_depth = 0.5;
  exp->add_option("--terrain", x_terrain, "Height field (.hgt)")->required()->check(CLI::ExistingFile);
  exp->add_option("--out", x_out, "Mesh (.obj)")->required();
  exp->add_option("--base-depth", x_depth, "Skirt depth below the lowest sample");
  exp->callback([&] {
    action = [&] {
      run_stage("export-obj", [&] { write_obj(x_out, heightfield_to_mesh(read_hgt(x_terrain), x_depth)); });
    };
  });

  // benchmark
  auto* bench = app.add_subcommand("benchmark", "Unguided and guided rollouts on the held-out cases; writes WORK/eval");
  bench->callback([&] {
    action = [&] { print_summary(stage_eval(g.config(), log)); };
  });

  // run-all
  auto* all = app.add_subcommand("run-all", "Every stage in order; writes WORK/eval/summary.json");
  all->callback([&] {
    action = [&] { print_summary(run_pipeline(g.config(), log)); };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    action();
  } catch (const StageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.validation() ? kExitValidation : kExitRuntime;
  } catch (const InvalidParams& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
