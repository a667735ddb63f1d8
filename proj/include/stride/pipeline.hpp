#pragma once

#include "stride/config.hpp"
#include "stride/metrics.hpp"
#include "stride/sampler.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace stride {

/// A failure inside a pipeline stage; the message is prefixed with the stage
/// name. `validation` marks bad inputs (as opposed to runtime failures).
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& message, bool validation)
      : Error("[" + stage + "] " + message), stage_(std::move(stage)), validation_(validation) {}
  const std::string& stage() const { return stage_; }
  bool validation() const { return validation_; }

 private:
  std::string stage_;
  bool validation_;
};

/// Artifact locations under the work directory.
struct PipelinePaths {
  std::filesystem::path root;

  std::filesystem::path config() const { return root / "config.ini"; }
  std::filesystem::path data() const { return root / "data"; }
  std::filesystem::path fits() const { return root / "fits"; }
  std::filesystem::path shards() const { return root / "shards"; }
  std::filesystem::path checkpoint() const { return root / "model" / "checkpoint.bin"; }
  std::filesystem::path train_log() const { return root / "model" / "train_log.jsonl"; }
  std::filesystem::path eval() const { return root / "eval"; }
};

struct GoalSpec {
  GoalFrame goal;
  int style = 0;
};

/// Goals file: one goal per line, "x y z fx fz style_id"; '#' comments.
std::vector<GoalSpec> parse_goals(const std::string& text);
std::vector<GoalSpec> read_goals(const std::filesystem::path& path);
std::string goals_to_text(const std::vector<GoalSpec>& goals);

/// Styles file: "frame_start style_id" change points, ascending.
std::vector<StyleChange> parse_styles(const std::string& text);
std::vector<StyleChange> read_styles(const std::filesystem::path& path);

/// Ten rest-pose frames standing on the terrain at (x, z) facing `yaw`.
MotionSegment rest_seed(const HeightField& terrain, const Vec2& xz, double yaw);

// Stages. Each reads its inputs from and writes its outputs to the work
// directory, so any stage can be re-run on its own.
void stage_gen_data(const PipelineConfig& config, std::ostream* log = nullptr);
void stage_fit(const PipelineConfig& config, std::ostream* log = nullptr);
void stage_build_train(const PipelineConfig& config, std::ostream* log = nullptr);
void stage_train(const PipelineConfig& config, std::ostream* log = nullptr);

/// Unguided and default-guided rollouts on every held-out case with the same
/// per-case seeds, and their reports.
struct EvalSummary {
  EvalReport unguided;
  EvalReport guided;
};

EvalSummary stage_eval(const PipelineConfig& config, std::ostream* log = nullptr);

/// Every stage in order; writes eval/summary.json.
EvalSummary run_pipeline(const PipelineConfig& config, std::ostream* log = nullptr);

/// Runs fn, re-throwing failures as StageError tagged with `stage`.
template <typename Fn>
auto run_stage(const std::string& stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const InvalidParams& e) {
    throw StageError(stage, e.what(), true);
  } catch (const FormatError& e) {
    throw StageError(stage, e.what(), true);
  } catch (const std::exception& e) {
    throw StageError(stage, e.what(), false);
  }
}

}  // namespace stride
