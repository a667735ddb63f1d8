#include "stride/config.hpp"

#include "stride/gait.hpp"
#include "stride/io_util.hpp"

#include <charconv>
#include <functional>
#include <set>
#include <sstream>

namespace stride {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& text, const std::string& key) {
  T value{};
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) throw InvalidParams("bad value for " + key + ": '" + text + "'");
  return value;
}

template <typename T>
std::string format_number(T value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

bool parse_bool(const std::string& text, const std::string& key) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw InvalidParams("bad value for " + key + ": '" + text + "'");
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

struct Field {
  std::string section;
  std::string key;
  std::function<void(PipelineConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const PipelineConfig&)> get;
};

template <typename T, typename Access>
Field number(std::string section, std::string key, Access access) {
  return {std::move(section), std::move(key),
          [access](PipelineConfig& c, const std::string& v, const std::string& name) {
            access(c) = parse_number<T>(v, name);
          },
          [access](const PipelineConfig& c) {
            return format_number<T>(access(const_cast<PipelineConfig&>(c)));
          }};
}

template <typename Access>
Field boolean(std::string section, std::string key, Access access) {
  return {std::move(section), std::move(key),
          [access](PipelineConfig& c, const std::string& v, const std::string& name) {
            access(c) = parse_bool(v, name);
          },
          [access](const PipelineConfig& c) {
            return std::string(access(const_cast<PipelineConfig&>(c)) ? "true" : "false");
          }};
}

#define STRIDE_FIELD(member) [](PipelineConfig& c) -> auto& { return c.member; }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    f.push_back(number<std::uint64_t>("general", "seed", STRIDE_FIELD(seed)));
    f.push_back(number<int>("general", "jobs", STRIDE_FIELD(jobs)));
    f.push_back({"general", "work_dir",
                 [](PipelineConfig& c, const std::string& v, const std::string&) { c.work_dir = v; },
                 [](const PipelineConfig& c) { return c.work_dir.string(); }});

    f.push_back(number<int>("data", "source_terrains", STRIDE_FIELD(data.source_terrains)));
    f.push_back(number<int>("data", "clips_per_style", STRIDE_FIELD(data.clips_per_style)));
    f.push_back({"data", "styles",
                 [](PipelineConfig& c, const std::string& v, const std::string&) { c.data.styles = split_list(v); },
                 [](const PipelineConfig& c) {
                   std::string s;
                   for (const auto& n : c.data.styles) s += (s.empty() ? "" : ",") + n;
                   return s;
                 }});
    f.push_back(number<int>("data", "bank_extra_patches", STRIDE_FIELD(data.bank_extra_patches)));
    f.push_back(number<int>("data", "clip_frames", STRIDE_FIELD(data.clip_frames)));
    f.push_back(number<int>("data", "heldout_terrains", STRIDE_FIELD(data.heldout_terrains)));
    f.push_back(number<int>("data", "heldout_cases", STRIDE_FIELD(data.heldout_cases)));
    f.push_back(number<double>("data", "fractal_amplitude", STRIDE_FIELD(data.fractal_amplitude)));
    f.push_back(number<double>("data", "max_slope_deg", STRIDE_FIELD(data.max_slope_deg)));
    f.push_back(number<double>("data", "max_stair_rise", STRIDE_FIELD(data.max_stair_rise)));
    f.push_back(number<double>("data", "max_curvature", STRIDE_FIELD(data.max_curvature)));
    f.push_back(number<double>("data", "speed_jitter", STRIDE_FIELD(data.speed_jitter)));

    f.push_back(number<double>("fit", "jump_threshold", STRIDE_FIELD(fit.jump_threshold)));
    f.push_back(number<int>("fit", "top", STRIDE_FIELD(fit.top)));

    f.push_back(number<int>("diffusion", "steps", STRIDE_FIELD(diffusion.steps)));
    f.push_back(number<double>("diffusion", "lambda", STRIDE_FIELD(diffusion.lambda)));
    f.push_back(number<int>("diffusion", "window_stride", STRIDE_FIELD(diffusion.window_stride)));

    f.push_back(number<int>("model", "width", STRIDE_FIELD(model.width)));
    f.push_back(number<int>("model", "heads", STRIDE_FIELD(model.heads)));
    f.push_back(number<int>("model", "layers", STRIDE_FIELD(model.layers)));
    f.push_back(number<int>("model", "ff", STRIDE_FIELD(model.ff)));
    f.push_back(number<std::uint64_t>("model", "init_seed", STRIDE_FIELD(model.init_seed)));

    f.push_back(number<int>("train", "steps", STRIDE_FIELD(train.steps)));
    f.push_back(number<int>("train", "batch", STRIDE_FIELD(train.batch)));
    f.push_back(number<double>("train", "lr", STRIDE_FIELD(train.lr)));
    f.push_back(number<double>("train", "lr_final", STRIDE_FIELD(train.lr_final)));
    f.push_back(number<int>("train", "warmup", STRIDE_FIELD(train.warmup)));
    f.push_back(number<double>("train", "clip", STRIDE_FIELD(train.clip)));
    f.push_back(number<double>("train", "weight_decay", STRIDE_FIELD(train.weight_decay)));
    f.push_back(number<int>("train", "log_every", STRIDE_FIELD(train.log_every)));

    f.push_back(boolean("guidance", "enabled", STRIDE_FIELD(guidance.enabled)));
    f.push_back(number<double>("guidance", "phys", STRIDE_FIELD(guidance.weights.phys)));
    f.push_back(number<double>("guidance", "smooth", STRIDE_FIELD(guidance.weights.smooth)));
    f.push_back(number<double>("guidance", "collision", STRIDE_FIELD(guidance.weights.collision)));
    f.push_back({"guidance", "policy",
                 [](PipelineConfig& c, const std::string& v, const std::string& name) {
                   if (v == "final") {
                     c.guidance.policy = GuidancePolicy::kFinalStep;
                   } else if (v == "every") {
                     c.guidance.policy = GuidancePolicy::kEveryStep;
                   } else {
                     throw InvalidParams("bad value for " + name + ": '" + v + "' (final or every)");
                   }
                 },
                 [](const PipelineConfig& c) {
                   return std::string(c.guidance.policy == GuidancePolicy::kFinalStep ? "final" : "every");
                 }});

    f.push_back(number<double>("sample", "goal_reach_eps", STRIDE_FIELD(sample.goal_reach_eps)));
    f.push_back(number<int>("sample", "max_segments", STRIDE_FIELD(sample.max_segments)));
    f.push_back(boolean("sample", "refresh_scene", STRIDE_FIELD(sample.refresh_scene)));
    return f;
  }();
  return table;
}

#undef STRIDE_FIELD

void require(bool ok, const char* key, const char* what) {
  if (!ok) throw InvalidParams(std::string(key) + " " + what);
}

}  // namespace

void PipelineConfig::validate() const {
  require(jobs >= 0, "general.jobs", "must be >= 0");
  require(!work_dir.empty(), "general.work_dir", "must not be empty");
  require(data.source_terrains >= 1, "data.source_terrains", "must be >= 1");
  require(data.clips_per_style >= 1, "data.clips_per_style", "must be >= 1");
  require(!data.styles.empty(), "data.styles", "must list at least one style");
  std::set<std::string> seen;
  for (const auto& s : data.styles) {
    int id = -1;
    try {
      id = style_id(s);
    } catch (const InvalidParams&) {
    }
    require(gait_supported(id), "data.styles", "contains a style without a gait oscillator");
    require(seen.insert(s).second, "data.styles", "contains a duplicate");
  }
  require(data.bank_extra_patches >= 0, "data.bank_extra_patches", "must be >= 0");
  require(data.clip_frames >= kSegmentFrames && data.clip_frames <= 120, "data.clip_frames",
          "must be in [40, 120]");
  require(data.heldout_terrains >= 1, "data.heldout_terrains", "must be >= 1");
  require(data.heldout_cases >= 1, "data.heldout_cases", "must be >= 1");
  require(data.fractal_amplitude >= 0.0 && data.fractal_amplitude <= 0.5, "data.fractal_amplitude",
          "must be in [0, 0.5]");
  require(data.max_slope_deg >= 0.0 && data.max_slope_deg <= 45.0, "data.max_slope_deg", "must be in [0, 45]");
  require(data.max_stair_rise >= 0.0 && data.max_stair_rise <= 0.25, "data.max_stair_rise",
          "must be in [0, 0.25]");
  require(data.max_curvature >= 0.0 && data.max_curvature <= 1.0, "data.max_curvature", "must be in [0, 1]");
  require(data.speed_jitter >= 0.0 && data.speed_jitter <= 0.5, "data.speed_jitter", "must be in [0, 0.5]");
  require(fit.jump_threshold > 0.0, "fit.jump_threshold", "must be > 0");
  require(fit.top >= 1, "fit.top", "must be >= 1");
  require(diffusion.steps >= 1 && diffusion.steps <= 1000, "diffusion.steps", "must be in [1, 1000]");
  require(diffusion.lambda >= 0.0, "diffusion.lambda", "must be >= 0");
  require(diffusion.window_stride >= 1, "diffusion.window_stride", "must be >= 1");
  model.validate();
  require(train.steps >= 0, "train.steps", "must be >= 0");
  require(train.batch >= 1, "train.batch", "must be >= 1");
  require(train.lr > 0.0, "train.lr", "must be > 0");
  require(train.lr_final >= 0.0 && train.lr_final <= train.lr, "train.lr_final", "must be in [0, lr]");
  require(train.warmup >= 0, "train.warmup", "must be >= 0");
  require(train.clip > 0.0, "train.clip", "must be > 0");
  require(train.weight_decay >= 0.0, "train.weight_decay", "must be >= 0");
  require(train.log_every >= 1, "train.log_every", "must be >= 1");
  guidance.validate();
  require(sample.goal_reach_eps > 0.0, "sample.goal_reach_eps", "must be > 0");
  require(sample.max_segments >= 1, "sample.max_segments", "must be >= 1");
}

std::string PipelineConfig::to_text() const {
  std::ostringstream out;
  out << "# stride pipeline config v1\n";
  std::string section;
  for (const auto& f : fields()) {
    if (f.section != section) {
      section = f.section;
      out << (out.tellp() > 0 ? "\n" : "") << "[" << section << "]\n";
    }
    out << f.key << " = " << f.get(*this) << "\n";
  }
  return out.str();
}

PipelineConfig PipelineConfig::from_text(const std::string& text) {
  PipelineConfig c;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw InvalidParams("config line " + std::to_string(lineno) + ": bad section header");
      section = trim(line.substr(1, line.size() - 2));
      bool known = false;
      for (const auto& f : fields()) known = known || f.section == section;
      if (!known) throw InvalidParams("config line " + std::to_string(lineno) + ": unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw InvalidParams("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (section.empty()) throw InvalidParams("config line " + std::to_string(lineno) + ": key outside a section");
    const std::string name = section + "." + key;
    bool applied = false;
    for (const auto& f : fields()) {
      if (f.section == section && f.key == key) {
        f.set(c, value, name);
        applied = true;
        break;
      }
    }
    if (!applied) throw InvalidParams("config line " + std::to_string(lineno) + ": unknown key " + name);
  }
  c.validate();
  return c;
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
  return from_text(read_text_file(path));
}

PipelineConfig PipelineConfig::smoke() {
  PipelineConfig c;
  c.work_dir = "smoke";
  c.data.source_terrains = 2;
  c.data.clips_per_style = 3;
  c.data.styles = {"walk", "crouch", "jump"};
  c.data.bank_extra_patches = 4;
  c.data.heldout_terrains = 1;
  c.data.heldout_cases = 3;
  c.diffusion.steps = 20;
  c.model = ModelConfig{32, 2, 1, 64, 1};
  c.train.steps = 200;
  c.train.batch = 4;
  c.train.warmup = 20;
  c.train.log_every = 50;
  return c;
}

std::vector<int> PipelineConfig::style_ids() const {
  std::vector<int> out;
  for (const auto& s : data.styles) out.push_back(style_id(s));
  return out;
}

}  // namespace stride
