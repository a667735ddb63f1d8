#include "stride/metrics.hpp"

#include "stride/kinematics.hpp"

#include <json.hpp>

#include <cmath>
#include <sstream>

namespace stride {

namespace {

bool is_foot(const Skeleton& skeleton, int joint) {
  for (int f : skeleton.foot_joints) {
    if (f == joint) return true;
  }
  return false;
}

}  // namespace

double penetration_metric(const MotionSegment& segment, const Skeleton& skeleton,
                          const HeightField& field) {
  const JointPositions p = forward_kinematics(skeleton, segment);
  if (p.frames == 0) return 0.0;
  double sum = 0.0;
  for (int i = 0; i < p.frames; ++i) {
    for (int j = 0; j < kJointCount; ++j) {
      const Vec3& q = p.at(i, j);
      const double bottom = q.y() - (is_foot(skeleton, j) ? skeleton.foot_radius : 0.0);
      sum += std::max(field.sample_clamped(q.x(), q.z()).height - bottom, 0.0);
    }
  }
  return 100.0 * sum / (static_cast<double>(p.frames) * kJointCount);
}

ContactDistance contact_distance_metric(const MotionSegment& segment, const Skeleton& skeleton,
                                        const HeightField& field) {
  const JointPositions p = forward_kinematics(skeleton, segment);
  double sum = 0.0;
  int count = 0;
  for (int i = 0; i < p.frames; ++i) {
    for (int c = 0; c < kFootCount; ++c) {
      if (!segment.contacts[i][c]) continue;
      const Vec3& q = p.at(i, skeleton.foot_joints[c]);
      sum += std::abs(q.y() - skeleton.foot_radius - field.sample_clamped(q.x(), q.z()).height);
      ++count;
    }
  }
  if (count == 0) return {};
  return {100.0 * sum / count, true};
}

GoalError goal_error(const MotionSegment& segment, const GoalFrame& goal) {
  if (segment.frame_count() == 0) throw InvalidParams("goal_error needs at least one frame");
  const int last = segment.frame_count() - 1;
  const double yaw = heading_yaw(sixd_to_matrix(segment.rotation(last, kPelvis)));
  return {100.0 * (segment.root[last] - goal.position).norm(),
          std::abs(wrap_angle(yaw - goal.yaw()))};
}

double foot_skate(const MotionSegment& segment, const Skeleton& skeleton) {
  const JointPositions p = forward_kinematics(skeleton, segment);
  double sum = 0.0;
  int count = 0;
  for (int i = 1; i < p.frames; ++i) {
    for (int c = 0; c < kFootCount; ++c) {
      if (!segment.contacts[i - 1][c] || !segment.contacts[i][c]) continue;
      const Vec3 d = p.at(i, skeleton.foot_joints[c]) - p.at(i - 1, skeleton.foot_joints[c]);
      sum += std::hypot(d.x(), d.z());
      ++count;
    }
  }
  return count == 0 ? 0.0 : 100.0 * sum / count;
}

double diversity(const std::vector<MotionSegment>& samples, const Skeleton& skeleton) {
  if (samples.size() < 2) throw TooFewSamples("diversity needs at least two samples");
  std::vector<JointPositions> pos;
  for (const auto& s : samples) {
    if (s.frame_count() != samples.front().frame_count()) {
      throw InvalidParams("diversity samples must have equal lengths");
    }
    pos.push_back(forward_kinematics(skeleton, s));
  }
  double sum = 0.0;
  int pairs = 0;
  for (size_t a = 0; a < pos.size(); ++a) {
    for (size_t b = a + 1; b < pos.size(); ++b) {
      double sq = 0.0;
      for (size_t k = 0; k < pos[a].points.size(); ++k) {
        sq += (pos[a].points[k] - pos[b].points[k]).squaredNorm();
      }
      sum += std::sqrt(sq);
      ++pairs;
    }
  }
  return sum / pairs;
}

SequenceMetrics evaluate_sequence(std::string name, const MotionSegment& segment,
                                  const Skeleton& skeleton, const HeightField& field,
                                  const GoalFrame& goal) {
  SequenceMetrics m;
  m.name = std::move(name);
  m.penetration_cm = penetration_metric(segment, skeleton, field);
  const ContactDistance cd = contact_distance_metric(segment, skeleton, field);
  m.contact_dist_cm = cd.cm;
  m.has_contacts = cd.has_contacts;
  const GoalError ge = goal_error(segment, goal);
  m.goal_pos_cm = ge.pos_cm;
  m.goal_rot_rad = ge.rot_rad;
  m.foot_skate_cm = foot_skate(segment, skeleton);
  return m;
}

EvalReport aggregate_report(std::vector<SequenceMetrics> sequences, double diversity) {
  EvalReport r;
  r.diversity = diversity;
  int with_contacts = 0;
  for (const auto& s : sequences) {
    r.penetration_cm += s.penetration_cm;
    r.goal_pos_cm += s.goal_pos_cm;
    r.goal_rot_rad += s.goal_rot_rad;
    r.foot_skate_cm += s.foot_skate_cm;
    if (s.has_contacts) {
      r.contact_dist_cm += s.contact_dist_cm;
      ++with_contacts;
    }
  }
  if (!sequences.empty()) {
    const double n = static_cast<double>(sequences.size());
    r.penetration_cm /= n;
    r.goal_pos_cm /= n;
    r.goal_rot_rad /= n;
    r.foot_skate_cm /= n;
  }
  if (with_contacts > 0) r.contact_dist_cm /= with_contacts;
  r.sequences = std::move(sequences);
  return r;
}

namespace {

constexpr const char* kEvalTag = "stride-eval";

}  // namespace

std::string report_to_jsonl(const EvalReport& report) {
  std::ostringstream out;
  for (const auto& s : report.sequences) {
    nlohmann::ordered_json j;
    j["format"] = kEvalTag;
    j["version"] = kEvalFormatVersion;
    j["sequence"] = s.name;
    j["penetration_cm"] = s.penetration_cm;
    j["contact_dist_cm"] = s.contact_dist_cm;
    j["has_contacts"] = s.has_contacts;
    j["goal_pos_cm"] = s.goal_pos_cm;
    j["goal_rot_rad"] = s.goal_rot_rad;
    j["foot_skate_cm"] = s.foot_skate_cm;
    out << j.dump() << '\n';
  }
  nlohmann::ordered_json a;
  a["format"] = kEvalTag;
  a["version"] = kEvalFormatVersion;
  a["aggregate"] = true;
  a["sequences"] = report.sequences.size();
  a["penetration_cm"] = report.penetration_cm;
  a["contact_dist_cm"] = report.contact_dist_cm;
  a["goal_pos_cm"] = report.goal_pos_cm;
  a["goal_rot_rad"] = report.goal_rot_rad;
  a["foot_skate_cm"] = report.foot_skate_cm;
  a["diversity"] = report.diversity;
  out << a.dump() << '\n';
  return out.str();
}

EvalReport report_from_jsonl(const std::string& text) {
  EvalReport r;
  bool aggregate = false;
  std::istringstream in(text);
  std::string line;
  try {
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto j = nlohmann::json::parse(line);
      if (j.at("format") != kEvalTag || j.at("version") != kEvalFormatVersion) {
        throw FormatError("unsupported eval record format");
      }
      if (j.value("aggregate", false)) {
        r.penetration_cm = j.at("penetration_cm");
        r.contact_dist_cm = j.at("contact_dist_cm");
        r.goal_pos_cm = j.at("goal_pos_cm");
        r.goal_rot_rad = j.at("goal_rot_rad");
        r.foot_skate_cm = j.at("foot_skate_cm");
        r.diversity = j.at("diversity");
        aggregate = true;
        continue;
      }
      SequenceMetrics s;
      s.name = j.at("sequence");
      s.penetration_cm = j.at("penetration_cm");
      s.contact_dist_cm = j.at("contact_dist_cm");
      s.has_contacts = j.at("has_contacts");
      s.goal_pos_cm = j.at("goal_pos_cm");
      s.goal_rot_rad = j.at("goal_rot_rad");
      s.foot_skate_cm = j.at("foot_skate_cm");
      r.sequences.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed eval report: ") + e.what());
  }
  if (!aggregate) throw FormatError("eval report has no aggregate record");
  return r;
}

}  // namespace stride
