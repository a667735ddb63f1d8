#pragma once

#include "stride/height_field.hpp"
#include "stride/motion.hpp"
#include "stride/scene.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace stride {

/// Mean over frames and the 22 joints of max(terrain - point bottom, 0), in
/// cm. Foot joints are spheres of foot_radius; other joints are points.
/// Off the grid the terrain is extended flat past its border.
double penetration_metric(const MotionSegment& segment, const Skeleton& skeleton,
                          const HeightField& field);

struct ContactDistance {
  double cm = 0.0;
  bool has_contacts = false;
};

/// Mean |foot bottom - terrain| in cm over labeled contacts, on the
/// border-extended terrain.
ContactDistance contact_distance_metric(const MotionSegment& segment, const Skeleton& skeleton,
                                        const HeightField& field);

struct GoalError {
  double pos_cm = 0.0;
  double rot_rad = 0.0;  // in [0, pi]
};

/// Final root versus the goal: 3D distance in cm and absolute facing angle.
GoalError goal_error(const MotionSegment& segment, const GoalFrame& goal);

/// Mean horizontal foot-joint displacement in cm between consecutive frames
/// where the foot is in contact in both. Zero without such pairs.
double foot_skate(const MotionSegment& segment, const Skeleton& skeleton);

/// Mean pairwise L2 distance between flattened joint positions. Throws
/// TooFewSamples below two samples, InvalidParams on unequal lengths.
double diversity(const std::vector<MotionSegment>& samples, const Skeleton& skeleton);

struct SequenceMetrics {
  std::string name;
  double penetration_cm = 0.0;
  double contact_dist_cm = 0.0;
  bool has_contacts = false;
  double goal_pos_cm = 0.0;
  double goal_rot_rad = 0.0;
  double foot_skate_cm = 0.0;
};

SequenceMetrics evaluate_sequence(std::string name, const MotionSegment& segment,
                                  const Skeleton& skeleton, const HeightField& field,
                                  const GoalFrame& goal);

/// Aggregate means plus the per-sequence table. Contact distance averages
/// only sequences that have contacts.
struct EvalReport {
  double penetration_cm = 0.0;
  double contact_dist_cm = 0.0;
  double goal_pos_cm = 0.0;
  double goal_rot_rad = 0.0;
  double foot_skate_cm = 0.0;
  double diversity = 0.0;
  std::vector<SequenceMetrics> sequences;
};

inline constexpr int kEvalFormatVersion = 1;

EvalReport aggregate_report(std::vector<SequenceMetrics> sequences, double diversity);

/// JSON lines: one record per sequence, then {"aggregate": true, ...}. Every
/// record carries "format": "stride-eval" and "version".
std::string report_to_jsonl(const EvalReport& report);
EvalReport report_from_jsonl(const std::string& text);

}  // namespace stride
