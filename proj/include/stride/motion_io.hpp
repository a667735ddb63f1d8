#pragma once

#include "stride/motion.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace stride {

inline constexpr int kMotionFormatVersion = 1;

/// A motion document: the segment plus the skeleton it was authored against
/// and, optionally, one style id per frame.
struct MotionDocument {
  MotionSegment segment;
  Skeleton skeleton = default_skeleton();
  std::vector<int> styles;
};

/// Text (JSON) motion format:
///   {"version": 1, "fps": 30, "joint_parents": [22 ints],
///    "joint_offsets": [[x, y, z] x 22],
///    "frames": [{"rotations": [[6 floats] x 22], "root": [3 floats],
///                "contacts": [4 ints]}, ...],
///    "styles": [per-frame ints]}            // optional
std::string motion_to_json(const MotionDocument& doc);
MotionDocument motion_from_json(const std::string& text);

void write_motion(const std::filesystem::path& path, const MotionDocument& doc);
MotionDocument read_motion(const std::filesystem::path& path);

}  // namespace stride
