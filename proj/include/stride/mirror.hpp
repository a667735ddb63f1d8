#pragma once

#include "stride/motion.hpp"

namespace stride {

/// Reflects a motion across the x = 0 plane: root x is negated, every
/// rotation R becomes M R M with M = diag(-1, 1, 1), left/right joints and
/// contact channels swap. Assumes a left/right symmetric skeleton.
MotionSegment mirror_motion(const MotionSegment& segment, const Skeleton& skeleton = default_skeleton());

}  // namespace stride
