#pragma once

#include <vector>

#include "slam2d/geometry.hpp"

namespace slam2d {

struct StampedPose {
  double t = 0.0;  // seconds
  Pose2 pose;
};

/// Timestamped pose sequence with strictly increasing t.
using Trajectory = std::vector<StampedPose>;

}  // namespace slam2d
