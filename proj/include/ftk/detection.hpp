// Per-frame detection inputs shared by the tracker, simulator and io.
#pragma once

#include <Eigen/Core>

#include <string>
#include <vector>

#include "ftk/estimation.hpp"
#include "ftk/geometry.hpp"

namespace ftk {

struct Detection2D {
  int id = 0;
  Box2d box;
  double score = 1.0;
  Eigen::VectorXd feature;  // empty when the detector provides none
};

// 3D detections always originate from a 2D frustum; id refers to the parent
// 2D detection.
struct Detection3D {
  int id = 0;
  Box3d box;
  Eigen::VectorXd feature;
};

struct FrameBundle {
  long frame_index = 0;
  double timestamp = 0.0;
  std::vector<Detection2D> detections_2d;
  std::vector<Detection3D> detections_3d;
  CameraModel camera;
};

}  // namespace ftk
