// Recursive state estimation: constant-velocity prediction, PDA linear update
// from 3D boxes, PDA-EKF update from projected 2D boxes, and the image-plane
// state variant used when only 2D data is tracked.
#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <vector>

#include "ftk/geometry.hpp"

namespace ftk {

inline constexpr int kStateDim3 = 9;  // {x, y, z, l, h, w, theta, v_x, v_z}
inline constexpr int kMeasDim3 = 7;   // {x, y, z, l, h, w, theta}
inline constexpr int kStateDim2 = 6;  // {x, y, w, h, v_x, v_y}
inline constexpr int kMeasDim2 = 4;   // {u, v, w, h}

using StateVec3 = Eigen::Matrix<double, kStateDim3, 1>;
using StateCov3 = Eigen::Matrix<double, kStateDim3, kStateDim3>;
using MeasVec3 = Eigen::Matrix<double, kMeasDim3, 1>;
using StateVec2 = Eigen::Matrix<double, kStateDim2, 1>;
using StateCov2 = Eigen::Matrix<double, kStateDim2, kStateDim2>;
using MeasVec2 = Eigen::Matrix<double, kMeasDim2, 1>;

struct BehindCamera : std::runtime_error {
  BehindCamera() : std::runtime_error("box projects behind the camera") {}
};
struct SingularInnovation : std::runtime_error {
  SingularInnovation() : std::runtime_error("innovation covariance is numerically singular") {}
};

struct TrackState3D {
  StateVec3 mean = StateVec3::Zero();
  StateCov3 cov = StateCov3::Identity();
};

struct TrackState2D {
  StateVec2 mean = StateVec2::Zero();
  StateCov2 cov = StateCov2::Identity();
};

// Pinhole intrinsics plus the rigid transform from the tracking frame to the
// camera frame (x right, y down, z forward / depth).
struct CameraModel {
  double fx = 600.0, fy = 600.0;
  double cx = 640.0, cy = 360.0;
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
};

struct NoiseConfig {
  StateVec3 q3;   // process noise diagonal, 3D state
  StateVec2 q2;   // process noise diagonal, 2D-only state
  MeasVec3 r3;    // 3D measurement noise diagonal
  MeasVec2 r2;    // 2D measurement noise diagonal
  double p_detect = 0.9;
  double lambda = 1.0;

  NoiseConfig();
  static StateVec3 make_q3(double pos, double size, double theta, double vel);
  static StateVec2 make_q2(double pos, double size, double vel);
  static MeasVec3 make_r3(double pos, double size, double theta);
};

// Conversions between box parameters and the filter's vector layouts.
MeasVec3 measurement_from_box(const Box3d& b);
Box3d box_from_measurement(const MeasVec3& z);
Box3d box_from_state(const TrackState3D& s);
MeasVec2 measurement_from_box(const Box2d& b);
Box2d box_from_measurement2(const MeasVec2& z);

TrackState3D predict(const TrackState3D& state, double dt, const NoiseConfig& noise);
TrackState2D predict(const TrackState2D& state, double dt, const NoiseConfig& noise);

// Projects the eight cuboid corners through the pinhole model and returns the
// tight axis-aligned bound. Throws BehindCamera when any corner has depth
// below 0.01 m.
Box2d project_to_image(const Box3d& box, const CameraModel& cam);
Box2d project_to_image(const TrackState3D& state, const CameraModel& cam);

// 4x9 Jacobian of the projection measurement function, by central finite
// differences with the given step.
Eigen::Matrix<double, kMeasDim2, kStateDim3> projection_jacobian(const StateVec3& mean,
                                                                 const CameraModel& cam,
                                                                 double step = 1e-5);

// Per-track linearizations reused by gating and by the PDA updates.
struct Meas3Model {
  MeasVec3 z_pred;
  Eigen::Matrix<double, kMeasDim3, kMeasDim3> s;
  Eigen::Matrix<double, kMeasDim3, kMeasDim3> s_inv;
};
struct Meas2Model {
  MeasVec2 z_pred;
  Eigen::Matrix<double, kMeasDim2, kStateDim3> jac;
  Eigen::Matrix<double, kMeasDim2, kMeasDim2> s;
  Eigen::Matrix<double, kMeasDim2, kMeasDim2> s_inv;
};
struct Meas2OnlyModel {
  MeasVec2 z_pred;
  Eigen::Matrix<double, kMeasDim2, kMeasDim2> s;
  Eigen::Matrix<double, kMeasDim2, kMeasDim2> s_inv;
};

Meas3Model linearize_3d(const TrackState3D& state, const NoiseConfig& noise);
Meas2Model linearize_2d(const TrackState3D& state, const CameraModel& cam, const NoiseConfig& noise);
Meas2OnlyModel linearize_2d_only(const TrackState2D& state, const NoiseConfig& noise);

// Squared Mahalanobis distances under the three measurement models. The 3D
// model wraps the yaw component of the innovation.
double mahalanobis_sq(const TrackState3D& state, const Box3d& meas, const NoiseConfig& noise);
double mahalanobis_sq(const TrackState3D& state, const Box2d& meas, const CameraModel& cam,
                      const NoiseConfig& noise);
double mahalanobis_sq(const TrackState2D& state, const Box2d& meas, const NoiseConfig& noise);

// Probabilistic data association updates. betas has one entry per detection
// plus the leading miss probability beta_0; it must be nonnegative and sum
// to 1 within 1e-6.
TrackState3D pda_update_3d(const TrackState3D& state, const std::vector<Box3d>& detections,
                           const Eigen::VectorXd& betas, const NoiseConfig& noise);
TrackState3D pda_update_2d(const TrackState3D& state, const std::vector<Box2d>& detections,
                           const Eigen::VectorXd& betas, const CameraModel& cam,
                           const NoiseConfig& noise);
TrackState2D update_2d_only_mode(const TrackState2D& state, const std::vector<Box2d>& detections,
                                 const Eigen::VectorXd& betas, const NoiseConfig& noise);

}  // namespace ftk
