#include "ftk/estimation.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace ftk {
namespace {

constexpr double kMinDepth = 0.01;      // meters
constexpr double kMinExtent = 0.01;     // floor for box dimensions in the mean
constexpr double kMaxCondition = 1e12;  // SingularInnovation threshold
constexpr int kThetaIdx = 6;

void check_betas(const Eigen::VectorXd& betas, std::size_t n_detections) {
  if (betas.size() != static_cast<Eigen::Index>(n_detections) + 1) {
    throw std::invalid_argument("betas must have one entry per detection plus the miss term");
  }
  if ((betas.array() < 0.0).any() || std::abs(betas.sum() - 1.0) > 1e-6) {
    throw std::invalid_argument("betas must be nonnegative and sum to 1");
  }
}

// Inverts a small symmetric matrix, rejecting ill-conditioned inputs.
template <int N>
Eigen::Matrix<double, N, N> checked_inverse(const Eigen::Matrix<double, N, N>& s) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, N, N>> eig(s);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (lo <= 0.0 || hi / lo > kMaxCondition) throw SingularInnovation();
  return eig.eigenvectors() * eig.eigenvalues().cwiseInverse().asDiagonal() *
         eig.eigenvectors().transpose();
}

template <int N>
void symmetrize(Eigen::Matrix<double, N, N>& p) {
  p = (0.5 * (p + p.transpose())).eval();
}

// Shared PDAF core: given the predicted state, per-detection innovations and
// the gain, applies the combined innovation and the spread-of-innovations
// covariance. StateDim x MeasDim gain, innovations as columns.
template <int StateDim, int MeasDim>
void pdaf_combine(Eigen::Matrix<double, StateDim, 1>& mean,
                  Eigen::Matrix<double, StateDim, StateDim>& cov,
                  const Eigen::Matrix<double, StateDim, MeasDim>& gain,
                  const Eigen::Matrix<double, MeasDim, MeasDim>& s,
                  const Eigen::Matrix<double, MeasDim, Eigen::Dynamic>& innovations,
                  const Eigen::VectorXd& betas) {
  using MeasVec = Eigen::Matrix<double, MeasDim, 1>;
  const double beta0 = betas(0);

  MeasVec nu = MeasVec::Zero();
  Eigen::Matrix<double, MeasDim, MeasDim> spread = Eigen::Matrix<double, MeasDim, MeasDim>::Zero();
  for (Eigen::Index j = 0; j < innovations.cols(); ++j) {
    const MeasVec nuj = innovations.col(j);
    nu += betas(j + 1) * nuj;
    spread += betas(j + 1) * nuj * nuj.transpose();
  }
  spread -= nu * nu.transpose();

  const Eigen::Matrix<double, StateDim, StateDim> p_updated =
      cov - gain * s * gain.transpose();
  cov = beta0 * cov + (1.0 - beta0) * p_updated + gain * spread * gain.transpose();
  mean += gain * nu;
  symmetrize<StateDim>(cov);
}

}  // namespace

NoiseConfig::NoiseConfig() {
  q3 = make_q3(0.05, 0.01, 0.01, 0.1);
  q2 = make_q2(1.0, 0.5, 2.0);
  r3 = make_r3(0.1, 0.05, 0.05);
  r2 = MeasVec2::Constant(25.0);
}

StateVec3 NoiseConfig::make_q3(double pos, double size, double theta, double vel) {
  StateVec3 q;
  q << pos, pos, pos, size, size, size, theta, vel, vel;
  return q;
}

StateVec2 NoiseConfig::make_q2(double pos, double size, double vel) {
  StateVec2 q;
  q << pos, pos, size, size, vel, vel;
  return q;
}

MeasVec3 NoiseConfig::make_r3(double pos, double size, double theta) {
  MeasVec3 r;
  r << pos, pos, pos, size, size, size, theta;
  return r;
}

MeasVec3 measurement_from_box(const Box3d& b) {
  MeasVec3 z;
  z << b.x, b.y, b.z, b.l, b.h, b.w, b.theta;
  return z;
}

Box3d box_from_measurement(const MeasVec3& z) {
  return Box3d{z(0), z(1), z(2), z(3), z(5), z(4), z(6)};
}

Box3d box_from_state(const TrackState3D& s) {
  return box_from_measurement(s.mean.head<kMeasDim3>());
}

MeasVec2 measurement_from_box(const Box2d& b) {
  MeasVec2 z;
  z << b.u, b.v, b.w, b.h;
  return z;
}

Box2d box_from_measurement2(const MeasVec2& z) {
  return Box2d{z(0), z(1), z(2), z(3)};
}

TrackState3D predict(const TrackState3D& state, double dt, const NoiseConfig& noise) {
  if (dt <= 0.0) throw std::invalid_argument("predict: dt must be positive");
  StateCov3 f = StateCov3::Identity();
  f(0, 7) = dt;
  f(2, 8) = dt;
  TrackState3D out;
  out.mean = state.mean;
  out.mean(0) += dt * state.mean(7);
  out.mean(2) += dt * state.mean(8);
  out.cov = f * state.cov * f.transpose();
  out.cov += noise.q3.asDiagonal();
  symmetrize<kStateDim3>(out.cov);
  return out;
}

TrackState2D predict(const TrackState2D& state, double dt, const NoiseConfig& noise) {
  if (dt <= 0.0) throw std::invalid_argument("predict: dt must be positive");
  StateCov2 f = StateCov2::Identity();
  f(0, 4) = dt;
  f(1, 5) = dt;
  TrackState2D out;
  out.mean = state.mean;
  out.mean(0) += dt * state.mean(4);
  out.mean(1) += dt * state.mean(5);
  out.cov = f * state.cov * f.transpose();
  out.cov += noise.q2.asDiagonal();
  symmetrize<kStateDim2>(out.cov);
  return out;
}

Box2d project_to_image(const Box3d& box, const CameraModel& cam) {
  const double c = std::cos(box.theta), s = std::sin(box.theta);
  const double hl = 0.5 * box.l, hw = 0.5 * box.w;
  double umin = 0, umax = 0, vmin = 0, vmax = 0;
  bool first = true;
  for (int ix = -1; ix <= 1; ix += 2) {
    for (int iy = 0; iy <= 1; ++iy) {
      for (int iz = -1; iz <= 1; iz += 2) {
        const double lx = ix * hl, ly = iy * box.h, lz = iz * hw;
        Eigen::Vector3d p(c * lx - s * lz + box.x, ly + box.y, s * lx + c * lz + box.z);
        p = cam.rotation * p + cam.translation;
        if (p.z() <= kMinDepth) throw BehindCamera();
        const double u = cam.fx * p.x() / p.z() + cam.cx;
        const double v = cam.fy * p.y() / p.z() + cam.cy;
        if (first) {
          umin = umax = u;
          vmin = vmax = v;
          first = false;
        } else {
          umin = std::min(umin, u);
          umax = std::max(umax, u);
          vmin = std::min(vmin, v);
          vmax = std::max(vmax, v);
        }
      }
    }
  }
  return Box2d{umin, vmin, umax - umin, vmax - vmin};
}

Box2d project_to_image(const TrackState3D& state, const CameraModel& cam) {
  return project_to_image(box_from_state(state), cam);
}

Eigen::Matrix<double, kMeasDim2, kStateDim3> projection_jacobian(const StateVec3& mean,
                                                                 const CameraModel& cam,
                                                                 double step) {
  Eigen::Matrix<double, kMeasDim2, kStateDim3> jac;
  for (int i = 0; i < kStateDim3; ++i) {
    StateVec3 hi = mean, lo = mean;
    hi(i) += step;
    lo(i) -= step;
    TrackState3D sh, sl;
    sh.mean = hi;
    sl.mean = lo;
    const MeasVec2 zh = measurement_from_box(project_to_image(sh, cam));
    const MeasVec2 zl = measurement_from_box(project_to_image(sl, cam));
    jac.col(i) = (zh - zl) / (2.0 * step);
  }
  return jac;
}

Meas3Model linearize_3d(const TrackState3D& state, const NoiseConfig& noise) {
  Meas3Model m;
  m.z_pred = state.mean.head<kMeasDim3>();
  m.s = state.cov.topLeftCorner<kMeasDim3, kMeasDim3>();
  m.s += noise.r3.asDiagonal();
  m.s_inv = checked_inverse<kMeasDim3>(m.s);
  return m;
}

Meas2Model linearize_2d(const TrackState3D& state, const CameraModel& cam,
                        const NoiseConfig& noise) {
  Meas2Model m;
  m.z_pred = measurement_from_box(project_to_image(state, cam));
  m.jac = projection_jacobian(state.mean, cam);
  m.s = m.jac * state.cov * m.jac.transpose();
  m.s += noise.r2.asDiagonal();
  m.s_inv = checked_inverse<kMeasDim2>(m.s);
  return m;
}

Meas2OnlyModel linearize_2d_only(const TrackState2D& state, const NoiseConfig& noise) {
  Meas2OnlyModel m;
  m.z_pred = state.mean.head<kMeasDim2>();
  m.s = state.cov.topLeftCorner<kMeasDim2, kMeasDim2>();
  m.s += noise.r2.asDiagonal();
  m.s_inv = checked_inverse<kMeasDim2>(m.s);
  return m;
}

double mahalanobis_sq(const TrackState3D& state, const Box3d& meas, const NoiseConfig& noise) {
  const Meas3Model m = linearize_3d(state, noise);
  MeasVec3 nu = measurement_from_box(meas) - m.z_pred;
  nu(kThetaIdx) = wrap_angle(nu(kThetaIdx));
  return nu.dot(m.s_inv * nu);
}

double mahalanobis_sq(const TrackState3D& state, const Box2d& meas, const CameraModel& cam,
                      const NoiseConfig& noise) {
  const Meas2Model m = linearize_2d(state, cam, noise);
  const MeasVec2 nu = measurement_from_box(meas) - m.z_pred;
  return nu.dot(m.s_inv * nu);
}

double mahalanobis_sq(const TrackState2D& state, const Box2d& meas, const NoiseConfig& noise) {
  const Meas2OnlyModel m = linearize_2d_only(state, noise);
  const MeasVec2 nu = measurement_from_box(meas) - m.z_pred;
  return nu.dot(m.s_inv * nu);
}

TrackState3D pda_update_3d(const TrackState3D& state, const std::vector<Box3d>& detections,
                           const Eigen::VectorXd& betas, const NoiseConfig& noise) {
  check_betas(betas, detections.size());
  TrackState3D out = state;
  if (detections.empty()) return out;

  const Meas3Model m = linearize_3d(state, noise);
  const Eigen::Matrix<double, kStateDim3, kMeasDim3> gain =
      state.cov.leftCols<kMeasDim3>() * m.s_inv;

  Eigen::Matrix<double, kMeasDim3, Eigen::Dynamic> innovations(kMeasDim3, detections.size());
  for (std::size_t j = 0; j < detections.size(); ++j) {
    MeasVec3 nu = measurement_from_box(detections[j]) - m.z_pred;
    nu(kThetaIdx) = wrap_angle(nu(kThetaIdx));
    innovations.col(j) = nu;
  }
  pdaf_combine<kStateDim3, kMeasDim3>(out.mean, out.cov, gain, m.s, innovations, betas);
  out.mean(kThetaIdx) = wrap_angle(out.mean(kThetaIdx));
  for (int i = 3; i <= 5; ++i) out.mean(i) = std::max(out.mean(i), kMinExtent);
  return out;
}

TrackState3D pda_update_2d(const TrackState3D& state, const std::vector<Box2d>& detections,
                           const Eigen::VectorXd& betas, const CameraModel& cam,
                           const NoiseConfig& noise) {
  check_betas(betas, detections.size());
  TrackState3D out = state;
  if (detections.empty()) return out;

  const Meas2Model m = linearize_2d(state, cam, noise);
  const Eigen::Matrix<double, kStateDim3, kMeasDim2> gain =
      state.cov * m.jac.transpose() * m.s_inv;

  Eigen::Matrix<double, kMeasDim2, Eigen::Dynamic> innovations(kMeasDim2, detections.size());
  for (std::size_t j = 0; j < detections.size(); ++j) {
    innovations.col(j) = measurement_from_box(detections[j]) - m.z_pred;
  }
  pdaf_combine<kStateDim3, kMeasDim2>(out.mean, out.cov, gain, m.s, innovations, betas);
  out.mean(kThetaIdx) = wrap_angle(out.mean(kThetaIdx));
  for (int i = 3; i <= 5; ++i) out.mean(i) = std::max(out.mean(i), kMinExtent);
  return out;
}

TrackState2D update_2d_only_mode(const TrackState2D& state, const std::vector<Box2d>& detections,
                                 const Eigen::VectorXd& betas, const NoiseConfig& noise) {
  check_betas(betas, detections.size());
  TrackState2D out = state;
  if (detections.empty()) return out;

  const Meas2OnlyModel m = linearize_2d_only(state, noise);
  const Eigen::Matrix<double, kStateDim2, kMeasDim2> gain =
      state.cov.leftCols<kMeasDim2>() * m.s_inv;

  Eigen::Matrix<double, kMeasDim2, Eigen::Dynamic> innovations(kMeasDim2, detections.size());
  for (std::size_t j = 0; j < detections.size(); ++j) {
    innovations.col(j) = measurement_from_box(detections[j]) - m.z_pred;
  }
  pdaf_combine<kStateDim2, kMeasDim2>(out.mean, out.cov, gain, m.s, innovations, betas);
  for (int i = 2; i <= 3; ++i) out.mean(i) = std::max(out.mean(i), kMinExtent);
  return out;
}

}  // namespace ftk
