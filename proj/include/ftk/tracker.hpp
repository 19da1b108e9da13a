// Per-frame tracking orchestration: prediction, two-step JPDA association,
// dual 3D+2D measurement update, track lifecycle and appearance bookkeeping.
#pragma once

#include <Eigen/Core>

#include <functional>
#include <stdexcept>
#include <variant>
#include <vector>

#include "ftk/association.hpp"
#include "ftk/detection.hpp"
#include "ftk/estimation.hpp"

namespace ftk {

struct NonMonotonicTimestamp : std::runtime_error {
  NonMonotonicTimestamp() : std::runtime_error("frame timestamps must be strictly increasing") {}
};

enum class TrackStatus { Tentative, Confirmed, Dead };
enum class TrackerMode { Mode3D, Mode2DOnly };

struct Track {
  int id = 0;
  TrackStatus status = TrackStatus::Tentative;
  int consecutive_hits = 0;
  int consecutive_misses = 0;
  std::variant<TrackState3D, TrackState2D> state;
  Eigen::VectorXd feature;  // unit-norm fused (or 2D-only) appearance
};

struct TrackerParams {
  TrackerMode mode = TrackerMode::Mode3D;
  double p_assn = 0.65;
  int n_init = 2;
  int n_term = 2;
  double gate_quantile = 0.95;
  // A track counts as matched this frame when its JPDA miss probability in
  // either association step falls below this threshold.
  double hit_miss_threshold = 0.5;
  bool use_two_step = true;  // step-2 association of 2D-only detections
  double birth_range = 5.0;  // camera-ray depth for 2D-only births, meters
  double birth_depth_var = 25.0;
  double initial_velocity_var = 1.0;
  NoiseConfig noise;
  JpdaPolicy jpda;
};

struct TrackRecord {
  long frame = 0;
  int track_id = 0;
  bool has2d = false;
  Box2d box2;
  bool has3d = false;
  Box3d box3;
  char status = 'C';
};

// Concatenates the two descriptors and scales the result to unit norm.
Eigen::VectorXd fuse_features(const Eigen::VectorXd& f2d, const Eigen::VectorXd& f3d);

// Pluggable replacement for fuse_features (e.g. a learned combiner); must
// produce a unit-norm vector.
using FeatureCombiner =
    std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&)>;

class Tracker {
 public:
  explicit Tracker(TrackerParams params, FeatureCombiner combiner = nullptr);

  // Processes one frame and returns the confirmed-track outputs.
  std::vector<TrackRecord> step(const FrameBundle& frame);

  const std::vector<Track>& tracks() const { return tracks_; }
  const TrackerParams& params() const { return params_; }

 private:
  struct PairedDetection {  // detection with both 2D and 3D boxes
    int det2d_index;
    int det3d_index;
  };

  std::vector<TrackRecord> step_3d(const FrameBundle& frame);
  std::vector<TrackRecord> step_2d_only(const FrameBundle& frame);

  void predict_all(double dt);
  void apply_lifecycle(const std::vector<bool>& hit);
  void update_appearance(const AssociationResult& assoc, const GateMask& mask,
                         const std::vector<Eigen::VectorXd>& det_features,
                         std::vector<bool>& updated);
  std::vector<TrackRecord> emit(const FrameBundle& frame) const;

  Track make_track_3d(const Detection3D& det3d, const Detection2D& det2d) const;
  Track make_track_from_2d(const Detection2D& det, const CameraModel& cam) const;
  Track make_track_2d_mode(const Detection2D& det) const;

  TrackerParams params_;
  FeatureCombiner fuse_;
  std::vector<Track> tracks_;
  int next_id_ = 0;
  double last_timestamp_ = 0.0;
  bool has_previous_frame_ = false;
};

}  // namespace ftk
