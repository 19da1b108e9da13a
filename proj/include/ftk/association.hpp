// Track-detection association: cost matrices, chi-square gating, cluster
// decomposition of the gated bipartite graph, entropy-based cost selection,
// and JPDA marginal probabilities (exact enumeration and Murty m-best).
#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <vector>

#include "ftk/estimation.hpp"
#include "ftk/geometry.hpp"

namespace ftk {

using GateMask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

struct DimensionMismatch : std::runtime_error {
  DimensionMismatch() : std::runtime_error("feature dimensions do not match") {}
};
struct ClusterTooLarge : std::runtime_error {
  ClusterTooLarge() : std::runtime_error("cluster too large for exact JPDA enumeration") {}
};

enum class CostKind { Appearance, Iou3D, Iou2D };

// tracks x detections costs; gate_mask marks pairs inside the chi-square gate.
struct CostMatrix {
  Eigen::MatrixXd values;
  GateMask gate_mask;
  CostKind kind = CostKind::Iou3D;
};

// Connected component of the gated track-detection graph.
struct Cluster {
  std::vector<int> track_indices;
  std::vector<int> detection_indices;
};

// Marginal association probabilities; column 0 is the miss hypothesis.
struct AssociationResult {
  Eigen::MatrixXd marginals;  // tracks x (detections + 1)
};

// Exact-vs-m-best switch for per-cluster JPDA.
struct JpdaPolicy {
  int mbest_m = 50;
  int exact_max_dim = 4;          // min(tracks, detections) allowed for exact
  long exact_max_events = 10000;  // joint-event budget for exact
};

CostMatrix appearance_cost(const std::vector<Eigen::VectorXd>& track_features,
                           const std::vector<Eigen::VectorXd>& det_features);
CostMatrix iou_cost_3d(const std::vector<Box3d>& track_boxes, const std::vector<Box3d>& det_boxes);
CostMatrix iou_cost_2d(const std::vector<Box2d>& track_boxes, const std::vector<Box2d>& det_boxes);

// Gating masks under the three measurement models; a SingularInnovation or
// BehindCamera track contributes an all-false row.
GateMask gate_3d(const std::vector<TrackState3D>& tracks, const std::vector<Box3d>& detections,
                 const NoiseConfig& noise, double quantile = 0.95);
GateMask gate_2d(const std::vector<TrackState3D>& tracks, const std::vector<Box2d>& detections,
                 const CameraModel& cam, const NoiseConfig& noise, double quantile = 0.95);
GateMask gate_2d_only(const std::vector<TrackState2D>& tracks, const std::vector<Box2d>& detections,
                      const NoiseConfig& noise, double quantile = 0.95);

std::vector<Cluster> build_clusters(const GateMask& mask);

// Detections gated to no track; these are the new-track candidates.
std::vector<int> ungated_detections(const GateMask& mask);

// Chooses the matrix whose per-track softmax cost distribution has the lower
// mean entropy over the cluster; ties go to the IoU matrix.
const CostMatrix& entropy_select(const CostMatrix& c_app, const CostMatrix& c_iou,
                                 const Cluster& cluster);

// Exact JPDA marginals for one cluster by joint-event enumeration. The result
// covers the full matrix; rows outside the cluster keep miss probability 1.
AssociationResult jpda_exact(const CostMatrix& cost, const Cluster& cluster, double p_detect,
                             double lambda);

// Approximate marginals from the m lowest-cost joint events.
AssociationResult jpda_mbest(const CostMatrix& cost, const Cluster& cluster, double p_detect,
                             double lambda, int m);

// Per-cluster JPDA over all clusters of the gated graph, exact when the
// cluster fits the policy budget and m-best otherwise.
AssociationResult associate(const CostMatrix& cost, double p_detect, double lambda,
                            const JpdaPolicy& policy = {});

}  // namespace ftk
