#include "ftk/association.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ftk/assignment.hpp"
#include "ftk/chi2.hpp"

namespace ftk {
namespace {

constexpr double kEntropyTau = 1.0;
constexpr double kTinyProb = 1e-300;

// Counts joint association events of a cluster, stopping early at the limit.
long count_events(const GateMask& mask, const Cluster& cl, long limit) {
  const int nt = static_cast<int>(cl.track_indices.size());
  const int nd = static_cast<int>(cl.detection_indices.size());
  std::vector<char> used(nd, 0);
  long count = 0;
  bool over = false;

  auto rec = [&](auto&& self, int ti) -> void {
    if (over) return;
    if (ti == nt) {
      if (++count > limit) over = true;
      return;
    }
    self(self, ti + 1);  // miss
    for (int dj = 0; dj < nd && !over; ++dj) {
      if (used[dj]) continue;
      if (!mask(cl.track_indices[ti], cl.detection_indices[dj])) continue;
      used[dj] = 1;
      self(self, ti + 1);
      used[dj] = 0;
    }
  };
  rec(rec, 0);
  return over ? limit + 1 : count;
}

// Miss-augmented assignment matrix whose complete assignments are exactly the
// joint events of the cluster: columns [0, nd) are the detections, column
// nd + i is track i's own miss. Event cost is the negative log weight up to a
// common constant.
Eigen::MatrixXd augmented_cost(const CostMatrix& cost, const Cluster& cl, double p_detect,
                               double lambda) {
  const int nt = static_cast<int>(cl.track_indices.size());
  const int nd = static_cast<int>(cl.detection_indices.size());
  const double log_pd = std::log(std::max(p_detect, kTinyProb));
  const double log_miss = std::log(std::max(1.0 - p_detect, kTinyProb));
  const double log_lambda = std::log(std::max(lambda, kTinyProb));

  Eigen::MatrixXd aug = Eigen::MatrixXd::Constant(nt, nd + nt, kUnassignable);
  for (int i = 0; i < nt; ++i) {
    for (int j = 0; j < nd; ++j) {
      if (!cost.gate_mask(cl.track_indices[i], cl.detection_indices[j])) continue;
      aug(i, j) = cost.values(cl.track_indices[i], cl.detection_indices[j]) - log_pd + log_lambda;
    }
    aug(i, nd + i) = -log_miss;
  }
  return aug;
}

AssociationResult neutral_result(Eigen::Index n_tracks, Eigen::Index n_detections) {
  AssociationResult out;
  out.marginals = Eigen::MatrixXd::Zero(n_tracks, n_detections + 1);
  out.marginals.col(0).setOnes();
  return out;
}

}  // namespace

CostMatrix appearance_cost(const std::vector<Eigen::VectorXd>& track_features,
                           const std::vector<Eigen::VectorXd>& det_features) {
  CostMatrix out;
  out.kind = CostKind::Appearance;
  out.values.resize(track_features.size(), det_features.size());
  out.gate_mask = GateMask::Constant(track_features.size(), det_features.size(), true);
  for (std::size_t i = 0; i < track_features.size(); ++i) {
    for (std::size_t j = 0; j < det_features.size(); ++j) {
      if (track_features[i].size() != det_features[j].size()) throw DimensionMismatch();
      out.values(i, j) = (track_features[i] - det_features[j]).norm();
    }
  }
  return out;
}

CostMatrix iou_cost_3d(const std::vector<Box3d>& track_boxes, const std::vector<Box3d>& det_boxes) {
  CostMatrix out;
  out.kind = CostKind::Iou3D;
  out.values.resize(track_boxes.size(), det_boxes.size());
  out.gate_mask = GateMask::Constant(track_boxes.size(), det_boxes.size(), true);
  for (std::size_t i = 0; i < track_boxes.size(); ++i) {
    for (std::size_t j = 0; j < det_boxes.size(); ++j) {
      out.values(i, j) = 1.0 - iou3d_aligned(track_boxes[i], det_boxes[j]);
    }
  }
  return out;
}

CostMatrix iou_cost_2d(const std::vector<Box2d>& track_boxes, const std::vector<Box2d>& det_boxes) {
  CostMatrix out;
  out.kind = CostKind::Iou2D;
  out.values.resize(track_boxes.size(), det_boxes.size());
  out.gate_mask = GateMask::Constant(track_boxes.size(), det_boxes.size(), true);
  for (std::size_t i = 0; i < track_boxes.size(); ++i) {
    for (std::size_t j = 0; j < det_boxes.size(); ++j) {
      out.values(i, j) = 1.0 - iou2d(track_boxes[i], det_boxes[j]);
    }
  }
  return out;
}

GateMask gate_3d(const std::vector<TrackState3D>& tracks, const std::vector<Box3d>& detections,
                 const NoiseConfig& noise, double quantile) {
  const double threshold = chi_square_quantile(quantile, kMeasDim3);
  GateMask mask = GateMask::Constant(tracks.size(), detections.size(), false);
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    Meas3Model model;
    try {
      model = linearize_3d(tracks[i], noise);
    } catch (const SingularInnovation&) {
      continue;
    }
    for (std::size_t j = 0; j < detections.size(); ++j) {
      MeasVec3 nu = measurement_from_box(detections[j]) - model.z_pred;
      nu(6) = wrap_angle(nu(6));
      mask(i, j) = nu.dot(model.s_inv * nu) <= threshold;
    }
  }
  return mask;
}

GateMask gate_2d(const std::vector<TrackState3D>& tracks, const std::vector<Box2d>& detections,
                 const CameraModel& cam, const NoiseConfig& noise, double quantile) {
  const double threshold = chi_square_quantile(quantile, kMeasDim2);
  GateMask mask = GateMask::Constant(tracks.size(), detections.size(), false);
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    Meas2Model model;
    try {
      model = linearize_2d(tracks[i], cam, noise);
    } catch (const SingularInnovation&) {
      continue;
    } catch (const BehindCamera&) {
      continue;
    }
    for (std::size_t j = 0; j < detections.size(); ++j) {
      const MeasVec2 nu = measurement_from_box(detections[j]) - model.z_pred;
      mask(i, j) = nu.dot(model.s_inv * nu) <= threshold;
    }
  }
  return mask;
}

GateMask gate_2d_only(const std::vector<TrackState2D>& tracks, const std::vector<Box2d>& detections,
                      const NoiseConfig& noise, double quantile) {
  const double threshold = chi_square_quantile(quantile, kMeasDim2);
  GateMask mask = GateMask::Constant(tracks.size(), detections.size(), false);
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    Meas2OnlyModel model;
    try {
      model = linearize_2d_only(tracks[i], noise);
    } catch (const SingularInnovation&) {
      continue;
    }
    for (std::size_t j = 0; j < detections.size(); ++j) {
      const MeasVec2 nu = measurement_from_box(detections[j]) - model.z_pred;
      mask(i, j) = nu.dot(model.s_inv * nu) <= threshold;
    }
  }
  return mask;
}

std::vector<Cluster> build_clusters(const GateMask& mask) {
  const int nt = static_cast<int>(mask.rows());
  const int nd = static_cast<int>(mask.cols());

  // Union-find over track nodes [0, nt) and detection nodes [nt, nt + nd).
  std::vector<int> parent(nt + nd);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  auto unite = [&](int a, int b) { parent[find(a)] = find(b); };

  for (int i = 0; i < nt; ++i) {
    for (int j = 0; j < nd; ++j) {
      if (mask(i, j)) unite(i, nt + j);
    }
  }

  std::vector<int> root_to_cluster(nt + nd, -1);
  std::vector<Cluster> clusters;
  for (int i = 0; i < nt; ++i) {
    const int root = find(i);
    if (root_to_cluster[root] < 0) {
      root_to_cluster[root] = static_cast<int>(clusters.size());
      clusters.emplace_back();
    }
    clusters[root_to_cluster[root]].track_indices.push_back(i);
  }
  for (int j = 0; j < nd; ++j) {
    const int root = find(nt + j);
    if (root_to_cluster[root] >= 0) {
      clusters[root_to_cluster[root]].detection_indices.push_back(j);
    }
  }
  return clusters;
}

std::vector<int> ungated_detections(const GateMask& mask) {
  std::vector<int> out;
  for (int j = 0; j < mask.cols(); ++j) {
    if (mask.rows() == 0 || !mask.col(j).any()) out.push_back(j);
  }
  return out;
}

namespace {

// Mean per-track entropy of the softmax cost distribution over the cluster's
// gated detections.
double mean_entropy(const CostMatrix& cost, const Cluster& cl) {
  double total = 0.0;
  int rows = 0;
  for (const int ti : cl.track_indices) {
    std::vector<double> logits;
    for (const int dj : cl.detection_indices) {
      if (cost.gate_mask(ti, dj)) logits.push_back(-cost.values(ti, dj) / kEntropyTau);
    }
    if (logits.empty()) continue;
    const double mx = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (const double l : logits) z += std::exp(l - mx);
    double h = 0.0;
    for (const double l : logits) {
      const double p = std::exp(l - mx) / z;
      if (p > 0.0) h -= p * std::log(p);
    }
    total += h;
    ++rows;
  }
  return rows > 0 ? total / rows : 0.0;
}

}  // namespace

const CostMatrix& entropy_select(const CostMatrix& c_app, const CostMatrix& c_iou,
                                 const Cluster& cluster) {
  return mean_entropy(c_app, cluster) < mean_entropy(c_iou, cluster) ? c_app : c_iou;
}

AssociationResult jpda_exact(const CostMatrix& cost, const Cluster& cluster, double p_detect,
                             double lambda) {
  const int nt = static_cast<int>(cluster.track_indices.size());
  const int nd = static_cast<int>(cluster.detection_indices.size());
  if (std::min(nt, nd) > 8) throw ClusterTooLarge();
  constexpr long kHardEventCap = 1000000;
  if (count_events(cost.gate_mask, cluster, kHardEventCap) > kHardEventCap) {
    throw ClusterTooLarge();
  }

  AssociationResult out = neutral_result(cost.values.rows(), cost.values.cols());
  if (nt == 0) return out;

  // choice[i]: -1 for miss, else index into cluster.detection_indices.
  std::vector<int> choice(nt, -1);
  std::vector<char> used(nd, 0);
  Eigen::MatrixXd weights = Eigen::MatrixXd::Zero(nt, nd + 1);
  double total = 0.0;

  auto rec = [&](auto&& self, int ti, double weight, int assigned) -> void {
    if (ti == nt) {
      const double w = weight * std::pow(lambda, nd - assigned);
      total += w;
      for (int i = 0; i < nt; ++i) weights(i, choice[i] + 1) += w;
      return;
    }
    choice[ti] = -1;
    self(self, ti + 1, weight * (1.0 - p_detect), assigned);
    for (int dj = 0; dj < nd; ++dj) {
      if (used[dj]) continue;
      const int row = cluster.track_indices[ti];
      const int col = cluster.detection_indices[dj];
      if (!cost.gate_mask(row, col)) continue;
      used[dj] = 1;
      choice[ti] = dj;
      self(self, ti + 1, weight * p_detect * std::exp(-cost.values(row, col)), assigned + 1);
      used[dj] = 0;
    }
    choice[ti] = -1;
  };
  rec(rec, 0, 1.0, 0);

  for (int i = 0; i < nt; ++i) {
    const int row = cluster.track_indices[i];
    if (total <= 0.0) {
      out.marginals(row, 0) = 1.0;
      continue;
    }
    out.marginals(row, 0) = weights(i, 0) / total;
    for (int dj = 0; dj < nd; ++dj) {
      out.marginals(row, cluster.detection_indices[dj] + 1) = weights(i, dj + 1) / total;
    }
  }
  return out;
}

AssociationResult jpda_mbest(const CostMatrix& cost, const Cluster& cluster, double p_detect,
                             double lambda, int m) {
  const int nt = static_cast<int>(cluster.track_indices.size());
  const int nd = static_cast<int>(cluster.detection_indices.size());
  AssociationResult out = neutral_result(cost.values.rows(), cost.values.cols());
  if (nt == 0) return out;

  const Eigen::MatrixXd aug = augmented_cost(cost, cluster, p_detect, lambda);
  const std::vector<Assignment> events = murty_kbest(aug, m);
  if (events.empty()) return out;

  const double base = events.front().cost;
  Eigen::MatrixXd weights = Eigen::MatrixXd::Zero(nt, nd + 1);
  double total = 0.0;
  for (const Assignment& ev : events) {
    const double w = std::exp(base - ev.cost);
    total += w;
    for (int i = 0; i < nt; ++i) {
      const int col = ev.row_to_col[i];
      weights(i, col < nd ? col + 1 : 0) += w;
    }
  }

  for (int i = 0; i < nt; ++i) {
    const int row = cluster.track_indices[i];
    out.marginals(row, 0) = weights(i, 0) / total;
    for (int dj = 0; dj < nd; ++dj) {
      out.marginals(row, cluster.detection_indices[dj] + 1) = weights(i, dj + 1) / total;
    }
  }
  return out;
}

AssociationResult associate(const CostMatrix& cost, double p_detect, double lambda,
                            const JpdaPolicy& policy) {
  AssociationResult out = neutral_result(cost.values.rows(), cost.values.cols());
  for (const Cluster& cl : build_clusters(cost.gate_mask)) {
    const int nt = static_cast<int>(cl.track_indices.size());
    const int nd = static_cast<int>(cl.detection_indices.size());
    const bool exact = std::min(nt, nd) <= policy.exact_max_dim &&
                       count_events(cost.gate_mask, cl, policy.exact_max_events) <=
                           policy.exact_max_events;
    const AssociationResult part = exact
                                       ? jpda_exact(cost, cl, p_detect, lambda)
                                       : jpda_mbest(cost, cl, p_detect, lambda, policy.mbest_m);
    for (const int ti : cl.track_indices) out.marginals.row(ti) = part.marginals.row(ti);
  }
  return out;
}

}  // namespace ftk
