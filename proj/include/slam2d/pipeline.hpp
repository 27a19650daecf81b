#pragma once

#include <chrono>
#include <cmath>
#include <cstddef>
#include <deque>
#include <future>
#include <iostream>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "slam2d/errors.hpp"
#include "slam2d/factor_graph.hpp"
#include "slam2d/geometry.hpp"
#include "slam2d/registration.hpp"
#include "slam2d/scan.hpp"
#include "slam2d/trajectory.hpp"

namespace slam2d {

struct PipelineConfig {
  int window = 8;             // poses each new pose connects to, fully connected
  double sigma_xy = 0.05;     // between-factor translation sigma, metres
  double sigma_theta = 0.02;  // between-factor rotation sigma, radians
  double prior_sigma = 1e-3;  // anchor sigma on the first pose
  // keyframing; 0 disables (every scan becomes a pose)
  double keyframe_min_translation = 0.0;  // metres
  double keyframe_min_rotation = 0.0;     // radians
  MatchConfig gicp;                       // max_corr_dist / max_iterations / tol
  int cov_neighbors = 20;                 // k for covariance estimation
  OptimizerConfig optimizer;

  void validate() const {
    if (window < 1) throw BadConfig("window must be >= 1");
    if (!(sigma_xy > 0.0) || !(sigma_theta > 0.0)) throw BadConfig("sigmas must be > 0");
    if (!(prior_sigma > 0.0)) throw BadConfig("prior_sigma must be > 0");
    if (keyframe_min_translation < 0.0 || keyframe_min_rotation < 0.0) {
      throw BadConfig("keyframe thresholds must be >= 0");
    }
    if (!(gicp.max_corr_dist > 0.0) || gicp.max_iterations < 1 || !(gicp.tol > 0.0)) {
      throw BadConfig("invalid gicp config");
    }
    if (cov_neighbors < 3) throw BadConfig("cov_neighbors must be >= 3");
  }
};

struct PoseEstimate {
  double t = 0.0;
  Pose2 pose;
  VarId var = 0;
};

struct PipelineStats {
  std::size_t scans_accepted = 0;
  std::size_t scans_skipped = 0;
  double total_process_seconds = 0.0;   // accepted scans only
  double total_optimize_seconds = 0.0;  // optimizer share of the above
};

/// Scan-to-graph dataflow: each accepted scan becomes a pose variable,
/// GICP-matched against every scan in the sliding window (consecutive plus
/// skip connections), then the whole graph is re-optimized warm-started from
/// the previous estimate and the new pose is emitted.
class SlamPipeline {
 public:
  explicit SlamPipeline(const PipelineConfig& cfg) : cfg_(cfg) { cfg_.validate(); }

  /// Folds one scan into the graph. Returns the new pose estimate, or
  /// nothing when keyframing rejected the scan. Throws DegenerateScan when
  /// the scan has too few valid returns and MatchFailure when the mandatory
  /// consecutive match fails; both leave the state unchanged.
  std::optional<PoseEstimate> process_scan(const LaserScan& scan) {
    if (!window_.empty() && !(scan.t > last_t_)) {
      throw std::invalid_argument("process_scan: scan timestamps must increase");
    }
    const auto started = std::chrono::steady_clock::now();

    PointCloud2 cloud;
    try {
      cloud = estimate_covariances(scan_to_cloud(scan), cfg_.cov_neighbors);
    } catch (const EmptyCloud& e) {
      ++stats_.scans_skipped;
      throw DegenerateScan(e.what());
    }

    if (window_.empty()) {
      return accept_first(scan.t, std::move(cloud), started);
    }

    const Pose2 prev_pose = values_.at(window_.back().id);
    const Pose2 predicted = compose(prev_pose, last_motion_);

    // mandatory consecutive match, also the keyframe motion measurement
    MatchResult consecutive;
    try {
      consecutive = gicp_align(cloud, window_.back().cloud,
                               between(prev_pose, predicted), cfg_.gicp);
    } catch (const NoCorrespondences& e) {
      ++stats_.scans_skipped;
      throw MatchFailure(e.what());
    }
    const Pose2& motion = consecutive.relative_pose;
    if (cfg_.keyframe_min_translation > 0.0 || cfg_.keyframe_min_rotation > 0.0) {
      if (std::hypot(motion.x(), motion.y()) < cfg_.keyframe_min_translation &&
          std::abs(motion.theta()) < cfg_.keyframe_min_rotation) {
        ++stats_.scans_skipped;
        return std::nullopt;
      }
    }

    const VarId id = next_id_++;
    values_.insert(id, predicted);
    stamps_.push_back(scan.t);
    graph_.add(BetweenFactor(window_.back().id, id, consecutive.relative_pose, between_noise()));

    // skip matches against the rest of the window, pairwise independent
    const std::size_t n_skip = window_.size() - 1;
    std::vector<std::future<std::optional<MatchResult>>> futures;
    futures.reserve(n_skip);
    for (std::size_t i = 0; i < n_skip; ++i) {
      const WindowEntry& entry = window_[i];
      const Pose2 init = between(values_.at(entry.id), predicted);
      futures.push_back(std::async(std::launch::async,
                                   [this, &cloud, &entry, init]() -> std::optional<MatchResult> {
                                     try {
                                       return gicp_align(cloud, entry.cloud, init, cfg_.gicp);
                                     } catch (const Error&) {
                                       return std::nullopt;  // skip factor dropped
                                     }
                                   }));
    }
    for (std::size_t i = 0; i < n_skip; ++i) {
      if (auto match = futures[i].get()) {
        graph_.add(BetweenFactor(window_[i].id, id, match->relative_pose, between_noise()));
      }
    }

    const auto opt_started = std::chrono::steady_clock::now();
    auto [optimized, report] = optimize(graph_, values_, cfg_.optimizer);
    values_ = std::move(optimized);
    last_report_ = report;
    stats_.total_optimize_seconds = stats_.total_optimize_seconds + seconds_since(opt_started);

    window_.push_back({id, std::move(cloud)});
    if (window_.size() > static_cast<std::size_t>(cfg_.window)) {
      window_.pop_front();
    }
    last_motion_ = between(prev_pose, values_.at(id));
    last_t_ = scan.t;
    ++stats_.scans_accepted;
    stats_.total_process_seconds += seconds_since(started);
    return PoseEstimate{scan.t, values_.at(id), id};
  }

  /// Post-hoc optimized trajectory over all accepted scans.
  Trajectory trajectory() const {
    Trajectory out;
    out.reserve(values_.size());
    for (std::size_t i = 0; i < values_.entries().size(); ++i) {
      out.push_back({stamps_[i], values_.entries()[i].pose});
    }
    return out;
  }

  const FactorGraph& graph() const { return graph_; }
  const Values& values() const { return values_; }
  const PipelineStats& stats() const { return stats_; }
  const SolveReport& last_report() const { return last_report_; }
  const PipelineConfig& config() const { return cfg_; }

 private:
  struct WindowEntry {
    VarId id;
    PointCloud2 cloud;
  };

  static double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }

  NoiseModel between_noise() const {
    return NoiseModel::from_sigmas(cfg_.sigma_xy, cfg_.sigma_xy, cfg_.sigma_theta);
  }

  std::optional<PoseEstimate> accept_first(double t, PointCloud2 cloud,
                                           std::chrono::steady_clock::time_point started) {
    const VarId id = next_id_++;
    values_.insert(id, Pose2::identity());
    stamps_.push_back(t);
    graph_.add(PriorFactor{id, Pose2::identity(),
                           NoiseModel::from_sigmas(cfg_.prior_sigma, cfg_.prior_sigma,
                                                   cfg_.prior_sigma)});
    window_.push_back({id, std::move(cloud)});
    last_t_ = t;
    ++stats_.scans_accepted;
    stats_.total_process_seconds += seconds_since(started);
    return PoseEstimate{t, values_.at(id), id};
  }

  PipelineConfig cfg_;
  FactorGraph graph_;
  Values values_;
  std::deque<WindowEntry> window_;
  std::vector<double> stamps_;  // per variable, insertion order
  VarId next_id_ = 0;
  Pose2 last_motion_;
  double last_t_ = -std::numeric_limits<double>::infinity();
  PipelineStats stats_;
  SolveReport last_report_;
};

/// Folds every scan through a fresh pipeline; per-scan failures are logged
/// to stderr and skipped. Returns the post-hoc optimized trajectory.
inline Trajectory run_offline(const PipelineConfig& cfg, const std::vector<LaserScan>& scans,
                              PipelineStats* stats_out = nullptr) {
  SlamPipeline pipeline(cfg);
  for (const LaserScan& scan : scans) {
    try {
      pipeline.process_scan(scan);
    } catch (const DegenerateScan& e) {
      std::cerr << "warning: skipping scan: " << e.what() << '\n';
    } catch (const MatchFailure& e) {
      std::cerr << "warning: skipping scan (consecutive match failed): " << e.what() << '\n';
    }
  }
  if (stats_out != nullptr) {
    *stats_out = pipeline.stats();
  }
  return pipeline.trajectory();
}

}  // namespace slam2d
