#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <cstddef>
#include <ostream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "slam2d/errors.hpp"
#include "slam2d/geometry.hpp"

namespace slam2d {

/// Key of one pose variable.
using VarId = int;

/// Gaussian noise over local coordinates, cached with its square-root
/// information matrix W (upper triangular, W^T W = Sigma^-1).
class NoiseModel {
 public:
  explicit NoiseModel(const Cov3& sigma) : sigma_(sigma) {
    if (((sigma - sigma.transpose()).cwiseAbs().maxCoeff()) > 1e-12) {
      throw std::invalid_argument("NoiseModel: covariance must be symmetric");
    }
    const Eigen::LLT<Eigen::Matrix3d> llt(sigma.inverse());
    if (llt.info() != Eigen::Success) {
      throw std::invalid_argument("NoiseModel: covariance must be positive definite");
    }
    sqrt_info_ = llt.matrixL().transpose();
  }

  /// Diagonal model from per-component standard deviations.
  static NoiseModel from_sigmas(double sx, double sy, double stheta) {
    Cov3 sigma = Cov3::Zero();
    sigma.diagonal() << sx * sx, sy * sy, stheta * stheta;
    return NoiseModel(sigma);
  }

  const Cov3& covariance() const { return sigma_; }
  const Eigen::Matrix3d& sqrt_information() const { return sqrt_info_; }
  Eigen::Vector3d whiten(const Eigen::Vector3d& r) const { return sqrt_info_ * r; }

 private:
  Cov3 sigma_;
  Eigen::Matrix3d sqrt_info_;
};

/// Unary factor anchoring one variable to a measured pose.
struct PriorFactor {
  VarId var;
  Pose2 z;
  NoiseModel noise;
};

/// Binary factor on the relative pose between(a, b).
struct BetweenFactor {
  BetweenFactor(VarId var_a, VarId var_b, const Pose2& measurement, const NoiseModel& model)
      : a(var_a), b(var_b), z(measurement), noise(model) {
    if (a == b) {
      throw std::invalid_argument("BetweenFactor: variables must differ");
    }
  }
  VarId a;
  VarId b;
  Pose2 z;
  NoiseModel noise;
};

using Factor = std::variant<PriorFactor, BetweenFactor>;

/// Assignment of poses to variables, iterated in insertion order.
class Values {
 public:
  void insert(VarId id, const Pose2& pose) {
    if (index_.count(id)) {
      throw std::invalid_argument("Values: duplicate variable " + std::to_string(id));
    }
    index_[id] = entries_.size();
    entries_.push_back({id, pose});
  }

  bool contains(VarId id) const { return index_.count(id) > 0; }

  const Pose2& at(VarId id) const {
    const auto it = index_.find(id);
    if (it == index_.end()) {
      throw MissingVariable("variable " + std::to_string(id) + " is not in Values");
    }
    return entries_[it->second].pose;
  }

  void update(VarId id, const Pose2& pose) {
    const auto it = index_.find(id);
    if (it == index_.end()) {
      throw MissingVariable("variable " + std::to_string(id) + " is not in Values");
    }
    entries_[it->second].pose = pose;
  }

  std::size_t index_of(VarId id) const {
    const auto it = index_.find(id);
    if (it == index_.end()) {
      throw MissingVariable("variable " + std::to_string(id) + " is not in Values");
    }
    return it->second;
  }

  std::size_t size() const { return entries_.size(); }

  struct Entry {
    VarId id;
    Pose2 pose;
  };
  const std::vector<Entry>& entries() const { return entries_; }

 private:
  std::vector<Entry> entries_;
  std::unordered_map<VarId, std::size_t> index_;
};

class FactorGraph {
 public:
  void add(const PriorFactor& f) {
    factors_.emplace_back(f);
    ++num_priors_;
  }
  void add(const BetweenFactor& f) { factors_.emplace_back(f); }

  const std::vector<Factor>& factors() const { return factors_; }
  std::size_t size() const { return factors_.size(); }
  bool has_prior() const { return num_priors_ > 0; }

  /// Plain-text edge list, one factor per line:
  ///   prior <var> <x> <y> <theta> <sxx> <syy> <stt>
  ///   between <a> <b> <x> <y> <theta> <sxx> <syy> <stt>
  void dump(std::ostream& os) const {
    for (const Factor& f : factors_) {
      if (const auto* p = std::get_if<PriorFactor>(&f)) {
        const auto d = p->noise.covariance().diagonal();
        os << "prior " << p->var << ' ' << p->z.x() << ' ' << p->z.y() << ' ' << p->z.theta()
           << ' ' << d.x() << ' ' << d.y() << ' ' << d.z() << '\n';
      } else {
        const auto& b = std::get<BetweenFactor>(f);
        const auto d = b.noise.covariance().diagonal();
        os << "between " << b.a << ' ' << b.b << ' ' << b.z.x() << ' ' << b.z.y() << ' '
           << b.z.theta() << ' ' << d.x() << ' ' << d.y() << ' ' << d.z() << '\n';
      }
    }
  }

 private:
  std::vector<Factor> factors_;
  std::size_t num_priors_ = 0;
};

/// Whitened residual W * log(z^-1 * h(X)); h is the identity for priors and
/// between(a, b) for between factors. Zero iff prediction equals measurement.
inline Eigen::Vector3d factor_error(const Factor& factor, const Values& values) {
  if (const auto* p = std::get_if<PriorFactor>(&factor)) {
    return p->noise.whiten(log_map(between(p->z, values.at(p->var))));
  }
  const auto& b = std::get<BetweenFactor>(factor);
  return b.noise.whiten(log_map(between(b.z, between(values.at(b.a), values.at(b.b)))));
}

/// Total weighted squared residual over the graph.
inline double total_error(const FactorGraph& graph, const Values& values) {
  double err = 0.0;
  for (const Factor& f : graph.factors()) {
    err += factor_error(f, values).squaredNorm();
  }
  return err;
}

/// Stacked whitened Jacobian and residual at the current linearization
/// point. Rows come 3 per factor in graph order; columns come 3 per variable
/// in Values insertion order.
struct LinearSystem {
  Eigen::SparseMatrix<double> jacobian;
  Eigen::VectorXd residual;
};

inline LinearSystem linearize(const FactorGraph& graph, const Values& values) {
  const Eigen::Index rows = 3 * static_cast<Eigen::Index>(graph.size());
  const Eigen::Index cols = 3 * static_cast<Eigen::Index>(values.size());
  LinearSystem sys;
  sys.residual.resize(rows);
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(rows) * 6);

  const auto emit = [&](Eigen::Index row0, Eigen::Index col0, const Eigen::Matrix3d& block) {
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) {
        triplets.emplace_back(row0 + r, col0 + c, block(r, c));
      }
    }
  };

  Eigen::Index row = 0;
  for (const Factor& f : graph.factors()) {
    if (const auto* p = std::get_if<PriorFactor>(&f)) {
      const Pose2 e = between(p->z, values.at(p->var));
      const Eigen::Matrix3d dlog = log_jacobian(e);
      sys.residual.segment<3>(row) = p->noise.whiten(log_map(e));
      emit(row, 3 * static_cast<Eigen::Index>(values.index_of(p->var)),
           p->noise.sqrt_information() * dlog);
    } else {
      const auto& b = std::get<BetweenFactor>(f);
      const Pose2& pa = values.at(b.a);
      const Pose2& pb = values.at(b.b);
      const Pose2 e = between(b.z, between(pa, pb));
      const Eigen::Matrix3d dlog = log_jacobian(e);
      const auto [ja, jb] = between_jacobians(pa, pb);
      sys.residual.segment<3>(row) = b.noise.whiten(log_map(e));
      const Eigen::Matrix3d w_dlog = b.noise.sqrt_information() * dlog;
      emit(row, 3 * static_cast<Eigen::Index>(values.index_of(b.a)), w_dlog * ja);
      emit(row, 3 * static_cast<Eigen::Index>(values.index_of(b.b)), w_dlog * jb);
    }
    row += 3;
  }
  sys.jacobian.resize(rows, cols);
  sys.jacobian.setFromTriplets(triplets.begin(), triplets.end());
  return sys;
}

/// Per-variable right retraction x <- x * exp(xi). Variables absent from
/// delta are unchanged.
inline Values retract(const Values& values, const std::unordered_map<VarId, Tangent2>& delta) {
  Values out = values;
  for (const auto& [id, xi] : delta) {
    out.update(id, compose(out.at(id), exp_map(xi)));
  }
  return out;
}

namespace detail {

inline Values retract_dense(const Values& values, const Eigen::VectorXd& delta) {
  Values out = values;
  for (std::size_t i = 0; i < values.entries().size(); ++i) {
    const auto& entry = values.entries()[i];
    out.update(entry.id,
               compose(entry.pose, exp_map(delta.segment<3>(3 * static_cast<Eigen::Index>(i)))));
  }
  return out;
}

}  // namespace detail

struct OptimizerConfig {
  int max_iterations = 100;
  double tol = 1e-9;       // relative error change
  double abs_tol = 1e-12;  // absolute total error
  double lambda_init = 1e-5;
  double lambda_min = 1e-12;
  double lambda_max = 1e4;
};

struct SolveReport {
  double initial_error = 0.0;
  double final_error = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Levenberg-Marquardt over the graph: solves the damped normal equations
/// (J^T J + lambda diag(J^T J)) xi = -J^T r by sparse symmetric
/// factorization and retracts accepted steps. Requires at least one prior
/// to anchor the gauge.
inline std::pair<Values, SolveReport> optimize(const FactorGraph& graph, const Values& initial,
                                               const OptimizerConfig& cfg = {}) {
  if (!graph.has_prior()) {
    throw IndefiniteSystem("optimize: graph has no prior factor; gauge is unanchored");
  }
  Values values = initial;
  SolveReport report;
  double error = total_error(graph, values);
  report.initial_error = error;
  report.final_error = error;
  if (error < cfg.abs_tol) {
    report.converged = true;
    return {values, report};
  }

  double lambda = cfg.lambda_init;
  Eigen::SparseMatrix<double> jtj;
  Eigen::VectorXd jtr;
  bool relinearize = true;
  while (report.iterations < cfg.max_iterations) {
    if (relinearize) {
      const LinearSystem sys = linearize(graph, values);
      jtj = Eigen::SparseMatrix<double>(sys.jacobian.transpose() * sys.jacobian);
      jtr = sys.jacobian.transpose() * sys.residual;
      relinearize = false;
    }
    ++report.iterations;

    Eigen::SparseMatrix<double> damped = jtj;
    const Eigen::VectorXd diag = jtj.diagonal();
    for (Eigen::Index i = 0; i < diag.size(); ++i) {
      damped.coeffRef(i, i) = diag(i) + lambda * diag(i);
    }
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(damped);
    if (solver.info() != Eigen::Success) {
      throw IndefiniteSystem("optimize: normal equations are not positive definite");
    }
    const Eigen::VectorXd step = solver.solve(-jtr);
    if (solver.info() != Eigen::Success || !step.allFinite()) {
      throw IndefiniteSystem("optimize: normal-equations solve failed");
    }

    const Values candidate = detail::retract_dense(values, step);
    const double cand_error = total_error(graph, candidate);
    if (cand_error <= error) {
      const double rel = (error - cand_error) / std::max(error, 1e-300);
      values = candidate;
      error = cand_error;
      lambda = std::max(lambda / 10.0, cfg.lambda_min);
      relinearize = true;
      if (rel < cfg.tol || error < cfg.abs_tol) {
        report.converged = true;
        break;
      }
    } else {
      lambda = std::min(lambda * 10.0, cfg.lambda_max);
    }
  }
  report.final_error = error;
  return {values, report};
}

}  // namespace slam2d
