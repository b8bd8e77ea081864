#pragma once

#include "mudual/errors.hpp"
#include "mudual/model.hpp"

#include <vector>

namespace mudual {

struct SolverConfig {
  double kkt_tol = 1e-9;
  int max_iters = 10000;
  /// First trial step, in units of p_max / max|gradient|.
  double step_init = 1.0;
  double backtrack_ratio = 0.5;
  double armijo_const = 1e-4;
  int oracle_grid_points = 2001;

  /// Throws Error when a field is out of range.
  void validate() const;
};

/// Multipliers and residuals of the KKT system of the power allocation:
///   -h_l^H J^-2 h_l + mu_sum - mu_l = 0,
///   sum q <= p_max, q >= 0, mu >= 0,
///   mu_sum (sum q - p_max) = 0, mu_l q_l = 0.
struct KktCertificate {
  double mu_sum = 0.0;
  RVector mu;
  double stationarity_residual = 0.0;
  double primal_feasibility = 0.0;
  double slackness_residual = 0.0;

  double max_residual() const;
  bool passes(double tol) const { return max_residual() <= tol; }
};

struct PowerSolution {
  RVector q;
  KktCertificate cert;
  double objective = 0.0;  ///< tr(J^-1) at q
  int iterations = 0;
};

/// Carries the best iterate when the solver runs out of iterations.
class PowerConvergenceError : public ConvergenceError {
 public:
  PowerConvergenceError(const std::string& what, PowerSolution best)
      : ConvergenceError(what), best_(std::move(best)) {}
  const PowerSolution& best() const { return best_; }

 private:
  PowerSolution best_;
};

struct ActiveSet {
  std::vector<int> active;
  std::vector<int> inactive;
};

/// Streams with q_l > tol are active, the rest inactive.
ActiveSet active_set(const RVector& q, double tol);

/// Threshold below which a power counts as zero for a given budget.
inline double active_tolerance(double p_max) { return 1e-9 * p_max; }

/// Euclidean projection onto {q >= 0, sum q <= budget}.
RVector project_capped_simplex(const RVector& y, double budget);

/// Minimizes tr(J^-1) over {q >= 0, sum q <= p_max} by projected gradient
/// with Barzilai-Borwein trial steps and Armijo backtracking, starting from
/// the uniform allocation. Each iteration first tries a Newton step on the
/// current active face, kept only if it tightens the certificate; near the
/// optimum this is what gets below the objective's rounding floor. Stops
/// once every KKT residual is <= kkt_tol, then polishes with a few more
/// face steps while they keep halving the residual.
/// Throws PowerConvergenceError after max_iters.
PowerSolution solve_power(const EffectiveChannel& eff, double sigma2,
                          double p_max, const SolverConfig& cfg = {});

/// Rebuilds the multipliers from the gradient at q and reports residuals
/// without judging them. mu_sum is the largest active gradient magnitude
/// (zero when nothing is active); mu_l is zero on active streams.
KktCertificate kkt_certify(const EffectiveChannel& eff, double sigma2,
                           double p_max, const RVector& q);

/// Exhaustive search of tr(J^-1) over the simplex sum q = p_max sampled with
/// grid_points per coordinate. Only for L_tot <= 3 (CostGuardError otherwise).
RVector brute_force_power(const EffectiveChannel& eff, double sigma2,
                          double p_max, int grid_points);

}  // namespace mudual
