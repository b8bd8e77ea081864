#include "mudual/solver.hpp"

#include "mudual/objective.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace mudual {

void SolverConfig::validate() const {
  if (!(kkt_tol > 0.0)) throw Error("solver: kkt_tol must be positive");
  if (max_iters < 1) throw Error("solver: max_iters must be >= 1");
  if (!(step_init > 0.0)) throw Error("solver: step_init must be positive");
  if (!(backtrack_ratio > 0.0 && backtrack_ratio < 1.0)) {
    throw Error("solver: backtrack_ratio must lie in (0, 1)");
  }
  if (!(armijo_const > 0.0 && armijo_const < 1.0)) {
    throw Error("solver: armijo_const must lie in (0, 1)");
  }
  if (oracle_grid_points < 2) {
    throw Error("solver: oracle_grid_points must be >= 2");
  }
}

double KktCertificate::max_residual() const {
  return std::max({stationarity_residual, primal_feasibility,
                   slackness_residual});
}

ActiveSet active_set(const RVector& q, double tol) {
  ActiveSet s;
  for (int l = 0; l < q.size(); ++l) {
    (q(l) > tol ? s.active : s.inactive).push_back(l);
  }
  return s;
}

RVector project_capped_simplex(const RVector& y, double budget) {
  RVector x = y.cwiseMax(0.0);
  if (x.sum() <= budget) return x;
  // Sort-based projection onto {x >= 0, sum x = budget}.
  std::vector<double> u(y.data(), y.data() + y.size());
  std::sort(u.begin(), u.end(), std::greater<>());
  double cum = 0.0;
  double theta = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    cum += u[i];
    const double t = (cum - budget) / static_cast<double>(i + 1);
    if (u[i] - t > 0.0) theta = t;
  }
  return (y.array() - theta).cwiseMax(0.0).matrix();
}

namespace {

// Certificate from a precomputed gradient g = -h^H J^-2 h.
KktCertificate certify_from_gradient(const RVector& q, const RVector& grad,
                                     double p_max) {
  KktCertificate c;
  const RVector a = -grad;  // h^H J^-2 h >= 0
  const auto set = active_set(q, active_tolerance(p_max));
  const double slack = q.sum() - p_max;
  if (!set.active.empty()) {
    c.mu_sum = a(set.active.front());
    for (int l : set.active) c.mu_sum = std::max(c.mu_sum, a(l));
  }
  c.mu = RVector::Zero(q.size());
  for (int l : set.inactive) c.mu(l) = std::max(0.0, c.mu_sum - a(l));

  double station = 0.0;
  double complementary = std::abs(c.mu_sum * slack);
  for (int l = 0; l < q.size(); ++l) {
    station = std::max(station, std::abs(-a(l) + c.mu_sum - c.mu(l)));
    complementary = std::max(complementary, std::abs(c.mu(l) * q(l)));
  }
  c.stationarity_residual = station;
  c.slackness_residual = complementary;
  c.primal_feasibility = std::max({0.0, slack, -q.minCoeff()});
  return c;
}

struct Eval {
  double f;
  RVector g;
};

Eval evaluate(const EffectiveChannel& eff, const RVector& q, double sigma2) {
  const auto st = UplinkState::make(eff, q, sigma2);
  return {st.trace_inv(), grad_trace_Jinv(st)};
}

// Newton step restricted to the active face {q_l = 0 off the active set,
// sum q = p_max}. Near the optimum the objective changes by far less than
// its rounding error, so the line search alone cannot push the gradient
// spread below ~1e-9; this step drives it down quadratically instead.
// Returns an empty vector when the face system is unusable.
RVector face_newton_point(const EffectiveChannel& eff, const RVector& q,
                          const RVector& grad, double sigma2, double p_max) {
  const auto set = active_set(q, active_tolerance(p_max));
  const int m = static_cast<int>(set.active.size());
  if (m == 0) return {};
  const auto st = UplinkState::make(eff, q, sigma2);
  const CMatrix JiH = st.J_inv() * eff.cols();
  const CMatrix A = eff.cols().adjoint() * JiH;  // h_i^H J^-1 h_j
  const CMatrix B = JiH.adjoint() * JiH;         // h_i^H J^-2 h_j

  RMatrix kkt = RMatrix::Zero(m + 1, m + 1);
  RVector rhs = RVector::Zero(m + 1);
  for (int i = 0; i < m; ++i) {
    const int li = set.active[i];
    for (int j = 0; j < m; ++j) {
      const int lj = set.active[j];
      kkt(i, j) = 2.0 * (A(li, lj) * B(lj, li)).real();
    }
    kkt(i, m) = 1.0;
    kkt(m, i) = 1.0;
    rhs(i) = -grad(li);
  }
  rhs(m) = p_max - q.sum();
  const Eigen::FullPivLU<RMatrix> lu(kkt);
  if (!lu.isInvertible()) return {};
  const RVector step = lu.solve(rhs);
  if (!step.allFinite()) return {};

  RVector out = RVector::Zero(q.size());
  for (int i = 0; i < m; ++i) {
    const int li = set.active[i];
    out(li) = q(li) + step(i);
    if (out(li) <= 0.0) return {};
  }
  return out;
}

// Once the certificate passes, a few more face Newton steps are nearly free
// and take the gradient spread to rounding level. Symmetry of the coupling
// matrix at the optimum is only as good as this spread.
void polish(const EffectiveChannel& eff, double sigma2, double p_max,
            PowerSolution& sol) {
  RVector grad = evaluate(eff, sol.q, sigma2).g;
  for (int k = 0; k < 4; ++k) {
    const RVector qn = face_newton_point(eff, sol.q, grad, sigma2, p_max);
    if (qn.size() != sol.q.size()) return;
    Eval nn = evaluate(eff, qn, sigma2);
    const auto cert = certify_from_gradient(qn, nn.g, p_max);
    if (!(cert.max_residual() < 0.5 * sol.cert.max_residual())) return;
    sol.q = qn;
    sol.cert = cert;
    sol.objective = nn.f;
    grad = std::move(nn.g);
  }
}

}  // namespace

KktCertificate kkt_certify(const EffectiveChannel& eff, double sigma2,
                           double p_max, const RVector& q) {
  // Negative entries are reported as infeasibility, not rejected.
  const auto st = UplinkState::make(eff, q.cwiseMax(0.0), sigma2);
  auto cert = certify_from_gradient(q.cwiseMax(0.0), grad_trace_Jinv(st),
                                    p_max);
  cert.primal_feasibility =
      std::max({0.0, q.sum() - p_max, -q.minCoeff()});
  return cert;
}

PowerSolution solve_power(const EffectiveChannel& eff, double sigma2,
                          double p_max, const SolverConfig& cfg) {
  cfg.validate();
  const int n = eff.streams();
  if (n == 0) throw DimensionError("solve_power: no streams");
  if (!(p_max > 0.0) || !std::isfinite(p_max)) {
    throw NumericsError("solve_power: p_max must be positive and finite");
  }
  if (eff.cols().colwise().squaredNorm().maxCoeff() == 0.0) {
    throw NumericsError("solve_power: every effective channel is zero");
  }

  RVector q = RVector::Constant(n, p_max / n);
  Eval cur = evaluate(eff, q, sigma2);
  const double scale = p_max / cur.g.cwiseAbs().maxCoeff();
  const double step_min = 1e-10 * scale;
  const double step_max = 1e10 * scale;
  double step = cfg.step_init * scale;

  PowerSolution sol;
  for (int it = 0;; ++it) {
    sol.cert = certify_from_gradient(q, cur.g, p_max);
    sol.q = q;
    sol.objective = cur.f;
    sol.iterations = it;
    if (sol.cert.passes(cfg.kkt_tol)) {
      polish(eff, sigma2, p_max, sol);
      return sol;
    }
    if (it >= cfg.max_iters) break;

    // Accept the face Newton point only if it does not raise the objective
    // beyond rounding and tightens the certificate.
    const RVector qn = face_newton_point(eff, q, cur.g, sigma2, p_max);
    if (qn.size() == q.size()) {
      Eval nn = evaluate(eff, qn, sigma2);
      const double floor = 64.0 * std::numeric_limits<double>::epsilon() *
                           std::abs(cur.f);
      if (nn.f <= cur.f + floor &&
          certify_from_gradient(qn, nn.g, p_max).max_residual() <
              sol.cert.max_residual()) {
        q = qn;
        cur = std::move(nn);
        continue;
      }
    }

    const RVector d = project_capped_simplex(q - step * cur.g, p_max) - q;
    const double slope = cur.g.dot(d);
    if (!(slope < 0.0)) {
      // No projected descent at this step length; try a longer one.
      step = std::min(step * 10.0, step_max);
      continue;
    }

    double lambda = 1.0;
    RVector q_try;
    Eval next{};
    bool accepted = false;
    while (lambda * d.cwiseAbs().maxCoeff() > 0.0) {
      q_try = (q + lambda * d).cwiseMax(0.0);
      next = evaluate(eff, q_try, sigma2);
      if (next.f <= cur.f + cfg.armijo_const * lambda * slope) {
        accepted = true;
        break;
      }
      lambda *= cfg.backtrack_ratio;
    }
    if (!accepted) {
      // Rounding floor of the objective reached along this direction.
      step = std::max(step * cfg.backtrack_ratio, step_min);
      continue;
    }

    const RVector s = q_try - q;
    const RVector y = next.g - cur.g;
    const double sy = s.dot(y);
    step = sy > 0.0 ? std::clamp(s.squaredNorm() / sy, step_min, step_max)
                    : step_max;
    q = std::move(q_try);
    cur = std::move(next);
  }
  throw PowerConvergenceError(
      "solve_power: KKT residual " + std::to_string(sol.cert.max_residual()) +
          " above tolerance after " + std::to_string(cfg.max_iters) +
          " iterations",
      sol);
}

RVector brute_force_power(const EffectiveChannel& eff, double sigma2,
                          double p_max, int grid_points) {
  const int n = eff.streams();
  if (n > 3) {
    throw CostGuardError("brute_force_power: at most 3 streams supported");
  }
  if (n < 1) throw DimensionError("brute_force_power: no streams");
  if (grid_points < 2) throw Error("brute_force_power: need >= 2 grid points");
  if (n == 1) return RVector::Constant(1, p_max);

  const int last = grid_points - 1;
  const double h = p_max / last;
  RVector best;
  double best_f = std::numeric_limits<double>::infinity();
  auto consider = [&](const RVector& q) {
    const double f = trace_inv_objective(eff, q, sigma2);
    if (f < best_f) {
      best_f = f;
      best = q;
    }
  };
  RVector q(n);
  if (n == 2) {
    for (int i = 0; i <= last; ++i) {
      q << i * h, (last - i) * h;
      consider(q);
    }
  } else {
    for (int i = 0; i <= last; ++i) {
      for (int j = 0; i + j <= last; ++j) {
        q << i * h, j * h, (last - i - j) * h;
        consider(q);
      }
    }
  }
  return best;
}

}  // namespace mudual
