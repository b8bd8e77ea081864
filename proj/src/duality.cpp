#include "mudual/duality.hpp"

#include "mudual/errors.hpp"

#include <algorithm>
#include <cmath>

namespace mudual {

namespace {

constexpr double kMaxCondition = 1e12;
constexpr double kNegativePowerTol = 1e-9;

RVector solve_transform(const DualityData& dd, double sigma2, bool transpose) {
  const auto n = static_cast<Eigen::Index>(dd.active.size());
  RVector out = RVector::Zero(dd.streams);
  if (n == 0) return out;
  const RVector beta2 = dd.beta.cwiseAbs2();
  RMatrix A = -(beta2.asDiagonal() * (transpose ? RMatrix(dd.Psi.transpose())
                                                : dd.Psi));
  A.diagonal() += dd.eps - dd.D;
  Eigen::PartialPivLU<RMatrix> lu(A);
  const double rcond = lu.rcond();
  if (!(rcond * kMaxCondition >= 1.0)) {
    throw SingularTransformError("duality transform is singular (rcond " +
                                 std::to_string(rcond) + ")");
  }
  const RVector x = sigma2 * lu.solve(beta2);
  if (!x.allFinite()) {
    throw SingularTransformError("duality transform produced non-finite power");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (x(i) < -kNegativePowerTol) {
      throw InfeasibleTransformError(
          "duality transform gave negative power " + std::to_string(x(i)) +
          " on stream " + std::to_string(dd.active[i]));
    }
    out(dd.active[i]) = std::max(x(i), 0.0);
  }
  return out;
}

}  // namespace

DualityData build_duality_data(const EffectiveChannel& eff, double sigma2,
                               const RVector& q, const ReceiverSet& receivers,
                               const RVector& eps, double p_max) {
  const int total = eff.streams();
  if (q.size() != total || eps.size() != total ||
      static_cast<int>(receivers.filters.size()) != total) {
    throw DimensionError("duality data: stream count mismatch");
  }
  if (!(sigma2 > 0.0)) throw NumericsError("duality data: sigma2 must be > 0");

  DualityData dd;
  dd.streams = total;
  dd.active = active_set(q, active_tolerance(p_max)).active;
  const auto n = static_cast<Eigen::Index>(dd.active.size());
  dd.beta.resize(n);
  dd.D.resize(n);
  dd.eps.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int l = dd.active[i];
    const auto& u = receivers.filters[l];
    if (u.size() != eff.antennas()) {
      throw DimensionError("duality data: receiver length must be M");
    }
    const double norm = u.norm();
    if (!(norm > 0.0) || !std::isfinite(norm)) {
      throw NumericsError("duality data: zero receiver on active stream " +
                          std::to_string(l));
    }
    dd.downlink_dirs.push_back(u / norm);
    dd.beta(i) = std::sqrt(q(l)) * norm;
    const Complex g = eff.col(l).dot(dd.downlink_dirs.back());  // h^H ubar
    dd.D(i) = std::norm(dd.beta(i) * g) - 2.0 * dd.beta(i) * g.real() + 1.0;
    dd.eps(i) = eps(l);
  }
  dd.Psi = RMatrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i != j) {
        dd.Psi(i, j) =
            std::norm(eff.col(dd.active[i]).dot(dd.downlink_dirs[j]));
      }
    }
  }
  return dd;
}

RVector transform_power(const DualityData& dd, double sigma2) {
  return solve_transform(dd, sigma2, /*transpose=*/false);
}

RVector transform_power_uplink(const DualityData& dd, double sigma2) {
  return solve_transform(dd, sigma2, /*transpose=*/true);
}

double check_equal_gradient_condition(const EffectiveChannel& eff,
                                      double sigma2, const RVector& q,
                                      double p_max) {
  const auto set = active_set(q, active_tolerance(p_max));
  if (set.active.size() < 2) return 0.0;
  const RVector a = -grad_trace_Jinv(UplinkState::make(eff, q, sigma2));
  double lo = a(set.active.front());
  double hi = lo;
  double mean = 0.0;
  for (int l : set.active) {
    lo = std::min(lo, a(l));
    hi = std::max(hi, a(l));
    mean += a(l);
  }
  mean /= static_cast<double>(set.active.size());
  return mean > 0.0 ? (hi - lo) / mean : 0.0;
}

double pq_gap_bound(double kkt_tol) {
  return 1e-6 * std::sqrt(kkt_tol / 1e-9);
}

DualityReport verify_theorem(const ChannelSet& ch,
                             const PrecoderSet& uplink_precoders,
                             const RVector& q, const SolverConfig& cfg) {
  const auto eff = build_effective_channel(ch, uplink_precoders);
  const auto state = UplinkState::make(eff, q, ch.sigma2);
  const auto rx = mmse_receivers_uplink(state);
  const auto ul = mmse_report_uplink(state);
  const auto dd =
      build_duality_data(eff, ch.sigma2, q, rx, ul.per_stream, ch.p_max);

  DualityReport rep;
  rep.q = q;
  rep.active = dd.active;
  rep.p = transform_power(dd, ch.sigma2);
  const RVector q_rec = transform_power_uplink(dd, ch.sigma2);
  const double scale = std::max(1.0, ch.p_max);

  const double psi_max = dd.Psi.size() ? dd.Psi.cwiseAbs().maxCoeff() : 0.0;
  const double asym =
      dd.Psi.size() ? (dd.Psi - dd.Psi.transpose()).cwiseAbs().maxCoeff() : 0.0;
  rep.psi_asymmetry = asym / std::max(1.0, psi_max);
  rep.pq_gap = (rep.p - q).cwiseAbs().maxCoeff() / scale;
  rep.sum_power_dl = rep.p.sum();
  rep.roundtrip_gap = 0.0;
  for (int l : dd.active) {
    rep.roundtrip_gap =
        std::max(rep.roundtrip_gap, std::abs(q_rec(l) - q(l)) / scale);
  }

  // Downlink precoders: MMSE directions on S_A. Inactive streams carry no
  // power, so any unit vector will do; use the matched filter.
  const int total = ch.dims.total_streams();
  PrecoderSet dl;
  dl.direction = LinkDirection::downlink;
  dl.powers = rep.p;
  dl.beamformers.resize(total);
  for (std::size_t i = 0; i < dd.active.size(); ++i) {
    dl.beamformers[dd.active[i]] = dd.downlink_dirs[i];
  }
  for (int l = 0; l < total; ++l) {
    if (dl.beamformers[l].size() != 0) continue;
    const CVector h = eff.col(l);
    const double n = h.norm();
    dl.beamformers[l] =
        n > 0.0 ? CVector(h / n) : CVector(CVector::Unit(ch.dims.M, 0));
  }

  // Dual receivers v_l = beta_l / sqrt(p_l) vbar_l.
  ReceiverSet dual{LinkDirection::downlink, {}};
  const auto owner = ch.dims.stream_owner();
  std::vector<double> beta_full(total, 0.0);
  for (std::size_t i = 0; i < dd.active.size(); ++i) {
    beta_full[dd.active[i]] = dd.beta(static_cast<Eigen::Index>(i));
  }
  for (int l = 0; l < total; ++l) {
    if (rep.p(l) > 0.0) {
      dual.filters.push_back(uplink_precoders.beamformers[l] *
                             (beta_full[l] / std::sqrt(rep.p(l))));
    } else {
      dual.filters.push_back(CVector::Zero(ch.dims.N[owner[l]]));
    }
  }

  rep.eps_ul = ul.per_stream;
  rep.eps_dl = stream_mse_downlink(ch, dl, dual);
  rep.mse_gap = (rep.eps_dl - rep.eps_ul).cwiseAbs().maxCoeff();
  const auto dl_mmse = mmse_report_downlink(ch, dl);
  rep.eps_dl_mmse = dl_mmse.per_stream;
  rep.sum_mse_dl_mmse = dl_mmse.sum;
  rep.sum_mse_ul = ul.sum;
  rep.kkt = kkt_certify(eff, ch.sigma2, ch.p_max, q);
  rep.gradient_spread =
      check_equal_gradient_condition(eff, ch.sigma2, q, ch.p_max);
  rep.pq_bound = pq_gap_bound(cfg.kkt_tol);
  rep.downlink = std::move(dl);
  return rep;
}

}  // namespace mudual
