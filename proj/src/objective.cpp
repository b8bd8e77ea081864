#include "mudual/objective.hpp"

#include "mudual/errors.hpp"

#include <algorithm>
#include <cmath>

namespace mudual {

namespace {

// J is Hermitian with J >= sigma2 I, so Cholesky always succeeds for
// sigma2 > 0.
CMatrix hpd_inverse(const CMatrix& J) {
  Eigen::LLT<CMatrix> llt(J);
  if (llt.info() != Eigen::Success) {
    throw NumericsError("covariance is not positive definite");
  }
  CMatrix inv = llt.solve(CMatrix::Identity(J.rows(), J.cols()));
  return (0.5 * (inv + inv.adjoint())).eval();
}

double clamp_unit(double x) { return std::clamp(x, 0.0, 1.0); }

void check_downlink(const ChannelSet& ch, const PrecoderSet& dl) {
  if (dl.direction != LinkDirection::downlink) {
    throw DimensionError("expected downlink precoders");
  }
  const int total = ch.dims.total_streams();
  if (static_cast<int>(dl.beamformers.size()) != total ||
      dl.powers.size() != total ||
      static_cast<int>(ch.H.size()) != ch.dims.K) {
    throw DimensionError("downlink precoders: stream count mismatch");
  }
  for (const auto& u : dl.beamformers) {
    if (u.size() != ch.dims.M) {
      throw DimensionError("downlink beamformer length must be M");
    }
  }
}

// Unit downlink beamformers as an M x L_tot matrix.
CMatrix stacked_downlink(const PrecoderSet& dl, int M) {
  const auto total = static_cast<Eigen::Index>(dl.beamformers.size());
  CMatrix U(M, total);
  for (Eigen::Index l = 0; l < total; ++l) U.col(l) = dl.beamformers[l];
  return U;
}

// Receive covariance of user k, A P A^H + sigma2 I with A = H_k^H Ubar.
// Weighting by p rather than squaring sqrt(p)-scaled columns keeps this
// bit-identical to the uplink covariance in the scalar case.
CMatrix downlink_covariance(const CMatrix& A, const RVector& p,
                            double sigma2) {
  CMatrix Jk = A * p.cwiseMax(0.0).cast<Complex>().asDiagonal() * A.adjoint();
  Jk.diagonal().array() += sigma2;
  return 0.5 * (Jk + Jk.adjoint());
}

}  // namespace

UplinkState::UplinkState(EffectiveChannel eff, RVector q, double sigma2,
                         CMatrix J, CMatrix J_inv)
    : eff_(std::move(eff)),
      q_(std::move(q)),
      sigma2_(sigma2),
      J_(std::move(J)),
      J_inv_(std::move(J_inv)) {}

UplinkState UplinkState::make(const EffectiveChannel& eff, const RVector& q,
                              double sigma2) {
  if (q.size() != eff.streams()) {
    throw DimensionError("power vector length must equal stream count");
  }
  if (!std::isfinite(sigma2) || !(sigma2 > 0.0)) {
    throw NumericsError("sigma2 must be positive and finite");
  }
  if (!q.allFinite() || !eff.cols().allFinite()) {
    throw NumericsError("non-finite powers or channels");
  }
  if (q.size() > 0 && q.minCoeff() < 0.0) {
    throw NumericsError("powers must be nonnegative");
  }
  const auto& H = eff.cols();
  CMatrix J = H * q.cast<Complex>().asDiagonal() * H.adjoint();
  J.diagonal().array() += sigma2;
  J = (0.5 * (J + J.adjoint())).eval();
  CMatrix J_inv = hpd_inverse(J);
  return UplinkState(eff, q, sigma2, std::move(J), std::move(J_inv));
}

double UplinkState::trace_inv() const { return J_inv_.trace().real(); }

double trace_inv_objective(const EffectiveChannel& eff, const RVector& q,
                           double sigma2) {
  const auto& H = eff.cols();
  CMatrix J = H * q.cast<Complex>().asDiagonal() * H.adjoint();
  J.diagonal().array() += sigma2;
  Eigen::LLT<CMatrix> llt(J);
  if (llt.info() != Eigen::Success) {
    throw NumericsError("covariance is not positive definite");
  }
  // tr(J^-1) = |L^-1|_F^2 for J = L L^H.
  CMatrix Linv = llt.matrixL().solve(CMatrix::Identity(J.rows(), J.cols()));
  return Linv.squaredNorm();
}

double sum_mse_uplink(const UplinkState& state, int total_streams) {
  return total_streams - state.eff().antennas() +
         state.sigma2() * state.trace_inv();
}

double sum_mse_uplink(const UplinkState& state) {
  return sum_mse_uplink(state, state.eff().streams());
}

RVector grad_trace_Jinv(const UplinkState& state) {
  // h^H J^-2 h = |J^-1 h|^2 since J^-1 is Hermitian.
  const CMatrix G = state.J_inv() * state.eff().cols();
  return -G.colwise().squaredNorm().transpose();
}

ReceiverSet mmse_receivers_uplink(const UplinkState& state) {
  ReceiverSet rx{LinkDirection::virtual_uplink, {}};
  const auto& H = state.eff().cols();
  const int M = state.eff().antennas();
  for (int l = 0; l < state.eff().streams(); ++l) {
    const double q = state.q()(l);
    if (q == 0.0) {
      rx.filters.push_back(CVector::Zero(M));
    } else {
      rx.filters.push_back(state.J_inv() * H.col(l) * std::sqrt(q));
    }
  }
  return rx;
}

MseReport mmse_report_uplink(const UplinkState& state) {
  MseReport rep;
  rep.direction = LinkDirection::virtual_uplink;
  const auto& eff = state.eff();
  const int total = eff.streams();
  rep.per_stream.resize(total);
  const auto& owner = eff.stream_owner();
  const RVector sq = state.q().cwiseSqrt();
  int l0 = 0;
  while (l0 < total) {
    int l1 = l0;
    while (l1 < total && owner[l1] == owner[l0]) ++l1;
    const int n = l1 - l0;
    // H_k Vt_k is the block of effective channels scaled by sqrt(q).
    const CMatrix HV = eff.cols().middleCols(l0, n) *
                       sq.segment(l0, n).cast<Complex>().asDiagonal();
    CMatrix E = CMatrix::Identity(n, n) - HV.adjoint() * state.J_inv() * HV;
    E = (0.5 * (E + E.adjoint())).eval();
    for (int i = 0; i < n; ++i) {
      rep.per_stream(l0 + i) = clamp_unit(E(i, i).real());
    }
    rep.per_user.push_back(std::move(E));
    l0 = l1;
  }
  rep.sum = rep.per_stream.sum();
  return rep;
}

MseReport mmse_report_downlink(const ChannelSet& ch, const PrecoderSet& dl) {
  check_downlink(ch, dl);
  const auto& d = ch.dims;
  const CMatrix U = stacked_downlink(dl, d.M);
  const RVector sp = dl.powers.cwiseMax(0.0).cwiseSqrt();
  MseReport rep;
  rep.direction = LinkDirection::downlink;
  rep.per_stream.resize(d.total_streams());
  for (int k = 0; k < d.K; ++k) {
    const auto& Hk = ch.H[k];
    const int off = d.stream_offset(k);
    const int n = d.L[k];
    const CMatrix A = Hk.adjoint() * U;  // N_k x L_tot unit-power gains
    CMatrix Jk = downlink_covariance(A, dl.powers, ch.sigma2);
    const CMatrix Jk_inv = hpd_inverse(Jk);
    // H_k^H Ut_k
    const CMatrix Gk =
        A.middleCols(off, n) * sp.segment(off, n).cast<Complex>().asDiagonal();
    CMatrix E = CMatrix::Identity(n, n) - Gk.adjoint() * Jk_inv * Gk;
    E = (0.5 * (E + E.adjoint())).eval();
    for (int i = 0; i < n; ++i) {
      rep.per_stream(off + i) = clamp_unit(E(i, i).real());
    }
    rep.per_user.push_back(std::move(E));
    rep.J_k.push_back(std::move(Jk));
  }
  rep.sum = rep.per_stream.sum();
  return rep;
}

ReceiverSet mmse_receivers_downlink(const ChannelSet& ch,
                                    const PrecoderSet& dl) {
  check_downlink(ch, dl);
  const auto& d = ch.dims;
  const CMatrix U = stacked_downlink(dl, d.M);
  ReceiverSet rx{LinkDirection::downlink, {}};
  for (int k = 0; k < d.K; ++k) {
    const auto& Hk = ch.H[k];
    const CMatrix A = Hk.adjoint() * U;
    const Eigen::LLT<CMatrix> llt(
        downlink_covariance(A, dl.powers, ch.sigma2));
    const int off = d.stream_offset(k);
    for (int i = 0; i < d.L[k]; ++i) {
      if (dl.powers(off + i) == 0.0) {
        rx.filters.push_back(CVector::Zero(d.N[k]));
      } else {
        rx.filters.push_back(
            llt.solve(A.col(off + i) * std::sqrt(dl.powers(off + i))));
      }
    }
  }
  return rx;
}

RVector stream_mse_downlink(const ChannelSet& ch, const PrecoderSet& dl,
                            const ReceiverSet& rx) {
  check_downlink(ch, dl);
  const auto& d = ch.dims;
  const int total = d.total_streams();
  if (static_cast<int>(rx.filters.size()) != total) {
    throw DimensionError("receiver count must equal stream count");
  }
  const auto owner = d.stream_owner();
  RVector eps(total);
  for (int l = 0; l < total; ++l) {
    const auto& v = rx.filters[l];
    const auto& Hk = ch.H[owner[l]];
    if (v.size() != Hk.cols()) {
      throw DimensionError("downlink receiver length must be N_k");
    }
    const CVector w = Hk * v;  // v^H H_k^H u = (H_k v)^H u
    double interference = 0.0;
    for (int j = 0; j < total; ++j) {
      interference += dl.powers(j) * std::norm(w.dot(dl.beamformers[j]));
    }
    const double own = w.dot(dl.beamformers[l]).real();
    eps(l) = interference - 2.0 * std::sqrt(dl.powers(l)) * own + 1.0 +
             ch.sigma2 * v.squaredNorm();
  }
  return eps;
}

}  // namespace mudual
