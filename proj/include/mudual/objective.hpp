#pragma once

#include "mudual/model.hpp"

#include <vector>

namespace mudual {

/// Virtual-uplink receive covariance J = sum_l q_l h_l h_l^H + sigma2 I and
/// its inverse, for fixed effective channels and powers.
class UplinkState {
 public:
  /// Throws NumericsError on non-finite or negative inputs.
  static UplinkState make(const EffectiveChannel& eff, const RVector& q,
                          double sigma2);

  const CMatrix& J() const { return J_; }
  const CMatrix& J_inv() const { return J_inv_; }
  const EffectiveChannel& eff() const { return eff_; }
  const RVector& q() const { return q_; }
  double sigma2() const { return sigma2_; }

  /// tr(J^-1), the quantity the power allocation minimizes.
  double trace_inv() const;

 private:
  UplinkState(EffectiveChannel eff, RVector q, double sigma2, CMatrix J,
              CMatrix J_inv);

  EffectiveChannel eff_;
  RVector q_;
  double sigma2_;
  CMatrix J_;
  CMatrix J_inv_;
};

/// tr(J^-1) evaluated directly, without building a state.
double trace_inv_objective(const EffectiveChannel& eff, const RVector& q,
                           double sigma2);

struct MseReport {
  LinkDirection direction = LinkDirection::virtual_uplink;
  RVector per_stream;               ///< clamped to [0, 1]
  std::vector<CMatrix> per_user;    ///< MMSE matrices E_k
  double sum = 0.0;                 ///< sum of per_stream
  std::vector<CMatrix> J_k;         ///< downlink only: per-user covariance
};

/// L_tot - M + sigma2 tr(J^-1).
double sum_mse_uplink(const UplinkState& state, int total_streams);
double sum_mse_uplink(const UplinkState& state);

/// d tr(J^-1) / d q_l = -h_l^H J^-2 h_l for every stream.
RVector grad_trace_Jinv(const UplinkState& state);

/// Wiener filters u_l = J^-1 h_l sqrt(q_l); exactly zero where q_l = 0.
ReceiverSet mmse_receivers_uplink(const UplinkState& state);

/// E_k = I - Vt_k^H H_k^H J^-1 H_k Vt_k with Vt_k = Vbar_k sqrt(Q_k).
MseReport mmse_report_uplink(const UplinkState& state);

/// Downlink MMSE matrices for precoders (ubar, p): J_k = H_k^H Ubar P
/// Ubar^H H_k + sigma2 I and E_k = I - Ut_k^H H_k J_k^-1 H_k^H Ut_k.
MseReport mmse_report_downlink(const ChannelSet& ch, const PrecoderSet& dl);

/// Downlink MMSE receive filters v_l = J_k^-1 H_k^H ubar_l sqrt(p_l)
/// (rows of V_k^*H, conjugated into column form).
ReceiverSet mmse_receivers_downlink(const ChannelSet& ch,
                                    const PrecoderSet& dl);

/// Per-stream downlink MSE for arbitrary receive filters:
/// sum_j p_j |v_l^H H_k^H u_j|^2 - 2 sqrt(p_l) Re(v_l^H H_k^H u_l) + 1
/// + sigma2 |v_l|^2. Not clamped.
RVector stream_mse_downlink(const ChannelSet& ch, const PrecoderSet& dl,
                            const ReceiverSet& rx);

}  // namespace mudual
