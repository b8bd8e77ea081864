#pragma once

#include "mudual/model.hpp"
#include "mudual/objective.hpp"
#include "mudual/solver.hpp"

#include <vector>

namespace mudual {

/// Per-stream quantities of the MSE duality between the virtual uplink and
/// the downlink, restricted to the active streams. Entry i of every vector
/// and row/column i of Psi refer to stream active[i].
///
/// With MMSE receivers u_l factored as u_l = beta_l / sqrt(q_l) * ubar_l,
/// the uplink MSE of stream l is
///   eps_l = D_ll + beta_l^2 / q_l * (sum_j q_j Psi_jl + sigma2)
/// and the downlink MSE with receiver v_l = beta_l / sqrt(p_l) * vbar_l is
///   eps_l = D_ll + beta_l^2 / p_l * (sum_j Psi_lj p_j + sigma2).
struct DualityData {
  int streams = 0;              ///< L_tot, including inactive streams
  std::vector<int> active;      ///< S_A, ascending
  RVector beta;                 ///< beta_l = sqrt(q_l) |u_l|
  RVector D;                    ///< diagonal of D
  RMatrix Psi;                  ///< Psi_ij = |h_i^H ubar_j|^2, zero diagonal
  RVector eps;                  ///< uplink MSE per active stream
  std::vector<CVector> downlink_dirs;  ///< ubar_l = u_l / |u_l|
};

/// Builds beta, D and Psi from the uplink MMSE receivers at powers q.
/// Streams with q_l <= active_tolerance(p_max) are dropped; pass the same
/// p_max the powers were solved for. Throws NumericsError when an active
/// stream has a zero receiver.
DualityData build_duality_data(const EffectiveChannel& eff, double sigma2,
                               const RVector& q, const ReceiverSet& receivers,
                               const RVector& eps, double p_max);

/// Downlink powers reaching the uplink MSEs:
///   p = sigma2 (eps - D - beta^2 Psi)^-1 beta^2 1 on S_A, zero on S_I.
/// Throws SingularTransformError above condition number 1e12 and
/// InfeasibleTransformError on any p_l < -1e-9.
RVector transform_power(const DualityData& dd, double sigma2);

/// Uplink powers reaching the same MSEs with the transposed coupling:
///   q = sigma2 (eps - D - beta^2 Psi^T)^-1 beta^2 1.
/// Reconstructs the q the data was built from.
RVector transform_power_uplink(const DualityData& dd, double sigma2);

/// max - min of h_l^H J^-2 h_l over active streams, divided by their mean.
double check_equal_gradient_condition(const EffectiveChannel& eff,
                                      double sigma2, const RVector& q,
                                      double p_max);

/// Measured form of the power-equality result at one operating point.
struct DualityReport {
  RVector p;                 ///< downlink powers, zero on S_I
  RVector q;                 ///< uplink powers
  std::vector<int> active;
  double psi_asymmetry = 0;  ///< max|Psi - Psi^T| / max(1, max|Psi|)
  double pq_gap = 0;         ///< max|p - q| / max(1, p_max)
  double mse_gap = 0;        ///< max|eps_dl - eps_ul| with dual receivers
  double sum_power_dl = 0;
  double roundtrip_gap = 0;  ///< max|q_rec - q| / max(1, p_max) on S_A
  double gradient_spread = 0;
  double pq_bound = 0;       ///< pq_gap tolerance implied by kkt_tol
  RVector eps_ul;
  RVector eps_dl;            ///< downlink MSE with the dual receivers
  RVector eps_dl_mmse;       ///< downlink MSE with per-user MMSE receivers
  double sum_mse_ul = 0;
  double sum_mse_dl_mmse = 0;
  KktCertificate kkt;
  PrecoderSet downlink;
};

/// pq_gap tolerance as a function of the KKT tolerance, C sqrt(kkt_tol)
/// with C chosen so the default kkt_tol = 1e-9 gives 1e-6.
double pq_gap_bound(double kkt_tol);

/// Evaluates the duality chain at (uplink precoders, q): MMSE receivers,
/// DualityData, p via transform_power, the downlink precoders (ubar, p)
/// and their MSEs. Does not require q to be optimal; a non-optimal q simply
/// shows up in the gaps. Propagates SingularTransformError.
DualityReport verify_theorem(const ChannelSet& ch,
                             const PrecoderSet& uplink_precoders,
                             const RVector& q, const SolverConfig& cfg = {});

}  // namespace mudual
