#pragma once

#include "mudual/errors.hpp"
#include "mudual/model.hpp"
#include "mudual/solver.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace mudual {

enum class InitMode { random_unit, channel_svd };

/// How uplink powers become downlink powers in each iteration.
enum class ConversionPath {
  legacy_transform,  ///< solve the MSE-duality linear system
  simplified_pq,     ///< copy: p := q
  both,              ///< run both on the same iterate, continue with p := q
};

const char* to_string(InitMode m);
const char* to_string(ConversionPath p);
InitMode init_mode_from_string(const std::string& s);
ConversionPath conversion_path_from_string(const std::string& s);

struct DesignConfig {
  int max_outer_iters = 200;
  double smse_rel_tol = 1e-8;
  InitMode init_mode = InitMode::random_unit;
  ConversionPath path = ConversionPath::both;
  std::uint64_t seed = 0;  ///< for random_unit initialization
  SolverConfig solver;

  void validate() const;
};

struct DesignResult {
  PrecoderSet uplink;    ///< Vbar, q from the last iteration
  PrecoderSet downlink;  ///< Ubar, p from the last iteration
  /// Sum-MSE after each power solve (virtual uplink).
  std::vector<double> smse_trace;
  /// Downlink sum-MSE after the MMSE receiver update of each iteration.
  std::vector<double> smse_dl_trace;
  int iters = 0;
  bool converged = false;
  ConversionPath path_used = ConversionPath::both;
  /// Per-iteration conversion wall-clock, seconds.
  std::vector<double> transform_times;
  std::vector<double> shortcut_times;
  /// With path = both: max |p_legacy - p_shortcut| per iteration.
  std::vector<double> path_gaps;
  /// Legacy-transform powers of the last iteration (empty for simplified_pq).
  RVector legacy_powers;

  double transform_time() const;  ///< accumulated legacy seconds
  double shortcut_time() const;   ///< accumulated shortcut seconds
};

class DesignConvergenceError : public ConvergenceError {
 public:
  DesignConvergenceError(const std::string& what, DesignResult partial)
      : ConvergenceError(what), partial_(std::move(partial)) {}
  const DesignResult& partial() const { return partial_; }

 private:
  DesignResult partial_;
};

/// Alternating sum-MSE design. Each iteration, with Vbar fixed:
///   1. solve the uplink power allocation for q,
///   2. form the uplink MMSE receivers u_l,
///   3. set ubar_l = u_l / |u_l| on active streams,
///   4. convert q to downlink powers p via cfg.path,
///   5. set Vbar to the normalized downlink MMSE receivers for (Ubar, p).
/// Stops when the relative sum-MSE decrease drops below smse_rel_tol.
/// Inactive streams keep their previous beamformers with zero power.
/// Throws DesignConvergenceError when max_outer_iters runs out first.
DesignResult design(const ChannelSet& ch, const DesignConfig& cfg);

/// Same loop, starting from given uplink beamformers instead of cfg.init_mode.
DesignResult design_from(const ChannelSet& ch, const PrecoderSet& initial,
                         const DesignConfig& cfg);

struct PathComparison {
  int iters = 0;
  double max_power_gap = 0.0;     ///< max over iterations of |p_leg - p_sc|
  double smse_final = 0.0;        ///< uplink sum-MSE of the last iteration
  double smse_final_legacy = 0.0;     ///< downlink MMSE sum-MSE, legacy p
  double smse_final_shortcut = 0.0;   ///< downlink MMSE sum-MSE, p := q
  double smse_final_diff = 0.0;
  std::vector<double> transform_times;
  std::vector<double> shortcut_times;
  double transform_time = 0.0;
  double shortcut_time = 0.0;
  double transform_median = 0.0;
  double shortcut_median = 0.0;
};

/// Runs design with path = both and summarizes both conversion routes on
/// identical iterates. Throws Error unless cfg.path is both.
PathComparison compare_paths(const ChannelSet& ch, const DesignConfig& cfg);

/// Comparison record of a finished (or partial) path = both run.
PathComparison summarize_paths(const ChannelSet& ch, const DesignResult& res);

struct NormalizedCovariance {
  double power = 0.0;   ///< q_l = tr(R_l)
  bool active = false;  ///< false when R_l = 0
  CVector beamformer;   ///< unit-norm vbar_l, empty when inactive
  CMatrix direction;    ///< Rbar_l = vbar_l vbar_l^H, empty when inactive
};

/// Splits rank-one covariances R_l = q_l vbar_l vbar_l^H into power and
/// unit-trace direction. Throws RankError when a second eigenvalue exceeds
/// 1e-9 relative to the first.
std::vector<NormalizedCovariance> normalize_covariance(
    std::span<const CMatrix> R);

double median(std::vector<double> v);

}  // namespace mudual
