#include "mudual/designer.hpp"

#include "mudual/duality.hpp"
#include "mudual/objective.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

namespace mudual {

const char* to_string(InitMode m) {
  return m == InitMode::random_unit ? "random_unit" : "channel_svd";
}

const char* to_string(ConversionPath p) {
  switch (p) {
    case ConversionPath::legacy_transform:
      return "legacy_transform";
    case ConversionPath::simplified_pq:
      return "simplified_pq";
    case ConversionPath::both:
      return "both";
  }
  return "both";
}

InitMode init_mode_from_string(const std::string& s) {
  if (s == "random_unit") return InitMode::random_unit;
  if (s == "channel_svd") return InitMode::channel_svd;
  throw Error("unknown init mode '" + s + "'");
}

ConversionPath conversion_path_from_string(const std::string& s) {
  if (s == "legacy_transform" || s == "legacy") {
    return ConversionPath::legacy_transform;
  }
  if (s == "simplified_pq" || s == "simplified") {
    return ConversionPath::simplified_pq;
  }
  if (s == "both") return ConversionPath::both;
  throw Error("unknown conversion path '" + s + "'");
}

void DesignConfig::validate() const {
  if (max_outer_iters < 1) throw Error("design: max_outer_iters must be >= 1");
  if (!(smse_rel_tol > 0.0)) throw Error("design: smse_rel_tol must be > 0");
  solver.validate();
}

double DesignResult::transform_time() const {
  return std::accumulate(transform_times.begin(), transform_times.end(), 0.0);
}

double DesignResult::shortcut_time() const {
  return std::accumulate(shortcut_times.begin(), shortcut_times.end(), 0.0);
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(v.begin(), mid);
  return 0.5 * (lower + upper);
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

CVector unit_or_first_axis(const CVector& v, Eigen::Index n) {
  const double norm = v.norm();
  if (norm > 0.0 && std::isfinite(norm)) return v / norm;
  return CVector::Unit(n, 0);
}

}  // namespace

DesignResult design_from(const ChannelSet& ch, const PrecoderSet& initial,
                         const DesignConfig& cfg) {
  cfg.validate();
  const auto violations = validate(ch);
  if (!violations.empty()) {
    throw DimensionError("design: invalid instance: " +
                         violations.front().field + ": " +
                         violations.front().rule);
  }
  const auto& d = ch.dims;
  const int total = d.total_streams();

  DesignResult res;
  res.path_used = cfg.path;
  res.uplink = initial;
  res.uplink.direction = LinkDirection::virtual_uplink;
  res.downlink.direction = LinkDirection::downlink;
  res.downlink.beamformers.assign(total, CVector());
  res.downlink.powers = RVector::Zero(total);

  std::vector<CVector> solved_for = res.uplink.beamformers;
  const bool run_legacy = cfg.path != ConversionPath::simplified_pq;
  const bool run_shortcut = cfg.path != ConversionPath::legacy_transform;

  for (int it = 0; it < cfg.max_outer_iters; ++it) {
    // 1. power allocation for the current uplink beamformers
    const auto eff = build_effective_channel(ch, res.uplink);
    const auto sol = solve_power(eff, ch.sigma2, ch.p_max, cfg.solver);
    res.uplink.powers = sol.q;
    const auto state = UplinkState::make(eff, sol.q, ch.sigma2);
    const double smse = sum_mse_uplink(state, total);
    res.smse_trace.push_back(smse);
    res.iters = it + 1;

    // 2-3. uplink MMSE receivers give the downlink directions
    const auto rx = mmse_receivers_uplink(state);
    for (int l = 0; l < total; ++l) {
      if (rx.filters[l].squaredNorm() > 0.0) {
        res.downlink.beamformers[l] = rx.filters[l] / rx.filters[l].norm();
      } else if (res.downlink.beamformers[l].size() == 0) {
        res.downlink.beamformers[l] = unit_or_first_axis(eff.col(l), d.M);
      }
    }

    // 4. uplink -> downlink power conversion
    RVector p_legacy;
    RVector p_shortcut;
    if (run_legacy) {
      const auto t0 = Clock::now();
      const auto ul = mmse_report_uplink(state);
      const auto dd = build_duality_data(eff, ch.sigma2, sol.q, rx,
                                         ul.per_stream, ch.p_max);
      p_legacy = transform_power(dd, ch.sigma2);
      res.transform_times.push_back(seconds_since(t0));
    }
    if (run_shortcut) {
      const auto t0 = Clock::now();
      p_shortcut = sol.q;
      res.shortcut_times.push_back(seconds_since(t0));
    }
    if (run_legacy && run_shortcut) {
      res.path_gaps.push_back((p_legacy - p_shortcut).cwiseAbs().maxCoeff());
    }
    if (run_legacy) res.legacy_powers = p_legacy;
    res.downlink.powers = run_shortcut ? p_shortcut : p_legacy;

    // 5. roles swap: downlink MMSE receivers become the uplink beamformers
    solved_for = res.uplink.beamformers;
    const auto vrx = mmse_receivers_downlink(ch, res.downlink);
    res.smse_dl_trace.push_back(mmse_report_downlink(ch, res.downlink).sum);
    for (int l = 0; l < total; ++l) {
      if (res.downlink.powers(l) > 0.0 && vrx.filters[l].squaredNorm() > 0.0) {
        res.uplink.beamformers[l] = vrx.filters[l] / vrx.filters[l].norm();
      }
    }

    if (it > 0) {
      const double prev = res.smse_trace[it - 1];
      if (prev - smse <= cfg.smse_rel_tol * std::abs(prev)) {
        res.converged = true;
        res.uplink.beamformers = std::move(solved_for);
        return res;
      }
    }
  }
  throw DesignConvergenceError(
      "design: sum-MSE still decreasing after " +
          std::to_string(cfg.max_outer_iters) + " iterations",
      [&] {
        res.uplink.beamformers = std::move(solved_for);
        return std::move(res);
      }());
}

DesignResult design(const ChannelSet& ch, const DesignConfig& cfg) {
  const PrecoderSet init = cfg.init_mode == InitMode::channel_svd
                               ? svd_uplink_precoders(ch)
                               : random_uplink_precoders(ch, cfg.seed);
  return design_from(ch, init, cfg);
}

PathComparison compare_paths(const ChannelSet& ch, const DesignConfig& cfg) {
  if (cfg.path != ConversionPath::both) {
    throw Error("compare_paths requires path = both");
  }
  return summarize_paths(ch, design(ch, cfg));
}

PathComparison summarize_paths(const ChannelSet& ch, const DesignResult& res) {
  if (res.smse_trace.empty()) throw Error("summarize_paths: empty run");
  PathComparison cmp;
  cmp.iters = res.iters;
  cmp.max_power_gap =
      res.path_gaps.empty()
          ? 0.0
          : *std::max_element(res.path_gaps.begin(), res.path_gaps.end());
  cmp.smse_final = res.smse_trace.back();

  // Final downlink sum-MSE under each conversion, same directions.
  PrecoderSet dl = res.downlink;
  cmp.smse_final_shortcut = mmse_report_downlink(ch, dl).sum;
  if (res.legacy_powers.size() == dl.powers.size()) {
    dl.powers = res.legacy_powers;
  }
  cmp.smse_final_legacy = mmse_report_downlink(ch, dl).sum;
  cmp.smse_final_diff =
      std::abs(cmp.smse_final_legacy - cmp.smse_final_shortcut);
  cmp.transform_times = res.transform_times;
  cmp.shortcut_times = res.shortcut_times;
  cmp.transform_time = res.transform_time();
  cmp.shortcut_time = res.shortcut_time();
  cmp.transform_median = median(res.transform_times);
  cmp.shortcut_median = median(res.shortcut_times);
  return cmp;
}

std::vector<NormalizedCovariance> normalize_covariance(
    std::span<const CMatrix> R) {
  std::vector<NormalizedCovariance> out;
  out.reserve(R.size());
  for (std::size_t l = 0; l < R.size(); ++l) {
    const auto& Rl = R[l];
    if (Rl.rows() != Rl.cols()) {
      throw DimensionError("covariance " + std::to_string(l) +
                           " is not square");
    }
    NormalizedCovariance nc;
    const double scale = Rl.cwiseAbs().maxCoeff();
    if (Rl.size() == 0 || scale == 0.0) {
      out.push_back(std::move(nc));
      continue;
    }
    const CMatrix herm = 0.5 * (Rl + Rl.adjoint());
    Eigen::SelfAdjointEigenSolver<CMatrix> eig(herm);
    const auto& ev = eig.eigenvalues();  // ascending
    const Eigen::Index n = ev.size();
    const double top = ev(n - 1);
    const double second = n > 1 ? std::abs(ev(n - 2)) : 0.0;
    if (!(top > 0.0) || second > 1e-9 * std::max(1.0, top) ||
        std::abs(ev(0)) > 1e-9 * std::max(1.0, top)) {
      throw RankError("covariance " + std::to_string(l) +
                      " is not rank one positive semidefinite");
    }
    nc.active = true;
    nc.power = herm.trace().real();
    nc.beamformer = eig.eigenvectors().col(n - 1);
    nc.direction = nc.beamformer * nc.beamformer.adjoint();
    out.push_back(std::move(nc));
  }
  return out;
}

}  // namespace mudual
