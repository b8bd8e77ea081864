#pragma once

#include "mudual/designer.hpp"
#include "mudual/duality.hpp"
#include "mudual/solver.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace mudual {

void to_json(nlohmann::json& j, const KktCertificate& c);
void from_json(const nlohmann::json& j, KktCertificate& c);
void to_json(nlohmann::json& j, const SolverConfig& c);
void from_json(const nlohmann::json& j, SolverConfig& c);
void to_json(nlohmann::json& j, const DesignConfig& c);
void from_json(const nlohmann::json& j, DesignConfig& c);
void to_json(nlohmann::json& j, const DualityReport& r);
void from_json(const nlohmann::json& j, DualityReport& r);
void to_json(nlohmann::json& j, const DesignResult& r);
void from_json(const nlohmann::json& j, DesignResult& r);

/// Output of `solve`.
struct SolveReport {
  bool converged = false;
  int iterations = 0;
  RVector q;
  double objective = 0.0;  ///< tr(J^-1)
  double sum_mse = 0.0;
  RVector eps;
  KktCertificate kkt;
  double kkt_tol = 0.0;
};

void to_json(nlohmann::json& j, const SolveReport& r);
void from_json(const nlohmann::json& j, SolveReport& r);

/// One trial of `verify`.
struct TrialRecord {
  int trial = 0;
  std::uint64_t seed = 0;
  std::string status = "ok";  ///< ok | singular_transform |
                              ///< infeasible_transform | no_convergence
  std::string message;
  double psi_asymmetry = 0.0;
  double pq_gap = 0.0;
  double mse_gap = 0.0;
  double roundtrip_gap = 0.0;
  double gradient_spread = 0.0;
  double kkt_residual = 0.0;
  double mu_sum = 0.0;
  double sum_power_dl = 0.0;
  double sum_power_ul = 0.0;
  int active_streams = 0;
};

void to_json(nlohmann::json& j, const TrialRecord& r);
void from_json(const nlohmann::json& j, TrialRecord& r);

struct VerifySummary {
  int trials = 0;
  int failures = 0;  ///< trials whose status is not ok
  bool negative_control = false;
  double max_psi_asymmetry = 0.0;
  double median_psi_asymmetry = 0.0;
  double max_pq_gap = 0.0;
  double max_mse_gap = 0.0;
  double max_roundtrip_gap = 0.0;
  double max_kkt_residual = 0.0;
  double bound_psi = 0.0;
  double bound_pq = 0.0;
  double bound_mse = 0.0;
  bool pass = false;
};

void to_json(nlohmann::json& j, const VerifySummary& s);
void from_json(const nlohmann::json& j, VerifySummary& s);

/// One trial of `bench`.
struct BenchRow {
  int trial = 0;
  std::uint64_t seed = 0;
  int iters = 0;
  double smse_final = 0.0;
  double pq_max_gap = 0.0;
  double t_legacy_us = 0.0;
  double t_shortcut_us = 0.0;
};

void to_json(nlohmann::json& j, const BenchRow& r);
void from_json(const nlohmann::json& j, BenchRow& r);

inline constexpr const char* kBenchCsvHeader =
    "trial,seed,iters,smse_final,pq_max_gap,t_legacy_us,t_shortcut_us";
inline constexpr const char* kVerifyCsvHeader =
    "trial,seed,status,psi_asymmetry,pq_gap,mse_gap,roundtrip_gap,"
    "gradient_spread,kkt_residual,sum_power_dl";

/// %.17g, enough digits to reproduce the double exactly.
std::string format_double(double x);

void write_csv(std::ostream& os, const std::vector<BenchRow>& rows);
void write_csv(std::ostream& os, const std::vector<TrialRecord>& rows);
/// iter,smse_ul,smse_dl
void write_trace_csv(std::ostream& os, const DesignResult& r);

}  // namespace mudual
