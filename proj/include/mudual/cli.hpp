#pragma once

#include "mudual/designer.hpp"
#include "mudual/reports.hpp"
#include "mudual/solver.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace mudual::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitConvergence = 3;
inline constexpr int kExitBound = 4;

struct EnsembleConfig {
  int trials = 1;
  std::uint64_t seed_base = 1;
  std::vector<SystemDims> dims{SystemDims{4, 2, {2, 2}, {2, 2}}};
  double sigma2 = 1.0;
  double p_max = 10.0;
};

struct OutputConfig {
  std::string format;  ///< json | csv; empty: per-command default
  std::string path;             ///< empty: stdout
};

struct Bounds {
  double psi_asymmetry = 1e-8;
  double pq_gap = -1.0;  ///< negative: pq_gap_bound(kkt_tol)
  double mse_gap = 1e-8;
  /// Negative control passes when median asymmetry >= factor * psi bound.
  double negative_control_factor = 100.0;
};

/// Settings merged from an optional JSON config file and command-line flags;
/// flags win.
struct RunConfig {
  EnsembleConfig ensemble;
  OutputConfig output;
  SolverConfig solver;
  DesignConfig design;
  Bounds bounds;
  int threads = 1;

  void validate() const;
};

RunConfig run_config_from_json(const nlohmann::json& j);
nlohmann::json run_config_to_json(const RunConfig& c);

/// Parses "4,2,2,2,2,2" as M, K, N_1..N_K, L_1..L_K.
SystemDims parse_dims(const std::string& text);
std::vector<int> parse_int_list(const std::string& text);

/// Runs fn(i) for i in [0, n) on `threads` workers.
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

/// One verify trial: generate, solve (or take uniform q for the negative
/// control), then evaluate the duality chain. Never throws for numerical
/// failures; they land in status/message.
TrialRecord run_verify_trial(const SystemDims& dims, double sigma2,
                             double p_max, std::uint64_t seed, int trial,
                             bool negative_control, const SolverConfig& cfg);

VerifySummary summarize_verify(const std::vector<TrialRecord>& records,
                               bool negative_control, const Bounds& bounds,
                               const SolverConfig& cfg);

/// One bench trial: generate and compare conversion paths. Sets `ok` false
/// (row filled with NaN) when the design fails outright.
BenchRow run_bench_trial(const SystemDims& dims, double sigma2, double p_max,
                         std::uint64_t seed, int trial, const DesignConfig& cfg,
                         bool* ok = nullptr);

/// Entry point shared by the executable and the tests. Returns the exit
/// code; never calls exit().
int run(int argc, const char* const* argv, std::ostream& out,
        std::ostream& err);

}  // namespace mudual::cli
