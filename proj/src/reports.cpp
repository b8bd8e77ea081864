#include "mudual/reports.hpp"

#include "mudual/io.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

namespace mudual {

using nlohmann::json;

namespace {

// JSON has no NaN/inf; they travel as null.
json num(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

double get_num(const json& j, const char* key) {
  const auto& v = j.at(key);
  return v.is_null() ? std::numeric_limits<double>::quiet_NaN()
                     : v.get<double>();
}

json ints(const std::vector<int>& v) { return json(v); }

std::vector<json> doubles(const std::vector<double>& v) {
  std::vector<json> out;
  out.reserve(v.size());
  for (double x : v) out.push_back(num(x));
  return out;
}

std::vector<double> get_doubles(const json& j) {
  std::vector<double> out;
  for (const auto& v : j) {
    out.push_back(v.is_null() ? std::numeric_limits<double>::quiet_NaN()
                              : v.get<double>());
  }
  return out;
}

}  // namespace

void to_json(json& j, const KktCertificate& c) {
  j = json{{"mu_sum", num(c.mu_sum)},
           {"mu", real_vector_to_json(c.mu)},
           {"stationarity_residual", num(c.stationarity_residual)},
           {"primal_feasibility", num(c.primal_feasibility)},
           {"slackness_residual", num(c.slackness_residual)}};
}

void from_json(const json& j, KktCertificate& c) {
  c.mu_sum = get_num(j, "mu_sum");
  c.mu = real_vector_from_json(j.at("mu"));
  c.stationarity_residual = get_num(j, "stationarity_residual");
  c.primal_feasibility = get_num(j, "primal_feasibility");
  c.slackness_residual = get_num(j, "slackness_residual");
}

void to_json(json& j, const SolverConfig& c) {
  j = json{{"kkt_tol", c.kkt_tol},
           {"max_iters", c.max_iters},
           {"step_init", c.step_init},
           {"backtrack_ratio", c.backtrack_ratio},
           {"armijo_const", c.armijo_const},
           {"oracle_grid_points", c.oracle_grid_points}};
}

// Missing keys keep their defaults so partial config files work.
void from_json(const json& j, SolverConfig& c) {
  c.kkt_tol = j.value("kkt_tol", c.kkt_tol);
  c.max_iters = j.value("max_iters", c.max_iters);
  c.step_init = j.value("step_init", c.step_init);
  c.backtrack_ratio = j.value("backtrack_ratio", c.backtrack_ratio);
  c.armijo_const = j.value("armijo_const", c.armijo_const);
  c.oracle_grid_points = j.value("oracle_grid_points", c.oracle_grid_points);
}

void to_json(json& j, const DesignConfig& c) {
  j = json{{"max_outer_iters", c.max_outer_iters},
           {"smse_rel_tol", c.smse_rel_tol},
           {"init_mode", to_string(c.init_mode)},
           {"path", to_string(c.path)},
           {"seed", c.seed},
           {"solver", c.solver}};
}

void from_json(const json& j, DesignConfig& c) {
  c.max_outer_iters = j.value("max_outer_iters", c.max_outer_iters);
  c.smse_rel_tol = j.value("smse_rel_tol", c.smse_rel_tol);
  if (j.contains("init_mode")) {
    c.init_mode = init_mode_from_string(j.at("init_mode").get<std::string>());
  }
  if (j.contains("path")) {
    c.path = conversion_path_from_string(j.at("path").get<std::string>());
  }
  c.seed = j.value("seed", c.seed);
  if (j.contains("solver")) j.at("solver").get_to(c.solver);
}

void to_json(json& j, const DualityReport& r) {
  j = json{{"p", real_vector_to_json(r.p)},
           {"q", real_vector_to_json(r.q)},
           {"active", ints(r.active)},
           {"psi_asymmetry", num(r.psi_asymmetry)},
           {"pq_gap", num(r.pq_gap)},
           {"mse_gap", num(r.mse_gap)},
           {"sum_power_dl", num(r.sum_power_dl)},
           {"roundtrip_gap", num(r.roundtrip_gap)},
           {"gradient_spread", num(r.gradient_spread)},
           {"pq_bound", num(r.pq_bound)},
           {"eps_ul", real_vector_to_json(r.eps_ul)},
           {"eps_dl", real_vector_to_json(r.eps_dl)},
           {"eps_dl_mmse", real_vector_to_json(r.eps_dl_mmse)},
           {"sum_mse_ul", num(r.sum_mse_ul)},
           {"sum_mse_dl_mmse", num(r.sum_mse_dl_mmse)},
           {"kkt", r.kkt},
           {"downlink", r.downlink}};
}

void from_json(const json& j, DualityReport& r) {
  r.p = real_vector_from_json(j.at("p"));
  r.q = real_vector_from_json(j.at("q"));
  j.at("active").get_to(r.active);
  r.psi_asymmetry = get_num(j, "psi_asymmetry");
  r.pq_gap = get_num(j, "pq_gap");
  r.mse_gap = get_num(j, "mse_gap");
  r.sum_power_dl = get_num(j, "sum_power_dl");
  r.roundtrip_gap = get_num(j, "roundtrip_gap");
  r.gradient_spread = get_num(j, "gradient_spread");
  r.pq_bound = get_num(j, "pq_bound");
  r.eps_ul = real_vector_from_json(j.at("eps_ul"));
  r.eps_dl = real_vector_from_json(j.at("eps_dl"));
  r.eps_dl_mmse = real_vector_from_json(j.at("eps_dl_mmse"));
  r.sum_mse_ul = get_num(j, "sum_mse_ul");
  r.sum_mse_dl_mmse = get_num(j, "sum_mse_dl_mmse");
  j.at("kkt").get_to(r.kkt);
  j.at("downlink").get_to(r.downlink);
}

void to_json(json& j, const DesignResult& r) {
  j = json{{"uplink", r.uplink},
           {"downlink", r.downlink},
           {"smse_trace", doubles(r.smse_trace)},
           {"smse_dl_trace", doubles(r.smse_dl_trace)},
           {"iters", r.iters},
           {"converged", r.converged},
           {"path_used", to_string(r.path_used)},
           {"transform_times", doubles(r.transform_times)},
           {"shortcut_times", doubles(r.shortcut_times)},
           {"path_gaps", doubles(r.path_gaps)},
           {"legacy_powers", real_vector_to_json(r.legacy_powers)},
           {"transform_time", num(r.transform_time())},
           {"shortcut_time", num(r.shortcut_time())}};
}

void from_json(const json& j, DesignResult& r) {
  j.at("uplink").get_to(r.uplink);
  j.at("downlink").get_to(r.downlink);
  r.smse_trace = get_doubles(j.at("smse_trace"));
  r.smse_dl_trace = get_doubles(j.at("smse_dl_trace"));
  r.iters = j.at("iters").get<int>();
  r.converged = j.at("converged").get<bool>();
  r.path_used = conversion_path_from_string(j.at("path_used").get<std::string>());
  r.transform_times = get_doubles(j.at("transform_times"));
  r.shortcut_times = get_doubles(j.at("shortcut_times"));
  r.path_gaps = get_doubles(j.at("path_gaps"));
  r.legacy_powers = real_vector_from_json(j.at("legacy_powers"));
}

void to_json(json& j, const SolveReport& r) {
  j = json{{"converged", r.converged},
           {"iterations", r.iterations},
           {"q", real_vector_to_json(r.q)},
           {"objective", num(r.objective)},
           {"sum_mse", num(r.sum_mse)},
           {"eps", real_vector_to_json(r.eps)},
           {"kkt", r.kkt},
           {"kkt_tol", r.kkt_tol}};
}

void from_json(const json& j, SolveReport& r) {
  r.converged = j.at("converged").get<bool>();
  r.iterations = j.at("iterations").get<int>();
  r.q = real_vector_from_json(j.at("q"));
  r.objective = get_num(j, "objective");
  r.sum_mse = get_num(j, "sum_mse");
  r.eps = real_vector_from_json(j.at("eps"));
  j.at("kkt").get_to(r.kkt);
  r.kkt_tol = j.at("kkt_tol").get<double>();
}

void to_json(json& j, const TrialRecord& r) {
  j = json{{"trial", r.trial},
           {"seed", r.seed},
           {"status", r.status},
           {"message", r.message},
           {"psi_asymmetry", num(r.psi_asymmetry)},
           {"pq_gap", num(r.pq_gap)},
           {"mse_gap", num(r.mse_gap)},
           {"roundtrip_gap", num(r.roundtrip_gap)},
           {"gradient_spread", num(r.gradient_spread)},
           {"kkt_residual", num(r.kkt_residual)},
           {"mu_sum", num(r.mu_sum)},
           {"sum_power_dl", num(r.sum_power_dl)},
           {"sum_power_ul", num(r.sum_power_ul)},
           {"active_streams", r.active_streams}};
}

void from_json(const json& j, TrialRecord& r) {
  r.trial = j.at("trial").get<int>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.status = j.at("status").get<std::string>();
  r.message = j.at("message").get<std::string>();
  r.psi_asymmetry = get_num(j, "psi_asymmetry");
  r.pq_gap = get_num(j, "pq_gap");
  r.mse_gap = get_num(j, "mse_gap");
  r.roundtrip_gap = get_num(j, "roundtrip_gap");
  r.gradient_spread = get_num(j, "gradient_spread");
  r.kkt_residual = get_num(j, "kkt_residual");
  r.mu_sum = get_num(j, "mu_sum");
  r.sum_power_dl = get_num(j, "sum_power_dl");
  r.sum_power_ul = get_num(j, "sum_power_ul");
  r.active_streams = j.at("active_streams").get<int>();
}

void to_json(json& j, const VerifySummary& s) {
  j = json{{"trials", s.trials},
           {"failures", s.failures},
           {"negative_control", s.negative_control},
           {"max_psi_asymmetry", num(s.max_psi_asymmetry)},
           {"median_psi_asymmetry", num(s.median_psi_asymmetry)},
           {"max_pq_gap", num(s.max_pq_gap)},
           {"max_mse_gap", num(s.max_mse_gap)},
           {"max_roundtrip_gap", num(s.max_roundtrip_gap)},
           {"max_kkt_residual", num(s.max_kkt_residual)},
           {"bound_psi", s.bound_psi},
           {"bound_pq", s.bound_pq},
           {"bound_mse", s.bound_mse},
           {"pass", s.pass}};
}

void from_json(const json& j, VerifySummary& s) {
  s.trials = j.at("trials").get<int>();
  s.failures = j.at("failures").get<int>();
  s.negative_control = j.at("negative_control").get<bool>();
  s.max_psi_asymmetry = get_num(j, "max_psi_asymmetry");
  s.median_psi_asymmetry = get_num(j, "median_psi_asymmetry");
  s.max_pq_gap = get_num(j, "max_pq_gap");
  s.max_mse_gap = get_num(j, "max_mse_gap");
  s.max_roundtrip_gap = get_num(j, "max_roundtrip_gap");
  s.max_kkt_residual = get_num(j, "max_kkt_residual");
  s.bound_psi = j.at("bound_psi").get<double>();
  s.bound_pq = j.at("bound_pq").get<double>();
  s.bound_mse = j.at("bound_mse").get<double>();
  s.pass = j.at("pass").get<bool>();
}

void to_json(json& j, const BenchRow& r) {
  j = json{{"trial", r.trial},
           {"seed", r.seed},
           {"iters", r.iters},
           {"smse_final", num(r.smse_final)},
           {"pq_max_gap", num(r.pq_max_gap)},
           {"t_legacy_us", num(r.t_legacy_us)},
           {"t_shortcut_us", num(r.t_shortcut_us)}};
}

void from_json(const json& j, BenchRow& r) {
  r.trial = j.at("trial").get<int>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.iters = j.at("iters").get<int>();
  r.smse_final = get_num(j, "smse_final");
  r.pq_max_gap = get_num(j, "pq_max_gap");
  r.t_legacy_us = get_num(j, "t_legacy_us");
  r.t_shortcut_us = get_num(j, "t_shortcut_us");
}

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_csv(std::ostream& os, const std::vector<BenchRow>& rows) {
  os << kBenchCsvHeader << '\n';
  for (const auto& r : rows) {
    os << r.trial << ',' << r.seed << ',' << r.iters << ','
       << format_double(r.smse_final) << ',' << format_double(r.pq_max_gap)
       << ',' << format_double(r.t_legacy_us) << ','
       << format_double(r.t_shortcut_us) << '\n';
  }
}

void write_csv(std::ostream& os, const std::vector<TrialRecord>& rows) {
  os << kVerifyCsvHeader << '\n';
  for (const auto& r : rows) {
    os << r.trial << ',' << r.seed << ',' << r.status << ','
       << format_double(r.psi_asymmetry) << ',' << format_double(r.pq_gap)
       << ',' << format_double(r.mse_gap) << ','
       << format_double(r.roundtrip_gap) << ','
       << format_double(r.gradient_spread) << ','
       << format_double(r.kkt_residual) << ','
       << format_double(r.sum_power_dl) << '\n';
  }
}

void write_trace_csv(std::ostream& os, const DesignResult& r) {
  os << "iter,smse_ul,smse_dl\n";
  for (std::size_t i = 0; i < r.smse_trace.size(); ++i) {
    os << i << ',' << format_double(r.smse_trace[i]) << ','
       << format_double(i < r.smse_dl_trace.size() ? r.smse_dl_trace[i]
                                                   : std::nan(""))
       << '\n';
  }
}

}  // namespace mudual
