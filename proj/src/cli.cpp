#include "mudual/cli.hpp"

#include "mudual/duality.hpp"
#include "mudual/errors.hpp"
#include "mudual/io.hpp"
#include "mudual/objective.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <thread>

namespace mudual::cli {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct UsageError : Error {
  using Error::Error;
};

std::string first_violation(const std::vector<Violation>& v) {
  std::string msg;
  for (const auto& x : v) {
    if (!msg.empty()) msg += "; ";
    msg += x.field + ": " + x.rule;
  }
  return msg;
}

}  // namespace

void RunConfig::validate() const {
  if (ensemble.trials < 1) throw UsageError("trials must be >= 1");
  if (threads < 1) throw UsageError("threads must be >= 1");
  if (!output.format.empty() && output.format != "json" &&
      output.format != "csv") {
    throw UsageError("format must be json or csv");
  }
  if (ensemble.dims.empty()) throw UsageError("at least one dims entry needed");
  for (const auto& d : ensemble.dims) {
    const auto v = mudual::validate(d);
    if (!v.empty()) throw UsageError("invalid dims: " + first_violation(v));
  }
  if (!(ensemble.sigma2 > 0.0)) throw UsageError("sigma2 must be > 0");
  if (!(ensemble.p_max > 0.0)) throw UsageError("pmax must be > 0");
  solver.validate();
  design.validate();
}

RunConfig run_config_from_json(const json& j) {
  RunConfig c;
  if (j.contains("ensemble")) {
    const auto& e = j.at("ensemble");
    c.ensemble.trials = e.value("trials", c.ensemble.trials);
    c.ensemble.seed_base = e.value("seed_base", c.ensemble.seed_base);
    c.ensemble.sigma2 = e.value("sigma2", c.ensemble.sigma2);
    c.ensemble.p_max = e.value("p_max", c.ensemble.p_max);
    if (e.contains("dims")) {
      c.ensemble.dims = e.at("dims").get<std::vector<SystemDims>>();
    }
  }
  if (j.contains("output")) {
    const auto& o = j.at("output");
    c.output.format = o.value("format", c.output.format);
    c.output.path = o.value("path", c.output.path);
  }
  if (j.contains("solver")) j.at("solver").get_to(c.solver);
  if (j.contains("design")) j.at("design").get_to(c.design);
  if (j.contains("bounds")) {
    const auto& b = j.at("bounds");
    c.bounds.psi_asymmetry = b.value("psi_asymmetry", c.bounds.psi_asymmetry);
    c.bounds.pq_gap = b.value("pq_gap", c.bounds.pq_gap);
    c.bounds.mse_gap = b.value("mse_gap", c.bounds.mse_gap);
    c.bounds.negative_control_factor =
        b.value("negative_control_factor", c.bounds.negative_control_factor);
  }
  c.threads = j.value("threads", c.threads);
  return c;
}

json run_config_to_json(const RunConfig& c) {
  return json{{"ensemble",
               {{"trials", c.ensemble.trials},
                {"seed_base", c.ensemble.seed_base},
                {"dims", c.ensemble.dims},
                {"sigma2", c.ensemble.sigma2},
                {"p_max", c.ensemble.p_max}}},
              {"output", {{"format", c.output.format}, {"path", c.output.path}}},
              {"solver", c.solver},
              {"design", c.design},
              {"bounds",
               {{"psi_asymmetry", c.bounds.psi_asymmetry},
                {"pq_gap", c.bounds.pq_gap},
                {"mse_gap", c.bounds.mse_gap},
                {"negative_control_factor",
                 c.bounds.negative_control_factor}}},
              {"threads", c.threads}};
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(std::remove(item.begin(), item.end(), '"'), item.end());
    item.erase(std::remove_if(item.begin(), item.end(),
                              [](unsigned char c) { return std::isspace(c); }),
               item.end());
    if (item.empty()) continue;
    std::size_t pos = 0;
    int v = 0;
    try {
      v = std::stoi(item, &pos);
    } catch (const std::exception&) {
      throw UsageError("not an integer: '" + item + "'");
    }
    if (pos != item.size()) throw UsageError("not an integer: '" + item + "'");
    out.push_back(v);
  }
  return out;
}

SystemDims parse_dims(const std::string& text) {
  const auto v = parse_int_list(text);
  if (v.size() < 4) {
    throw UsageError("dims must be M,K,N_1..N_K,L_1..L_K: '" + text + "'");
  }
  SystemDims d;
  d.M = v[0];
  d.K = v[1];
  if (d.K < 1 || v.size() != 2 + 2 * static_cast<std::size_t>(d.K)) {
    throw UsageError("dims must be M,K,N_1..N_K,L_1..L_K: '" + text + "'");
  }
  d.N.assign(v.begin() + 2, v.begin() + 2 + d.K);
  d.L.assign(v.begin() + 2 + d.K, v.end());
  return d;
}

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  if (threads <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  const int workers = std::min(threads, n);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

TrialRecord run_verify_trial(const SystemDims& dims, double sigma2,
                             double p_max, std::uint64_t seed, int trial,
                             bool negative_control, const SolverConfig& cfg) {
  TrialRecord rec;
  rec.trial = trial;
  rec.seed = seed;
  const auto ch = gen_channel(dims, sigma2, p_max, seed);
  auto pre = random_uplink_precoders(ch, seed);
  RVector q = pre.powers;
  try {
    if (!negative_control) {
      q = solve_power(build_effective_channel(ch, pre), sigma2, p_max, cfg).q;
    }
    const auto rep = verify_theorem(ch, pre, q, cfg);
    rec.psi_asymmetry = rep.psi_asymmetry;
    rec.pq_gap = rep.pq_gap;
    rec.mse_gap = rep.mse_gap;
    rec.roundtrip_gap = rep.roundtrip_gap;
    rec.gradient_spread = rep.gradient_spread;
    rec.kkt_residual = rep.kkt.max_residual();
    rec.mu_sum = rep.kkt.mu_sum;
    rec.sum_power_dl = rep.sum_power_dl;
    rec.sum_power_ul = q.sum();
    rec.active_streams = static_cast<int>(rep.active.size());
  } catch (const SingularTransformError& e) {
    rec.status = "singular_transform";
    rec.message = e.what();
  } catch (const InfeasibleTransformError& e) {
    rec.status = "infeasible_transform";
    rec.message = e.what();
  } catch (const ConvergenceError& e) {
    rec.status = "no_convergence";
    rec.message = e.what();
  }
  if (rec.status != "ok") {
    rec.psi_asymmetry = rec.pq_gap = rec.mse_gap = rec.roundtrip_gap = kNaN;
    rec.gradient_spread = rec.kkt_residual = rec.mu_sum = kNaN;
    rec.sum_power_dl = kNaN;
    rec.sum_power_ul = q.sum();
  }
  return rec;
}

VerifySummary summarize_verify(const std::vector<TrialRecord>& records,
                               bool negative_control, const Bounds& bounds,
                               const SolverConfig& cfg) {
  VerifySummary s;
  s.trials = static_cast<int>(records.size());
  s.negative_control = negative_control;
  s.bound_psi = bounds.psi_asymmetry;
  s.bound_pq = bounds.pq_gap >= 0.0 ? bounds.pq_gap : pq_gap_bound(cfg.kkt_tol);
  s.bound_mse = bounds.mse_gap;
  std::vector<double> asym;
  for (const auto& r : records) {
    if (r.status != "ok") {
      ++s.failures;
      continue;
    }
    asym.push_back(r.psi_asymmetry);
    s.max_psi_asymmetry = std::max(s.max_psi_asymmetry, r.psi_asymmetry);
    s.max_pq_gap = std::max(s.max_pq_gap, r.pq_gap);
    s.max_mse_gap = std::max(s.max_mse_gap, r.mse_gap);
    s.max_roundtrip_gap = std::max(s.max_roundtrip_gap, r.roundtrip_gap);
    s.max_kkt_residual = std::max(s.max_kkt_residual, r.kkt_residual);
  }
  s.median_psi_asymmetry = median(asym);
  if (negative_control) {
    s.pass = s.failures == 0 && !asym.empty() &&
             s.median_psi_asymmetry >=
                 bounds.negative_control_factor * s.bound_psi;
  } else {
    s.pass = s.failures == 0 && s.max_psi_asymmetry <= s.bound_psi &&
             s.max_pq_gap <= s.bound_pq && s.max_mse_gap <= s.bound_mse &&
             s.max_kkt_residual <= cfg.kkt_tol;
  }
  return s;
}

BenchRow run_bench_trial(const SystemDims& dims, double sigma2, double p_max,
                         std::uint64_t seed, int trial, const DesignConfig& cfg,
                         bool* ok) {
  BenchRow row;
  row.trial = trial;
  row.seed = seed;
  const auto ch = gen_channel(dims, sigma2, p_max, seed);
  DesignConfig c = cfg;
  c.path = ConversionPath::both;
  c.seed = seed;
  std::optional<PathComparison> cmp;
  bool good = true;
  try {
    cmp = compare_paths(ch, c);
  } catch (const DesignConvergenceError& e) {
    // Still a valid comparison over the iterations that ran.
    cmp = summarize_paths(ch, e.partial());
  } catch (const Error&) {
    good = false;
  }
  if (cmp) {
    row.iters = cmp->iters;
    row.smse_final = cmp->smse_final;
    row.pq_max_gap = cmp->max_power_gap;
    row.t_legacy_us = cmp->transform_time * 1e6;
    row.t_shortcut_us = cmp->shortcut_time * 1e6;
  } else {
    row.smse_final = row.pq_max_gap = row.t_legacy_us = row.t_shortcut_us =
        kNaN;
  }
  if (ok) *ok = good;
  return row;
}

namespace {

/// Report sink: a file when a path is set, otherwise the given stream.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : os_(&fallback) {
    if (!path.empty()) {
      file_.open(path, std::ios::binary);
      if (!file_) throw UsageError("cannot write output file " + path);
      os_ = &file_;
    }
  }
  std::ostream& stream() { return *os_; }

 private:
  std::ofstream file_;
  std::ostream* os_;
};

std::string format_or(const RunConfig& c, const char* fallback) {
  return c.output.format.empty() ? fallback : c.output.format;
}

ChannelSet load_valid_instance(const std::string& path) {
  auto ch = load_instance(path);
  const auto v = mudual::validate(ch);
  if (!v.empty()) throw UsageError("invalid instance: " + first_violation(v));
  return ch;
}

PrecoderSet initial_precoders(const ChannelSet& ch, InitMode mode,
                              std::uint64_t seed) {
  return mode == InitMode::channel_svd ? svd_uplink_precoders(ch)
                                       : random_uplink_precoders(ch, seed);
}

SolveReport make_solve_report(const EffectiveChannel& eff, double sigma2,
                              const PowerSolution& sol, bool converged,
                              double kkt_tol) {
  SolveReport r;
  r.converged = converged;
  r.iterations = sol.iterations;
  r.q = sol.q;
  const auto st = UplinkState::make(eff, sol.q, sigma2);
  r.objective = st.trace_inv();
  r.sum_mse = sum_mse_uplink(st);
  r.eps = mmse_report_uplink(st).per_stream;
  r.kkt = sol.cert;
  r.kkt_tol = kkt_tol;
  return r;
}

void write_solve_report(std::ostream& os, const SolveReport& r,
                        const std::string& format) {
  if (format == "csv") {
    os << "stream,q,eps,mu\n";
    for (Eigen::Index l = 0; l < r.q.size(); ++l) {
      os << l << ',' << format_double(r.q(l)) << ','
         << format_double(r.eps(l)) << ',' << format_double(r.kkt.mu(l))
         << '\n';
    }
  } else {
    os << json(r).dump(2) << '\n';
  }
}

void print_verify_summary(std::ostream& os, const VerifySummary& s) {
  auto line = [&](const char* name, double v, double bound, bool upper) {
    os << name << " = " << format_double(v);
    if (bound >= 0.0) {
      const bool ok = upper ? v <= bound : v >= bound;
      os << (upper ? " (bound <= " : " (bound >= ") << bound
         << (ok ? ") ok" : ") VIOLATED");
    }
    os << '\n';
  };
  os << "trials = " << s.trials << '\n';
  os << "failures = " << s.failures << '\n';
  if (s.negative_control) {
    line("median_psi_asymmetry", s.median_psi_asymmetry, -1, true);
    line("max_psi_asymmetry", s.max_psi_asymmetry, -1, true);
  } else {
    line("max_psi_asymmetry", s.max_psi_asymmetry, s.bound_psi, true);
    line("median_psi_asymmetry", s.median_psi_asymmetry, -1, true);
  }
  line("max_pq_gap", s.max_pq_gap, s.negative_control ? -1 : s.bound_pq, true);
  line("max_mse_gap", s.max_mse_gap, s.negative_control ? -1 : s.bound_mse,
       true);
  line("max_roundtrip_gap", s.max_roundtrip_gap, -1, true);
  line("max_kkt_residual", s.max_kkt_residual, -1, true);
  os << "status = " << (s.pass ? "PASS" : "FAIL") << '\n';
}

struct Flags {
  std::string config;
  // gen
  int M = 0;
  int K = 0;
  std::string N;
  std::string L;
  double sigma2 = 0.0;
  double pmax = 0.0;
  std::uint64_t seed = 0;
  // solve / design
  std::string instance;
  std::string init;
  std::uint64_t precoder_seed = 0;
  double kkt_tol = 0.0;
  int max_iters = 0;
  std::string path;
  int max_outer_iters = 0;
  double smse_rel_tol = 0.0;
  // verify / bench
  int trials = 0;
  std::vector<std::string> dims;
  bool negative_control = false;
  double max_psi = 0.0;
  double max_pq = 0.0;
  double max_mse = 0.0;
  // global
  std::string out;
  std::string format;
  std::uint64_t seed_base = 0;
  int threads = 0;
};

bool given(const CLI::Option* o) { return o != nullptr && o->count() > 0; }

int cmd_gen(RunConfig& cfg, const Flags& f, const CLI::App& sub,
            std::ostream& out) {
  SystemDims d = cfg.ensemble.dims.front();
  if (given(sub.get_option("--M"))) d.M = f.M;
  const bool has_k = given(sub.get_option("--K"));
  const bool has_n = given(sub.get_option("--N"));
  const bool has_l = given(sub.get_option("--L"));
  if (has_n) d.N = parse_int_list(f.N);
  if (has_l) d.L = parse_int_list(f.L);
  if (has_k) {
    d.K = f.K;
    if (!has_n) d.N.assign(std::max(d.K, 0), d.N.empty() ? 1 : d.N.front());
    if (!has_l) d.L.assign(std::max(d.K, 0), d.L.empty() ? 1 : d.L.front());
  } else if (has_n) {
    d.K = static_cast<int>(d.N.size());
  } else if (has_l) {
    d.K = static_cast<int>(d.L.size());
  }
  if (has_n && !has_l && !has_k && d.L.size() != d.N.size()) {
    d.L.assign(d.N.size(), 1);
  }
  const double sigma2 =
      given(sub.get_option("--sigma2")) ? f.sigma2 : cfg.ensemble.sigma2;
  const double pmax =
      given(sub.get_option("--pmax")) ? f.pmax : cfg.ensemble.p_max;
  const std::uint64_t seed =
      given(sub.get_option("--seed")) ? f.seed : cfg.ensemble.seed_base;

  auto v = mudual::validate(d);
  if (!(sigma2 > 0.0)) v.push_back({"sigma2", "sigma2 > 0"});
  if (!(pmax > 0.0)) v.push_back({"p_max", "p_max > 0"});
  if (!v.empty()) throw UsageError("invalid instance: " + first_violation(v));

  const auto ch = gen_channel(d, sigma2, pmax, seed);
  const std::string path =
      cfg.output.path.empty() ? std::string("instance.json") : cfg.output.path;
  const std::string text = instance_text(ch);
  {
    std::ofstream file(path, std::ios::binary);
    if (!file) throw UsageError("cannot write output file " + path);
    file << text;
  }
  out << path << ' ' << content_hash(text) << '\n';
  return kExitOk;
}

int cmd_solve(RunConfig& cfg, const Flags& f, const CLI::App& sub,
              std::ostream& out) {
  if (f.instance.empty()) throw UsageError("solve: --instance is required");
  const auto ch = load_valid_instance(f.instance);
  if (given(sub.get_option("--kkt-tol"))) cfg.solver.kkt_tol = f.kkt_tol;
  if (given(sub.get_option("--max-iters"))) cfg.solver.max_iters = f.max_iters;
  if (given(sub.get_option("--init"))) {
    cfg.design.init_mode = init_mode_from_string(f.init);
  }
  cfg.solver.validate();
  const std::uint64_t pseed = given(sub.get_option("--precoder-seed"))
                                  ? f.precoder_seed
                                  : ch.seed.value_or(0);
  const auto pre = initial_precoders(ch, cfg.design.init_mode, pseed);
  const auto eff = build_effective_channel(ch, pre);
  Sink sink(cfg.output.path, out);
  const auto format = format_or(cfg, "json");
  try {
    const auto sol = solve_power(eff, ch.sigma2, ch.p_max, cfg.solver);
    write_solve_report(
        sink.stream(),
        make_solve_report(eff, ch.sigma2, sol, true, cfg.solver.kkt_tol),
        format);
    return kExitOk;
  } catch (const PowerConvergenceError& e) {
    write_solve_report(sink.stream(),
                       make_solve_report(eff, ch.sigma2, e.best(), false,
                                         cfg.solver.kkt_tol),
                       format);
    throw;
  }
}

void apply_ensemble_flags(RunConfig& cfg, const Flags& f, const CLI::App& sub) {
  if (given(sub.get_option("--trials"))) cfg.ensemble.trials = f.trials;
  if (given(sub.get_option("--dims"))) {
    cfg.ensemble.dims.clear();
    for (const auto& d : f.dims) cfg.ensemble.dims.push_back(parse_dims(d));
  }
  if (given(sub.get_option("--sigma2"))) cfg.ensemble.sigma2 = f.sigma2;
  if (given(sub.get_option("--pmax"))) cfg.ensemble.p_max = f.pmax;
  cfg.validate();
}

int cmd_verify(RunConfig& cfg, const Flags& f, const CLI::App& sub,
               std::ostream& out, std::ostream& err) {
  if (given(sub.get_option("--kkt-tol"))) cfg.solver.kkt_tol = f.kkt_tol;
  if (given(sub.get_option("--max-psi-asym"))) cfg.bounds.psi_asymmetry = f.max_psi;
  if (given(sub.get_option("--max-pq-gap"))) cfg.bounds.pq_gap = f.max_pq;
  if (given(sub.get_option("--max-mse-gap"))) cfg.bounds.mse_gap = f.max_mse;
  apply_ensemble_flags(cfg, f, sub);
  const bool negative = f.negative_control;

  const int per_dims = cfg.ensemble.trials;
  const int n = per_dims * static_cast<int>(cfg.ensemble.dims.size());
  std::vector<TrialRecord> records(n);
  parallel_for(n, cfg.threads, [&](int t) {
    const auto& dims = cfg.ensemble.dims[t / per_dims];
    records[t] = run_verify_trial(dims, cfg.ensemble.sigma2, cfg.ensemble.p_max,
                                  cfg.ensemble.seed_base + t, t, negative,
                                  cfg.solver);
  });
  const auto summary =
      summarize_verify(records, negative, cfg.bounds, cfg.solver);

  Sink sink(cfg.output.path, out);
  if (format_or(cfg, "json") == "csv") {
    write_csv(sink.stream(), records);
  } else {
    sink.stream() << json{{"config", run_config_to_json(cfg)},
                          {"trials", records},
                          {"summary", summary}}
                         .dump(2)
                  << '\n';
  }
  print_verify_summary(cfg.output.path.empty() ? err : out, summary);

  const bool any_convergence =
      std::any_of(records.begin(), records.end(),
                  [](const auto& r) { return r.status == "no_convergence"; });
  if (any_convergence) return kExitConvergence;
  return summary.pass ? kExitOk : kExitBound;
}

int cmd_bench(RunConfig& cfg, const Flags& f, const CLI::App& sub,
              std::ostream& out, std::ostream& err) {
  if (given(sub.get_option("--max-outer-iters"))) {
    cfg.design.max_outer_iters = f.max_outer_iters;
  }
  if (given(sub.get_option("--kkt-tol"))) cfg.design.solver.kkt_tol = f.kkt_tol;
  apply_ensemble_flags(cfg, f, sub);

  const int per_dims = cfg.ensemble.trials;
  const int n = per_dims * static_cast<int>(cfg.ensemble.dims.size());
  std::vector<BenchRow> rows(n);
  std::vector<char> ok(n, 1);
  parallel_for(n, cfg.threads, [&](int t) {
    bool good = true;
    rows[t] = run_bench_trial(cfg.ensemble.dims[t / per_dims],
                              cfg.ensemble.sigma2, cfg.ensemble.p_max,
                              cfg.ensemble.seed_base + t, t, cfg.design, &good);
    ok[t] = good;
  });

  Sink sink(cfg.output.path, out);
  if (format_or(cfg, "csv") == "json") {
    sink.stream() << json(rows).dump(2) << '\n';
  } else {
    write_csv(sink.stream(), rows);
  }

  double legacy = 0.0;
  double shortcut = 0.0;
  double gap = 0.0;
  int failures = 0;
  for (int t = 0; t < n; ++t) {
    if (!ok[t]) {
      ++failures;
      continue;
    }
    legacy += rows[t].t_legacy_us;
    shortcut += rows[t].t_shortcut_us;
    gap = std::max(gap, rows[t].pq_max_gap);
  }
  auto& os = cfg.output.path.empty() ? err : out;
  os << "trials = " << n << '\n'
     << "failures = " << failures << '\n'
     << "total_t_legacy_us = " << format_double(legacy) << '\n'
     << "total_t_shortcut_us = " << format_double(shortcut) << '\n'
     << "max_pq_gap = " << format_double(gap) << '\n'
     << "shortcut_faster = " << (shortcut < legacy ? "yes" : "no") << '\n';
  return kExitOk;
}

int cmd_design(RunConfig& cfg, const Flags& f, const CLI::App& sub,
               std::ostream& out) {
  if (f.instance.empty()) throw UsageError("design: --instance is required");
  const auto ch = load_valid_instance(f.instance);
  if (given(sub.get_option("--path"))) {
    cfg.design.path = conversion_path_from_string(f.path);
  }
  if (given(sub.get_option("--init"))) {
    cfg.design.init_mode = init_mode_from_string(f.init);
  }
  if (given(sub.get_option("--max-outer-iters"))) {
    cfg.design.max_outer_iters = f.max_outer_iters;
  }
  if (given(sub.get_option("--smse-rel-tol"))) {
    cfg.design.smse_rel_tol = f.smse_rel_tol;
  }
  if (given(sub.get_option("--kkt-tol"))) cfg.design.solver.kkt_tol = f.kkt_tol;
  cfg.design.seed = given(sub.get_option("--precoder-seed"))
                        ? f.precoder_seed
                        : ch.seed.value_or(0);
  cfg.design.validate();

  Sink sink(cfg.output.path, out);
  auto emit = [&](const DesignResult& r) {
    if (format_or(cfg, "json") == "csv") {
      write_trace_csv(sink.stream(), r);
    } else {
      sink.stream() << json(r).dump(2) << '\n';
    }
  };
  try {
    emit(design(ch, cfg.design));
    return kExitOk;
  } catch (const DesignConvergenceError& e) {
    emit(e.partial());
    throw;
  }
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out,
        std::ostream& err) {
  CLI::App app{
      "Sum-MSE linear precoder design for the multiuser MIMO downlink via "
      "the virtual uplink, with power-duality certification."};
  app.require_subcommand(1);
  app.fallthrough();
  Flags f;

  app.add_option("--config", f.config, "JSON config file");
  app.add_option("--out", f.out, "Output path");
  app.add_option("--format", f.format, "Report format")
      ->check(CLI::IsMember({"json", "csv"}));
  app.add_option("--seed-base", f.seed_base, "First ensemble seed");
  app.add_option("--threads", f.threads, "Worker threads for ensembles");

  auto* gen = app.add_subcommand("gen", "Generate a random channel instance");
  gen->add_option("--M", f.M, "Base-station antennas");
  gen->add_option("--K", f.K, "Users");
  gen->add_option("--N", f.N, "Receive antennas per user, comma separated");
  gen->add_option("--L", f.L, "Streams per user, comma separated");
  gen->add_option("--sigma2", f.sigma2, "Noise variance");
  gen->add_option("--pmax", f.pmax, "Sum-power budget");
  gen->add_option("--seed", f.seed, "Channel seed");

  auto* solve = app.add_subcommand("solve", "Solve and certify the power allocation");
  solve->add_option("--instance,instance", f.instance, "Instance JSON file");
  solve->add_option("--init", f.init, "random_unit | channel_svd");
  solve->add_option("--precoder-seed", f.precoder_seed, "Seed for random beamformers");
  solve->add_option("--kkt-tol", f.kkt_tol, "KKT residual tolerance");
  solve->add_option("--max-iters", f.max_iters, "Solver iteration cap");

  auto* verify = app.add_subcommand("verify", "Certify p = q over a seeded ensemble");
  verify->add_option("--trials", f.trials, "Trials per dims entry");
  verify->add_option("--dims", f.dims, "M,K,N_1..N_K,L_1..L_K (repeatable)");
  verify->add_option("--sigma2", f.sigma2, "Noise variance");
  verify->add_option("--pmax", f.pmax, "Sum-power budget");
  verify->add_flag("--negative-control", f.negative_control,
                   "Use uniform powers instead of solving");
  verify->add_option("--kkt-tol", f.kkt_tol, "KKT residual tolerance");
  verify->add_option("--max-psi-asym", f.max_psi, "Bound on psi_asymmetry");
  verify->add_option("--max-pq-gap", f.max_pq, "Bound on pq_gap");
  verify->add_option("--max-mse-gap", f.max_mse, "Bound on mse_gap");

  auto* bench = app.add_subcommand("bench", "Compare legacy and shortcut power conversion");
  bench->add_option("--trials", f.trials, "Trials per dims entry");
  bench->add_option("--dims", f.dims, "M,K,N_1..N_K,L_1..L_K (repeatable)");
  bench->add_option("--sigma2", f.sigma2, "Noise variance");
  bench->add_option("--pmax", f.pmax, "Sum-power budget");
  bench->add_option("--max-outer-iters", f.max_outer_iters, "Design iteration cap");
  bench->add_option("--kkt-tol", f.kkt_tol, "KKT residual tolerance");

  auto* des = app.add_subcommand("design", "Run the alternating precoder design");
  des->add_option("--instance,instance", f.instance, "Instance JSON file");
  des->add_option("--path", f.path, "legacy_transform | simplified_pq | both");
  des->add_option("--init", f.init, "random_unit | channel_svd");
  des->add_option("--precoder-seed", f.precoder_seed, "Seed for random beamformers");
  des->add_option("--max-outer-iters", f.max_outer_iters, "Iteration cap");
  des->add_option("--smse-rel-tol", f.smse_rel_tol, "Relative decrease threshold");
  des->add_option("--kkt-tol", f.kkt_tol, "KKT residual tolerance");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    RunConfig cfg;
    if (!f.config.empty()) {
      std::ifstream in(f.config);
      if (!in) throw UsageError("cannot open config file " + f.config);
      try {
        cfg = run_config_from_json(json::parse(in));
      } catch (const json::exception& e) {
        throw UsageError("malformed config file: " + std::string(e.what()));
      }
    }
    if (given(app.get_option("--out"))) cfg.output.path = f.out;
    if (given(app.get_option("--format"))) cfg.output.format = f.format;
    if (given(app.get_option("--seed-base"))) cfg.ensemble.seed_base = f.seed_base;
    if (given(app.get_option("--threads"))) cfg.threads = f.threads;
    if (cfg.threads < 1) throw UsageError("threads must be >= 1");

    if (gen->parsed()) return cmd_gen(cfg, f, *gen, out);
    if (solve->parsed()) return cmd_solve(cfg, f, *solve, out);
    if (verify->parsed()) return cmd_verify(cfg, f, *verify, out, err);
    if (bench->parsed()) return cmd_bench(cfg, f, *bench, out, err);
    if (des->parsed()) return cmd_design(cfg, f, *des, out);
    return kExitUsage;
  } catch (const ConvergenceError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConvergence;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const CLI::Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}

}  // namespace mudual::cli
