// Batch front end: gen, sig, rate, probe, report and check subcommands over
// JSON configs, with a manifest written next to every output set.
//
// Exit codes: 0 success, 2 config error, 3 rate non-convergence,
// 4 unresolved probe, 1 anything else.

#include <cstdio>
#include <cstdlib>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sigld/diagnostics.hpp"
#include "sigld/manifest.hpp"
#include "sigld/mcprobe.hpp"
#include "sigld/rate.hpp"
#include "sigld/serialize.hpp"
#include "sigld/signature.hpp"
#include "sigld/svg.hpp"
#include "sigld/version.hpp"

namespace {

using sigld::json;

void diag(const std::string& line) { std::cerr << line << "\n"; }

json load_json(const std::string& path) { return json::parse(sigld::read_text_file(path)); }

int default_threads() {
  if (const char* env = std::getenv("SIGLD_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  return 1;
}

// Runs a command body that returns the list of output files, then writes the
// manifest next to the primary output.
int with_manifest(const std::string& command, const json& config_echo, std::uint64_t seed,
                  const std::string& manifest_path,
                  const std::function<std::vector<std::string>()>& body) {
  sigld::Manifest man;
  man.command = command;
  man.config = config_echo;
  man.master_seed = seed;
  man.version = sigld::kVersion;
  man.started_at = sigld::iso8601_now();
  auto outputs = body();
  man.finished_at = sigld::iso8601_now();
  for (const auto& path : outputs) man.add_output(path);
  man.write(manifest_path);
  return 0;
}

double csv_format_slope(const sigld::ProbePoint& p) { return p.resolved ? p.slope : 0.0; }

struct SigOptions {
  std::string input_path, sequence_path, out = "signature.json";
  int level = 2;
  double time = 1.0;
  std::string method = "exact";
  double step = 1e-3;
  long n = 1;
  bool force = false;
};

int run_sig(const SigOptions& opt) {
  json echo{{"input", opt.input_path}, {"sequence", opt.sequence_path}, {"level", opt.level},
            {"time", opt.time},        {"method", opt.method},          {"step", opt.step},
            {"n", opt.n},              {"out", opt.out}};
  return with_manifest("sig", echo, 0, opt.out + ".manifest.json", [&]() {
    std::optional<sigld::SignatureStack> stack;
    if (opt.method == "direct" || opt.method == "stream") {
      if (opt.sequence_path.empty())
        throw std::invalid_argument("method " + opt.method + " needs --sequence");
      auto seq = sigld::sequence_from_csv(sigld::read_text_file(opt.sequence_path));
      if (opt.method == "direct") {
        stack = sigld::iterated_sum_direct(seq, opt.level, opt.n, opt.time, opt.force);
      } else {
        std::vector<double> grid{opt.time};
        stack = sigld::iterated_sum_stream(seq, opt.level, opt.n, grid)[0];
      }
    } else if (opt.method == "exact" || opt.method == "quad") {
      sigld::PiecewisePath path = [&]() {
        if (!opt.input_path.empty()) return sigld::path_from_json(load_json(opt.input_path));
        if (opt.sequence_path.empty())
          throw std::invalid_argument("method " + opt.method + " needs --input or --sequence");
        auto seq = sigld::sequence_from_csv(sigld::read_text_file(opt.sequence_path));
        return sigld::phi_n_from_sequence(seq, opt.n, opt.time);
      }();
      if (opt.time > path.horizon() + 1e-9)
        throw std::invalid_argument("evaluation time " + std::to_string(opt.time) +
                                    " exceeds the path horizon " + std::to_string(path.horizon()));
      if (opt.time < path.horizon() - 1e-12) path = path.restricted(opt.time);
      if (opt.method == "exact")
        stack = sigld::phi_map_exact(path, opt.level).back();
      else
        stack = sigld::phi_map_quadrature(path, opt.level, opt.step).back();
    } else {
      throw std::invalid_argument("unknown method: " + opt.method);
    }
    sigld::write_text_file(opt.out, sigld::stack_to_json(*stack).dump(2) + "\n");
    return std::vector<std::string>{opt.out};
  });
}

int run_gen(const std::string& config_path, std::string out, std::optional<std::uint64_t> seed_flag) {
  json cfg = load_json(config_path);
  auto model = sigld::model_from_json(cfg.at("model"));
  const auto n = cfg.at("n").get<std::size_t>();
  std::uint64_t seed = seed_flag ? *seed_flag
                                 : (cfg.contains("seed") ? cfg.at("seed").get<std::uint64_t>()
                                                         : cfg.at("model").value("seed", 0ull));
  if (!seed_flag && !cfg.contains("seed") && !cfg.at("model").contains("seed"))
    throw std::invalid_argument("gen config must carry an explicit seed");
  if (out.empty()) out = cfg.value("out", "sequence.csv");
  json echo = cfg;
  echo["seed"] = seed;
  echo["out"] = out;
  return with_manifest("gen", echo, seed, out + ".manifest.json", [&]() {
    auto seq = model.sample_sequence(n, seed);
    sigld::write_text_file(out, sigld::sequence_to_csv(seq));
    return std::vector<std::string>{out};
  });
}

struct RateOptions {
  std::string config_path, out = "rate.json";
  std::optional<int> multistart, grid;
  std::optional<double> delta;
  std::optional<std::string> mode;
  int threads = 1;
};

int run_rate(const RateOptions& opt) {
  json cfg = load_json(opt.config_path);
  if (opt.multistart) cfg["multistart"] = *opt.multistart;
  if (opt.grid) cfg["grid"] = *opt.grid;
  if (opt.mode) cfg["mode"] = *opt.mode;
  auto prob = sigld::rate_problem_from_json(cfg);
  json echo = cfg;
  echo["out"] = opt.out;
  if (opt.delta) echo["delta"] = *opt.delta;

  sigld::RateSolution sol;
  std::optional<sigld::RateSolution> env;
  int rc = with_manifest("rate", echo, prob.seed, opt.out + ".manifest.json", [&]() {
    sol = sigld::contraction_rate(prob, opt.threads);
    json out_json;
    out_json["problem"] = sigld::rate_problem_to_json(prob);
    out_json["solution"] = sigld::rate_solution_to_json(sol);
    if (opt.delta) {
      env = sigld::rate_lower_envelope(prob, *opt.delta, opt.threads);
      out_json["delta"] = *opt.delta;
      out_json["envelope"] = sigld::rate_solution_to_json(*env);
    }
    sigld::write_text_file(opt.out, out_json.dump(2) + "\n");
    return std::vector<std::string>{opt.out};
  });
  if (rc != 0) return rc;
  if (!sol.converged || (env && !env->converged)) {
    diag("event=non_convergence residual=" + std::to_string(sol.residual));
    return 3;
  }
  return 0;
}

struct ProbeOptions {
  std::string config_path, out = "probe.json", csv;
  int threads = 1;
};

int run_probe(const ProbeOptions& opt) {
  json cfg = load_json(opt.config_path);
  sigld::ProbeConfig pc;
  pc.model = sigld::model_from_json(cfg.at("model"));
  pc.level = cfg.at("level").get<int>();
  pc.horizon = cfg.value("horizon", 1.0);
  pc.target = sigld::tensor_from_json(cfg.at("target"));
  pc.delta = cfg.at("delta").get<double>();
  pc.n_list = cfg.at("n_list").get<std::vector<long>>();
  pc.trials = cfg.at("trials").get<long>();
  pc.batches = cfg.value("batches", 16);
  pc.seed = cfg.at("seed").get<std::uint64_t>();
  pc.allow_large_run = cfg.value("allow_large_run", false);
  const std::string method = cfg.value("method", "naive");
  json echo = cfg;
  echo["out"] = opt.out;
  if (!opt.csv.empty()) echo["csv"] = opt.csv;

  sigld::LDPEstimate est;
  int rc = with_manifest("probe", echo, pc.seed, opt.out + ".manifest.json", [&]() {
    if (method == "naive") {
      est = sigld::estimate_naive(pc, opt.threads);
    } else if (method == "tilted") {
      sigld::RateProblem rp;
      rp.model = pc.model;
      rp.level = pc.level;
      rp.horizon = pc.horizon;
      rp.target = pc.target;
      rp.grid_segments = cfg.value("grid", 16);
      rp.multistart = cfg.value("multistart", 8);
      rp.seed = pc.seed;
      auto sol = sigld::contraction_rate(rp, opt.threads);
      est = sigld::estimate_tilted(pc, sol, opt.threads);
    } else {
      throw std::invalid_argument("probe method must be naive or tilted");
    }
    json out_json = sigld::estimate_to_json(est);
    sigld::write_text_file(opt.out, out_json.dump(2) + "\n");
    std::vector<std::string> outputs{opt.out};
    if (!opt.csv.empty()) {
      std::string rows = "n,p_hat,std_error,slope\n";
      char buf[160];
      for (const auto& p : est.per_n) {
        std::snprintf(buf, sizeof(buf), "%ld,%.17g,%.17g,%.17g\n", p.n, p.p_hat, p.std_error,
                      csv_format_slope(p));
        rows += buf;
      }
      sigld::write_text_file(opt.csv, rows);
      outputs.push_back(opt.csv);
    }
    return outputs;
  });
  if (rc != 0) return rc;
  bool unresolved = pc.n_list.size() >= 2 && !est.slope_resolved;
  for (const auto& p : est.per_n) unresolved = unresolved || !p.resolved;
  if (unresolved) {
    diag("event=unresolved_probe method=" + method);
    return 4;
  }
  return 0;
}

struct ReportOptions {
  std::string config_path, out = "report.json", svg;
};

int run_report(const ReportOptions& opt) {
  json cfg = load_json(opt.config_path);
  json echo = cfg;
  echo["out"] = opt.out;
  if (!opt.svg.empty()) echo["svg"] = opt.svg;

  auto est = sigld::estimate_from_json(load_json(cfg.at("probe").get<std::string>()));
  json rate_json = load_json(cfg.at("rate").get<std::string>());
  const double point_rate = rate_json.at("solution").at("value").get<double>();
  const double envelope = rate_json.contains("envelope")
                              ? rate_json.at("envelope").at("value").get<double>()
                              : point_rate;
  const double env_scale = cfg.value("envelope_scale", 1.0);  // negative-control hook
  const double rel_tol = cfg.value("rel_tol", 0.2);
  const double abs_tol = cfg.value("abs_tol", 0.02);

  auto rec = sigld::slope_vs_rate_report(est, envelope * env_scale, point_rate * env_scale, rel_tol,
                                         abs_tol);
  int rc = with_manifest("report", echo, est.seed, opt.out + ".manifest.json", [&]() {
    json out_json = sigld::comparison_to_json(rec);
    out_json["per_n"] = sigld::estimate_to_json(est)["per_n"];
    sigld::write_text_file(opt.out, out_json.dump(2) + "\n");
    std::vector<std::string> outputs{opt.out};
    if (!opt.svg.empty()) {
      sigld::PlotSpec spec;
      spec.title = "decay slope vs n";
      spec.x_label = "n";
      spec.y_label = "-log(p)/n";
      sigld::PlotSeries pts;
      pts.label = est.method;
      for (const auto& p : est.per_n) {
        if (!p.resolved) continue;
        pts.x.push_back(static_cast<double>(p.n));
        pts.y.push_back(p.slope);
      }
      spec.series.push_back(pts);
      spec.band_lo = rec.envelope;
      spec.band_hi = rec.point_rate;
      if (est.slope_resolved && pts.x.size() > 1) {
        spec.draw_fit = true;
        spec.fit_slope = 0.0;
        spec.fit_intercept = est.fitted_slope;
        char buf[64];
        std::snprintf(buf, sizeof(buf), "fitted slope %.6g", est.fitted_slope);
        spec.fit_label = buf;
      }
      sigld::emit_plot(spec, opt.svg);
      outputs.push_back(opt.svg);
    }
    return outputs;
  });
  if (rc != 0) return rc;
  if (rec.verdict == "unresolved") {
    diag("event=unresolved_probe stage=report");
    return 4;
  }
  return 0;
}

struct CheckOptions {
  std::string suite, config_path, out = "check.json", csv;
};

int run_check(const CheckOptions& opt) {
  json cfg = load_json(opt.config_path);
  const std::string suite = opt.suite.empty() ? cfg.at("suite").get<std::string>() : opt.suite;
  const auto seed = cfg.at("seed").get<std::uint64_t>();
  json echo = cfg;
  echo["suite"] = suite;
  echo["out"] = opt.out;
  if (!opt.csv.empty()) echo["csv"] = opt.csv;

  int suite_failures = 0;
  int rc = with_manifest("check", echo, seed, opt.out + ".manifest.json", [&]() {
    std::vector<std::string> outputs{opt.out};
    char buf[200];
    if (suite == "holder") {
      auto eps2 = cfg.at("eps2_list").get<std::vector<double>>();
      const auto mode = cfg.value("mode", "random") == std::string("adversarial")
                            ? sigld::PerturbMode::adversarial
                            : sigld::PerturbMode::random;
      auto rep = sigld::holder_suite(cfg.at("level").get<int>(), cfg.at("dim").get<int>(),
                                     cfg.value("horizon", 1.0), eps2, cfg.value("trials", 16), mode,
                                     seed);
      sigld::write_text_file(opt.out, sigld::holder_report_to_json(rep).dump(2) + "\n");
      if (!opt.csv.empty()) {
        std::string rows = "eps2,s,dist,ratio\n";
        for (const auto& t : rep.trials) {
          std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g\n", t.eps2, t.s, t.dist, t.ratio);
          rows += buf;
        }
        sigld::write_text_file(opt.csv, rows);
        outputs.push_back(opt.csv);
      }
    } else if (suite == "lln") {
      auto model = sigld::model_from_json(cfg.at("model"));
      auto n_list = cfg.at("n_list").get<std::vector<long>>();
      auto rep = sigld::lln_suite(model, cfg.at("level").get<int>(), cfg.value("horizon", 1.0),
                                  n_list, cfg.value("reps", 16), seed);
      sigld::write_text_file(opt.out, sigld::lln_report_to_json(rep).dump(2) + "\n");
      if (!opt.csv.empty()) {
        std::string rows = "n,median_error,max_error\n";
        for (const auto& p : rep.per_n) {
          std::snprintf(buf, sizeof(buf), "%ld,%.17g,%.17g\n", p.n, p.median_error, p.max_error);
          rows += buf;
        }
        sigld::write_text_file(opt.csv, rows);
        outputs.push_back(opt.csv);
      }
    } else if (suite == "regularity") {
      auto rep = sigld::regularity_suite(cfg.at("level").get<int>(), cfg.at("dim").get<int>(),
                                         cfg.value("horizon", 1.0), cfg.value("trials", 100), seed);
      suite_failures = rep.level_bound_violations + rep.time_lipschitz_violations;
      sigld::write_text_file(opt.out, sigld::regularity_report_to_json(rep).dump(2) + "\n");
      if (!opt.csv.empty()) {
        std::snprintf(buf, sizeof(buf), "trials,level_violations,lipschitz_violations\n%d,%d,%d\n",
                      rep.trials, rep.level_bound_violations, rep.time_lipschitz_violations);
        sigld::write_text_file(opt.csv, buf);
        outputs.push_back(opt.csv);
      }
    } else {
      throw std::invalid_argument("suite must be holder, lln or regularity");
    }
    return outputs;
  });
  if (rc != 0) return rc;
  if (suite_failures > 0) {
    diag("event=suite_failure count=" + std::to_string(suite_failures));
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"iterated-sum signatures, large-deviation rate functions and Monte Carlo probes"};
  app.set_version_flag("--version", sigld::kVersion);
  app.require_subcommand(1);

  bool allow_large = false;
  app.add_flag("--allow-large", allow_large,
               "lift the desk-scale limits on tensor shape (dim <= 4, level <= 6)");

  std::function<int()> action;

  auto* gen = app.add_subcommand("gen", "sample a step-law model to CSV");
  {
    auto config = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto seed = std::make_shared<std::int64_t>(-1);
    gen->add_option("--config", *config, "model config JSON")->required();
    gen->add_option("--out", *out, "output CSV path");
    gen->add_option("--seed", *seed, "override seed");
    gen->callback([&action, config, out, seed]() {
      action = [=]() {
        return run_gen(*config, *out,
                       *seed >= 0 ? std::optional<std::uint64_t>(static_cast<std::uint64_t>(*seed))
                                  : std::nullopt);
      };
    });
  }

  auto* sig = app.add_subcommand("sig", "signature of a path or sequence file");
  {
    auto opt = std::make_shared<SigOptions>();
    sig->add_option("--input", opt->input_path, "PiecewisePath JSON");
    sig->add_option("--sequence", opt->sequence_path, "sample CSV");
    sig->add_option("--level", opt->level, "top level nu")->required();
    sig->add_option("--time", opt->time, "evaluation time")->required();
    sig->add_option("--method", opt->method, "direct|stream|exact|quad");
    sig->add_option("--step", opt->step, "quadrature step h");
    sig->add_option("--n", opt->n, "samples per unit time");
    sig->add_option("--out", opt->out, "output JSON");
    sig->add_flag("--force", opt->force, "override the enumeration-size guard");
    sig->callback([&action, opt]() {
      action = [=]() { return run_sig(*opt); };
    });
  }

  auto* rate = app.add_subcommand("rate", "contraction-principle rate solve");
  {
    auto opt = std::make_shared<RateOptions>();
    auto multistart = std::make_shared<int>(-1);
    auto grid = std::make_shared<int>(-1);
    auto delta = std::make_shared<double>(-1.0);
    auto mode = std::make_shared<std::string>();
    opt->threads = default_threads();
    rate->add_option("--config", opt->config_path, "rate problem JSON")->required();
    rate->add_option("--out", opt->out, "output JSON");
    rate->add_option("--multistart", *multistart, "multistart count");
    rate->add_option("--grid", *grid, "slope grid segments");
    rate->add_option("--delta", *delta, "also solve the closed-ball envelope at this radius");
    rate->add_option("--mode", *mode, "endpoint|path");
    rate->add_option("--threads", opt->threads, "worker threads");
    rate->callback([&action, opt, multistart, grid, delta, mode]() {
      action = [=]() {
        RateOptions o = *opt;
        if (*multistart > 0) o.multistart = *multistart;
        if (*grid > 0) o.grid = *grid;
        if (*delta > 0) o.delta = *delta;
        if (!mode->empty()) o.mode = *mode;
        return run_rate(o);
      };
    });
  }

  auto* probe = app.add_subcommand("probe", "Monte Carlo ball-probability estimate");
  {
    auto opt = std::make_shared<ProbeOptions>();
    opt->threads = default_threads();
    probe->add_option("--config", opt->config_path, "probe config JSON")->required();
    probe->add_option("--out", opt->out, "output JSON");
    probe->add_option("--csv", opt->csv, "per-n CSV rows");
    probe->add_option("--threads", opt->threads, "worker threads");
    probe->callback([&action, opt]() {
      action = [=]() { return run_probe(*opt); };
    });
  }

  auto* report = app.add_subcommand("report", "join a probe output with a rate output");
  {
    auto opt = std::make_shared<ReportOptions>();
    report->add_option("--config", opt->config_path, "report config JSON")->required();
    report->add_option("--out", opt->out, "output JSON");
    report->add_option("--svg", opt->svg, "slope-vs-n SVG");
    report->callback([&action, opt]() {
      action = [=]() { return run_report(*opt); };
    });
  }

  auto* check = app.add_subcommand("check", "structural property suites");
  {
    auto opt = std::make_shared<CheckOptions>();
    check->add_option("--suite", opt->suite, "holder|lln|regularity");
    check->add_option("--config", opt->config_path, "suite config JSON")->required();
    check->add_option("--out", opt->out, "report JSON");
    check->add_option("--csv", opt->csv, "trial rows CSV");
    check->callback([&action, opt]() {
      action = [=]() { return run_check(*opt); };
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  sigld::set_tensor_limit_override(allow_large);
  try {
    return action();
  } catch (const nlohmann::json::exception& e) {
    diag(std::string("event=config_error msg=\"") + e.what() + "\"");
    return 2;
  } catch (const std::invalid_argument& e) {
    diag(std::string("event=config_error msg=\"") + e.what() + "\"");
    return 2;
  } catch (const std::exception& e) {
    diag(std::string("event=error msg=\"") + e.what() + "\"");
    return 1;
  }
}
