#include "sigld/serialize.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace sigld {

json tensor_to_json(const LevelTensor& t) {
  json j;
  j["dim"] = t.dim();
  j["level"] = t.level();
  j["data"] = std::vector<double>(t.data().begin(), t.data().end());
  return j;
}

LevelTensor tensor_from_json(const json& j) {
  LevelTensor t(j.at("dim").get<int>(), j.at("level").get<int>());
  auto data = j.at("data").get<std::vector<double>>();
  if (data.size() != t.size())
    throw std::invalid_argument("tensor data length " + std::to_string(data.size()) +
                                " does not match dim^level = " + std::to_string(t.size()));
  for (std::size_t i = 0; i < data.size(); ++i) t[i] = data[i];
  return t;
}

json path_to_json(const PiecewisePath& p) {
  json j;
  j["dim"] = p.dim();
  j["T"] = p.horizon();
  j["knots"] = std::vector<double>(p.knots().begin(), p.knots().end());
  std::vector<std::vector<double>> values;
  for (std::size_t i = 0; i < p.knot_count(); ++i) {
    auto v = p.value(i);
    values.emplace_back(v.begin(), v.end());
  }
  j["values"] = values;
  return j;
}

PiecewisePath path_from_json(const json& j) {
  const int dim = j.at("dim").get<int>();
  auto knots = j.at("knots").get<std::vector<double>>();
  auto values = j.at("values").get<std::vector<std::vector<double>>>();
  if (values.size() != knots.size())
    throw std::invalid_argument("path values/knots length mismatch");
  std::vector<double> flat;
  for (const auto& v : values) {
    if (static_cast<int>(v.size()) != dim) throw std::invalid_argument("path value dim mismatch");
    flat.insert(flat.end(), v.begin(), v.end());
  }
  return PiecewisePath(dim, std::move(knots), std::move(flat));
}

json stack_to_json(const SignatureStack& s) {
  json j;
  j["dim"] = s.dim();
  j["top_level"] = s.top_level();
  j["time"] = s.time();
  json levels = json::array();
  for (int k = 0; k <= s.top_level(); ++k) levels.push_back(tensor_to_json(s.level(k)));
  j["levels"] = levels;
  return j;
}

SignatureStack stack_from_json(const json& j) {
  SignatureStack s(j.at("dim").get<int>(), j.at("top_level").get<int>());
  s.set_time(j.at("time").get<double>());
  const auto& levels = j.at("levels");
  for (int k = 0; k <= s.top_level(); ++k) s.level(k) = tensor_from_json(levels.at(static_cast<std::size_t>(k)));
  return s;
}

namespace {

TrigObservable observable_from_json(const json& j) {
  TrigObservable g;
  g.constant = j.value("constant", 0.0);
  g.cos_coeff = j.value("cos", std::vector<double>{});
  g.sin_coeff = j.value("sin", std::vector<double>{});
  return g;
}

json observable_to_json(const TrigObservable& g) {
  json j;
  j["constant"] = g.constant;
  j["cos"] = g.cos_coeff;
  j["sin"] = g.sin_coeff;
  return j;
}

}  // namespace

json model_to_json(const StepLawModel& m) {
  json j;
  j["kind"] = to_string(m.kind());
  j["dim"] = m.dim();
  j["centered"] = m.centered();
  json params = json::object();
  switch (m.kind()) {
    case ModelKind::iid_rademacher:
      break;
    case ModelKind::iid_uniform:
      params["low"] = m.uniform_low();
      params["high"] = m.uniform_high();
      break;
    case ModelKind::iid_discrete:
      params["support"] = m.support();
      params["probs"] = m.probs();
      break;
    case ModelKind::markov:
      params["transition"] = m.transition();
      params["observations"] = m.observations();
      break;
    case ModelKind::rotation: {
      params["alpha"] = m.rotation_angle();
      json obs = json::array();
      for (const auto& g : m.observables()) obs.push_back(observable_to_json(g));
      params["observables"] = obs;
      break;
    }
    case ModelKind::doubling: {
      json obs = json::array();
      for (const auto& g : m.observables()) obs.push_back(observable_to_json(g));
      params["observables"] = obs;
      break;
    }
  }
  j["params"] = params;
  return j;
}

StepLawModel model_from_json(const json& j) {
  const ModelKind kind = model_kind_from_string(j.at("kind").get<std::string>());
  const bool centered = j.value("centered", false);
  const json params = j.value("params", json::object());
  switch (kind) {
    case ModelKind::iid_rademacher:
      return StepLawModel::rademacher(j.at("dim").get<int>(), centered);
    case ModelKind::iid_uniform:
      return StepLawModel::uniform(j.at("dim").get<int>(), params.at("low").get<double>(),
                                   params.at("high").get<double>(), centered);
    case ModelKind::iid_discrete:
      return StepLawModel::discrete(j.at("dim").get<int>(),
                                    params.at("support").get<std::vector<std::vector<double>>>(),
                                    params.at("probs").get<std::vector<double>>(), centered);
    case ModelKind::markov:
      return StepLawModel::markov(params.at("transition").get<std::vector<std::vector<double>>>(),
                                  params.at("observations").get<std::vector<std::vector<double>>>(),
                                  centered);
    case ModelKind::rotation: {
      std::vector<TrigObservable> obs;
      for (const auto& o : params.at("observables")) obs.push_back(observable_from_json(o));
      return StepLawModel::rotation(params.at("alpha").get<double>(), std::move(obs), centered);
    }
    case ModelKind::doubling: {
      std::vector<TrigObservable> obs;
      for (const auto& o : params.at("observables")) obs.push_back(observable_from_json(o));
      return StepLawModel::doubling(std::move(obs), centered);
    }
  }
  throw std::invalid_argument("unreachable model kind");
}

json rate_problem_to_json(const RateProblem& p) {
  json j;
  j["model"] = model_to_json(p.model);
  j["level"] = p.level;
  j["horizon"] = p.horizon;
  j["mode"] = p.mode == TargetMode::endpoint ? "endpoint" : "path";
  if (p.mode == TargetMode::endpoint) {
    j["target"] = tensor_to_json(p.target);
  } else {
    json targets = json::array();
    for (const auto& [t, tensor] : p.target_path)
      targets.push_back({{"time", t}, {"tensor", tensor_to_json(tensor)}});
    j["target_path"] = targets;
  }
  j["grid"] = p.grid_segments;
  j["multistart"] = p.multistart;
  j["seed"] = p.seed;
  return j;
}

RateProblem rate_problem_from_json(const json& j) {
  RateProblem p;
  p.model = model_from_json(j.at("model"));
  p.level = j.at("level").get<int>();
  p.horizon = j.at("horizon").get<double>();
  const std::string mode = j.value("mode", "endpoint");
  if (mode == "endpoint") {
    p.mode = TargetMode::endpoint;
    p.target = tensor_from_json(j.at("target"));
  } else if (mode == "path") {
    p.mode = TargetMode::path;
    for (const auto& item : j.at("target_path"))
      p.target_path.emplace_back(item.at("time").get<double>(),
                                 tensor_from_json(item.at("tensor")));
  } else {
    throw std::invalid_argument("mode must be endpoint or path");
  }
  p.grid_segments = j.value("grid", 32);
  p.multistart = j.value("multistart", 16);
  p.residual_tol = j.value("residual_tol", 1e-6);
  p.stationarity_tol = j.value("stationarity_tol", 1e-8);
  p.outer_max = j.value("outer_max", 50);
  p.seed = j.value("seed", static_cast<std::uint64_t>(1));
  return p;
}

json rate_solution_to_json(const RateSolution& s) {
  json j;
  j["value"] = s.value;
  j["profile"] = s.profile;
  j["residual"] = s.residual;
  j["converged"] = s.converged;
  j["upper_bound_only"] = !s.converged;
  j["outer_iterations"] = s.outer_iterations;
  json sv = json::array();
  for (double v : s.start_values) {
    if (std::isnan(v))
      sv.push_back(nullptr);
    else
      sv.push_back(v);
  }
  j["start_values"] = sv;
  j["dispersion"] = s.dispersion;
  return j;
}

json estimate_to_json(const LDPEstimate& e) {
  json j;
  j["method"] = e.method;
  j["delta"] = e.delta;
  j["seed"] = e.seed;
  json pts = json::array();
  for (const auto& p : e.per_n) {
    json q;
    q["n"] = p.n;
    q["p_hat"] = p.p_hat;
    q["std_error"] = p.std_error;
    q["slope"] = p.slope;
    q["resolved"] = p.resolved;
    q["hits"] = p.hits;
    pts.push_back(q);
  }
  j["per_n"] = pts;
  j["fitted_slope"] = e.fitted_slope;
  j["fitted_intercept"] = e.fitted_intercept;
  j["fitted_slope_err"] = e.fitted_slope_err;
  j["slope_resolved"] = e.slope_resolved;
  return j;
}

LDPEstimate estimate_from_json(const json& j) {
  LDPEstimate e;
  e.method = j.at("method").get<std::string>();
  e.delta = j.at("delta").get<double>();
  e.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& q : j.at("per_n")) {
    ProbePoint p;
    p.n = q.at("n").get<long>();
    p.p_hat = q.at("p_hat").get<double>();
    p.std_error = q.at("std_error").get<double>();
    p.slope = q.at("slope").get<double>();
    p.resolved = q.at("resolved").get<bool>();
    p.hits = q.at("hits").get<long>();
    e.per_n.push_back(p);
  }
  e.fitted_slope = j.at("fitted_slope").get<double>();
  e.fitted_intercept = j.at("fitted_intercept").get<double>();
  e.fitted_slope_err = j.at("fitted_slope_err").get<double>();
  e.slope_resolved = j.at("slope_resolved").get<bool>();
  return e;
}

json comparison_to_json(const ComparisonRecord& r) {
  json j;
  j["fitted_slope"] = r.fitted_slope;
  j["envelope"] = r.envelope;
  j["point_rate"] = r.point_rate;
  j["rel_tol"] = r.rel_tol;
  j["abs_tol"] = r.abs_tol;
  j["verdict"] = r.verdict;
  return j;
}

json holder_report_to_json(const HolderReport& r) {
  json j;
  j["mode"] = r.mode == PerturbMode::adversarial ? "adversarial" : "random";
  json trials = json::array();
  for (const auto& t : r.trials)
    trials.push_back({{"eps2", t.eps2}, {"s", t.s}, {"dist", t.dist}, {"ratio", t.ratio}});
  j["trials"] = trials;
  j["exponent"] = r.exponent;
  j["exponent_stderr"] = r.exponent_stderr;
  j["max_ratio"] = r.max_ratio;
  j["decades"] = r.decades;
  j["decade_median_ratio"] = r.decade_median_ratio;
  return j;
}

json lln_report_to_json(const LlnReport& r) {
  json j;
  j["limit_factor"] = r.limit_factor;
  json pts = json::array();
  for (const auto& p : r.per_n)
    pts.push_back({{"n", p.n}, {"median_error", p.median_error}, {"max_error", p.max_error}});
  j["per_n"] = pts;
  j["decay_exponent"] = r.decay_exponent;
  j["exponent_fitted"] = r.exponent_fitted;
  return j;
}

json regularity_report_to_json(const RegularityReport& r) {
  json j;
  j["trials"] = r.trials;
  j["level_bound_violations"] = r.level_bound_violations;
  j["time_lipschitz_violations"] = r.time_lipschitz_violations;
  j["worst_level_slack"] = r.worst_level_slack;
  j["worst_lipschitz_slack"] = r.worst_lipschitz_slack;
  j["extremal_gap"] = r.extremal_gap;
  return j;
}

std::string sequence_to_csv(const SampledSequence& seq) {
  std::string out;
  char buf[64];
  for (std::size_t k = 0; k < seq.size(); ++k) {
    auto s = seq.sample(k);
    for (int c = 0; c < seq.dim(); ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", s[static_cast<std::size_t>(c)]);
      out += buf;
      out += (c + 1 == seq.dim()) ? '\n' : ',';
    }
  }
  return out;
}

SampledSequence sequence_from_csv(const std::string& text) {
  std::vector<double> flat;
  int dim = -1;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    int cols = 0;
    while (std::getline(ls, cell, ',')) {
      flat.push_back(std::stod(cell));
      ++cols;
    }
    if (dim < 0)
      dim = cols;
    else if (cols != dim)
      throw std::invalid_argument("CSV rows have inconsistent column counts");
  }
  if (dim < 1) throw std::invalid_argument("CSV contains no samples");
  return SampledSequence(dim, std::move(flat));
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace sigld
