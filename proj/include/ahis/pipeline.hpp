#pragma once

// End-to-end analysis: polynomial → Newton diagram → parametrization per
// face → induced metric and model operator → heat trace and its expansion.

#include <cmath>
#include <cstddef>
#include <fstream>
#include <future>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ahis/cone.hpp"
#include "ahis/error.hpp"
#include "ahis/estimates.hpp"
#include "ahis/expansion.hpp"
#include "ahis/metric.hpp"
#include "ahis/newton.hpp"
#include "ahis/poly.hpp"
#include "ahis/spectral.hpp"

namespace ahis {

class IoError : public Error {
 public:
  using Error::Error;
};

enum ExitCode : int { kExitOk = 0, kExitParse = 2, kExitStage = 3, kExitIo = 4 };

struct AnalysisConfig {
  std::string input;   // path; empty when `polynomial` is given directly
  std::string polynomial;
  std::size_t dim = 0;  // 0: infer for text input
  double epsilon = 0.1;
  double delta = 0.5;
  int q_max = 6;
  std::size_t n_r = 512;
  std::size_t modes = 32;
  std::size_t max_modes = 1024;
  double grading = 2;
  // Times in units of ε²: t ∈ [t_min, t_max]·ε², t_count points.
  double t_min = 1e-4, t_max = 1e-1;
  std::size_t t_count = 48;
  double chi_inner = 0.5, chi_outer = 0.9;  // cutoff, in units of ε
  Rational fit_cutoff = 0;                  // largest dictionary exponent
  double exponent_tolerance = 0.05;
  double residual_tolerance = 1e-9;
  unsigned seed = 7;
  bool parallel = true;
  bool run_parametrize = true, run_metric = true, run_spectral = true, run_estimates = true;

  void validate() const {
    auto pos = [](double v, const char* what) {
      if (!(v > 0)) throw DomainError(std::string(what) + " must be positive");
    };
    pos(epsilon, "epsilon");
    pos(delta, "delta");
    pos(grading, "grading");
    pos(exponent_tolerance, "exponent tolerance");
    pos(residual_tolerance, "residual tolerance");
    if (q_max < 0) throw DomainError("q_max must be non-negative");
    if (!(t_min > 0 && t_min < t_max && t_max <= 1)) throw DomainError("t-window must satisfy 0 < t_min < t_max <= 1");
    if (t_count < 2) throw DomainError("t-window needs at least two points");
    if (!(0 < chi_inner && chi_inner < chi_outer && chi_outer < 1)) throw DomainError("cutoff needs 0 < inner < outer < 1");
    if (n_r < 64) throw DomainError("radial grid needs at least 64 intervals");
    if (modes == 0) throw DomainError("mode count must be positive");
  }
};

struct StageResult {
  std::string stage;
  bool enabled = true;
  bool ok = false;
  std::string error;
  nlohmann::json data;
};

struct FaceRecord {
  std::size_t index = 0;  // 1-based face index j
  nlohmann::json weights;
  std::string face_poly;
  std::vector<StageResult> stages;

  const StageResult* stage(const std::string& name) const {
    for (const auto& s : stages)
      if (s.stage == name) return &s;
    return nullptr;
  }
};

struct AnalysisReport {
  nlohmann::json config;
  std::string polynomial;
  std::size_t dim = 0;
  StageResult diagram;
  std::vector<FaceRecord> faces;
  int exit_code = kExitOk;

  bool ok() const { return exit_code == kExitOk; }
};

inline void to_json(nlohmann::json& j, const AnalysisConfig& c) {
  j = {{"input", c.input},
       {"dim", c.dim},
       {"epsilon", c.epsilon},
       {"delta", c.delta},
       {"q_max", c.q_max},
       {"n_r", c.n_r},
       {"modes", c.modes},
       {"max_modes", c.max_modes},
       {"grading", c.grading},
       {"t_window", {c.t_min, c.t_max, c.t_count}},
       {"cutoff", {c.chi_inner, c.chi_outer}},
       {"fit_cutoff", format_rational(c.fit_cutoff)},
       {"exponent_tolerance", c.exponent_tolerance},
       {"residual_tolerance", c.residual_tolerance},
       {"seed", c.seed},
       {"stages",
        {{"parametrize", c.run_parametrize},
         {"metric", c.run_metric},
         {"spectral", c.run_spectral},
         {"estimates", c.run_estimates}}}};
}

inline void to_json(nlohmann::json& j, const StageResult& s) {
  j = {{"stage", s.stage}, {"enabled", s.enabled}, {"status", !s.enabled ? "skipped" : s.ok ? "ok" : "failed"}};
  if (!s.error.empty()) j["error"] = s.error;
  if (!s.data.is_null()) j["data"] = s.data;
}

inline void from_json(const nlohmann::json& j, StageResult& s) {
  s.stage = j.at("stage").get<std::string>();
  s.enabled = j.at("enabled").get<bool>();
  s.ok = j.at("status") == "ok";
  s.error = j.value("error", std::string());
  s.data = j.contains("data") ? j.at("data") : nlohmann::json();
}

inline void to_json(nlohmann::json& j, const FaceRecord& f) {
  j = {{"index", f.index}, {"weights", f.weights}, {"face_poly", f.face_poly}, {"stages", f.stages}};
}

inline void from_json(const nlohmann::json& j, FaceRecord& f) {
  f.index = j.at("index").get<std::size_t>();
  f.weights = j.at("weights");
  f.face_poly = j.at("face_poly").get<std::string>();
  f.stages = j.at("stages").get<std::vector<StageResult>>();
}

inline void to_json(nlohmann::json& j, const AnalysisReport& r) {
  j = {{"config", r.config},
       {"polynomial", r.polynomial},
       {"dim", r.dim},
       {"status", r.ok() ? "ok" : "failed"},
       {"exit_code", r.exit_code},
       {"diagram", r.diagram},
       {"faces", r.faces}};
}

inline void from_json(const nlohmann::json& j, AnalysisReport& r) {
  r.config = j.at("config");
  r.polynomial = j.at("polynomial").get<std::string>();
  r.dim = j.at("dim").get<std::size_t>();
  r.exit_code = j.at("exit_code").get<int>();
  r.diagram = j.at("diagram").get<StageResult>();
  r.faces = j.at("faces").get<std::vector<FaceRecord>>();
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("cannot read " + path);
  return ss.str();
}

/// A germ with a non-zero linear part is smooth at the origin.
inline bool is_smooth_germ(const Polynomial& f) {
  for (const auto& [e, c] : f.terms()) {
    int deg = 0;
    for (int x : e.entries()) deg += x;
    if (deg == 1) return true;
  }
  return false;
}

namespace detail {

inline nlohmann::json puiseux_table(const Parametrization& P) {
  auto out = nlohmann::json::array();
  for (std::size_t k = 0; k < P.chi.size(); ++k) {
    const auto s = P.component_series(k);
    auto terms = nlohmann::json::array();
    for (const auto& [q, c] : s.terms())
      if (c.is_constant()) terms.push_back({{"exponent", format_rational(q)}, {"coeff", to_double(c.constant_term())}});
    out.push_back({{"component", k + 1}, {"terms", terms}});
  }
  return out;
}

/// First chart through the positive slice root, else the first chart.
inline const LinkChart& preferred_chart(const std::vector<LinkChart>& charts) {
  for (const auto& c : charts)
    if (c.radial_sign > 0 && c.base_root > 0) return c;
  return charts.front();
}

template <class F>
StageResult run_stage(const std::string& name, bool enabled, F&& body) {
  StageResult s;
  s.stage = name;
  s.enabled = enabled;
  if (!enabled) return s;
  try {
    s.data = body();
    s.ok = true;
  } catch (const std::exception& e) {
    s.error = e.what();
  }
  return s;
}

inline FaceRecord analyze_face(const Polynomial& f, const NewtonDiagram& diagram, std::size_t fi, const AnalysisConfig& cfg) {
  const auto& face = diagram.faces[fi];
  FaceRecord rec;
  rec.index = fi + 1;
  rec.weights = face.weight;
  rec.face_poly = face.face_poly.to_string();

  std::optional<Parametrization> P;
  rec.stages.push_back(run_stage("parametrize", cfg.run_parametrize, [&] {
    LinkOptions lo;
    lo.delta = cfg.delta;
    lo.epsilon = cfg.epsilon;
    const auto charts = link_charts(face, f, lo);
    ParametrizeOptions po;
    po.q_max = cfg.q_max;
    po.epsilon = cfg.epsilon;
    po.delta = cfg.delta;
    po.residual_tol = cfg.residual_tolerance;
    P = newton_solve_series(f, face, preferred_chart(charts), po);
    nlohmann::json j = *P;
    j["quasihomogeneous"] = face.remainder.is_zero();
    j["correction_zero"] = P->correction && P->correction->is_zero();
    j["branches"] = charts.size();
    j["puiseux"] = puiseux_table(*P);
    return j;
  }));

  const bool have_P = P.has_value();
  std::optional<ModelOperator> op;
  rec.stages.push_back(run_stage("metric", cfg.run_metric && have_P, [&] {
    const auto N = remove_cross_term(induced_metric(*P));
    op = model_operator(N);
    return nlohmann::json{{"normalized_metric", N}, {"model", *op}};
  }));

  rec.stages.push_back(run_stage("spectral", cfg.run_spectral && op.has_value(), [&] {
    const double eps = op->epsilon;
    const auto chi = RadialCutoff::bump(cfg.chi_inner * eps, cfg.chi_outer * eps);
    const auto t = geometric_grid(cfg.t_min * eps * eps, cfg.t_max * eps * eps, cfg.t_count);
    std::optional<HeatTraceSamples> h;
    std::size_t modes = cfg.modes;
    for (;;) {
      const auto D = discretize_model(*op, {cfg.n_r, static_cast<int>(modes), cfg.grading});
      try {
        h = heat_trace(D, t, chi);
        break;
      } catch (const NumericalError&) {
        if (2 * modes > cfg.max_modes) throw;
        modes *= 2;
      }
    }
    NewtonDiagram single{diagram.dim, {face}};
    ExponentParams ep;
    ep.n = diagram.dim - 1;
    ep.alpha = {op->alpha > 0 ? op->alpha : Rational(2)};
    ep.cutoff = cfg.fit_cutoff;
    const auto predicted = predicted_exponents(single, ep);
    const auto fit = fit_power_log(*h, predicted);
    const double area = weighted_area(op->profile, op->k, chi);
    const double weyl = area / std::pow(4 * std::numbers::pi, static_cast<double>(ep.n) / 2);
    nlohmann::json j{{"modes_used", modes}, {"heat_trace", *h}, {"fit", fit}, {"area", area}, {"weyl_leading", weyl}};
    // Leading singular exponent after removing the Weyl terms t^{−n/2} and t^{1−n/2}.
    const Rational lead = -Rational(static_cast<int>(ep.n), 2);
    if (const auto* a = fit.find(lead)) {
      const auto* b = fit.find(lead + 1);
      std::vector<double> rest;
      for (std::size_t i = 0; i < t.size(); ++i)
        rest.push_back(h->values[i] - a->coeff * std::pow(t[i], to_double(lead)) - (b ? b->coeff * std::pow(t[i], to_double(lead) + 1) : 0.0));
      const auto s = fit_single_exponent(t, rest, to_double(lead) + 0.05, to_double(lead) + 2, false);
      const double dist = predicted.distance(s.exponent);
      j["leading_coefficient_ratio"] = a->coeff / weyl;
      j["residual_exponent"] = {{"fitted", s.exponent}, {"coeff", s.coeff}, {"distance_to_predicted", dist},
                                {"in_predicted_set", dist <= cfg.exponent_tolerance}};
    }
    auto table = nlohmann::json::array();
    for (const auto& term : fit.terms)
      table.push_back({{"predicted", format_rational(term.exponent)}, {"fitted", term.exponent_fitted},
                       {"abs_delta", std::fabs(term.exponent_fitted - to_double(term.exponent))}, {"log_power", term.log_power}});
    j["exponent_table"] = table;
    return j;
  }));

  rec.stages.push_back(run_stage("estimates", cfg.run_estimates && op.has_value() && op->k > 0, [&] {
    const auto D = discretize_model(to_double(op->alpha), op->k, 1.0, {256, 8, cfg.grading});
    return nlohmann::json{{"basic_estimate", basic_estimate_check(D, 50, cfg.seed)}};
  }));
  return rec;
}

}  // namespace detail

/// Runs every enabled stage; failures are recorded per face and later stages
/// of that face are skipped.
inline AnalysisReport run_pipeline(const AnalysisConfig& cfg) {
  AnalysisReport rep;
  rep.config = cfg;
  std::string text = cfg.polynomial;
  try {
    cfg.validate();
    if (text.empty()) text = read_file(cfg.input);
  } catch (const IoError& e) {
    rep.diagram = {"input", true, false, e.what(), {}};
    rep.exit_code = kExitIo;
    return rep;
  } catch (const DomainError& e) {
    rep.diagram = {"config", true, false, e.what(), {}};
    rep.exit_code = kExitParse;
    return rep;
  }
  Polynomial f(1);
  try {
    f = read_polynomial(text, cfg.dim);
  } catch (const Error& e) {
    rep.diagram = {"parse", true, false, e.what(), {}};
    rep.exit_code = kExitParse;
    return rep;
  }
  rep.polynomial = f.to_string();
  rep.dim = f.dim();

  std::optional<NewtonDiagram> diagram;
  rep.diagram = detail::run_stage("diagram", true, [&] {
    if (is_smooth_germ(f)) throw DomainError("not a singular germ: the linear part is non-zero");
    diagram = newton_diagram(f);
    return nlohmann::json(*diagram);
  });
  if (!rep.diagram.ok) {
    rep.exit_code = kExitStage;
    return rep;
  }

  const std::size_t nf = diagram->faces.size();
  if (cfg.parallel && nf > 1) {
    std::vector<std::future<FaceRecord>> jobs;
    for (std::size_t i = 0; i < nf; ++i)
      jobs.push_back(std::async(std::launch::async, [&, i] {
        const Polynomial local = f;
        return detail::analyze_face(local, *diagram, i, cfg);
      }));
    for (auto& j : jobs) rep.faces.push_back(j.get());
  } else {
    for (std::size_t i = 0; i < nf; ++i) rep.faces.push_back(detail::analyze_face(f, *diagram, i, cfg));
  }
  for (const auto& face : rep.faces)
    for (const auto& s : face.stages)
      if (s.enabled && !s.ok) rep.exit_code = kExitStage;
  return rep;
}

enum class ReportFormat { json, csv };

inline void emit_report(const AnalysisReport& R, ReportFormat format, std::ostream& os) {
  if (format == ReportFormat::json) {
    os << nlohmann::json(R).dump(2) << "\n";
    return;
  }
  os << "predicted,fitted,abs_delta,log_power\n";
  char buf[160];
  for (const auto& face : R.faces) {
    const auto* s = face.stage("spectral");
    if (!s || !s->ok) continue;
    for (const auto& row : s->data.at("exponent_table")) {
      std::snprintf(buf, sizeof buf, "%s,%.12g,%.3g,%u\n", row.at("predicted").get<std::string>().c_str(),
                    row.at("fitted").get<double>(), row.at("abs_delta").get<double>(), row.at("log_power").get<unsigned>());
      os << buf;
    }
  }
}

inline void emit_report(const AnalysisReport& R, ReportFormat format, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  emit_report(R, format, out);
  if (!out) throw IoError("cannot write " + path);
}

}  // namespace ahis
