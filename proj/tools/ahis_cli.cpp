#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "ahis/ahis.hpp"

namespace {

struct Common {
  ahis::AnalysisConfig cfg;
  std::string t_window = "1e-4:1e-1:48";
  std::string out;
  std::string format = "json";
  std::string csv;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("input", c.cfg.input, "Polynomial file (JSON or text)")->required();
  app->add_option("--dim", c.cfg.dim, "Number of variables for text input (default: inferred)");
  app->add_option("--epsilon", c.cfg.epsilon, "Radius of the conic neighbourhood")->capture_default_str();
  app->add_option("--delta", c.cfg.delta, "Half-width of the angular domain")->capture_default_str();
  app->add_option("--q-max", c.cfg.q_max, "Series truncation order")->capture_default_str();
  app->add_option("--nr", c.cfg.n_r, "Radial grid intervals")->capture_default_str();
  app->add_option("--modes", c.cfg.modes, "Initial angular mode cutoff")->capture_default_str();
  app->add_option("--grading", c.cfg.grading, "Radial grid grading exponent")->capture_default_str();
  app->add_option("--t", c.t_window, "Time window t0:t1:count in units of epsilon^2")->capture_default_str();
  app->add_option("--seed", c.cfg.seed, "Random seed")->capture_default_str();
  app->add_option("--out", c.out, "Output file (default: stdout)");
}

void parse_window(Common& c) {
  double a = 0, b = 0;
  std::size_t n = 0;
  char tail = 0;
  if (std::sscanf(c.t_window.c_str(), "%lf:%lf:%zu%c", &a, &b, &n, &tail) != 3)
    throw ahis::DomainError("time window must look like t0:t1:count");
  c.cfg.t_min = a;
  c.cfg.t_max = b;
  c.cfg.t_count = n;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) throw ahis::IoError("cannot write " + path);
}

nlohmann::json stage_view(const ahis::AnalysisReport& R, const std::string& stage) {
  auto out = nlohmann::json::array();
  for (const auto& f : R.faces)
    if (const auto* s = f.stage(stage)) out.push_back({{"face", f.index}, {"weights", f.weights}, {"result", *s}});
  return out;
}

void write_heat_csv(const ahis::AnalysisReport& R, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ahis::IoError("cannot write " + path);
  out << "face,t,trace,trace_coarse\n";
  char buf[160];
  for (const auto& f : R.faces) {
    const auto* s = f.stage("spectral");
    if (!s || !s->ok) continue;
    const auto& h = s->data.at("heat_trace");
    for (std::size_t i = 0; i < h.at("t").size(); ++i) {
      std::snprintf(buf, sizeof buf, "%zu,%.12g,%.15g,%.15g\n", f.index, h["t"][i].get<double>(), h["values"][i].get<double>(),
                    h["values_coarse"][i].get<double>());
      out << buf;
    }
  }
}

void write_metric_grid(const Common& c, const std::string& path) {
  const auto f = ahis::read_polynomial(ahis::read_file(c.cfg.input), c.cfg.dim);
  const auto d = ahis::newton_diagram(f);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ahis::IoError("cannot write " + path);
  for (std::size_t i = 0; i < d.faces.size(); ++i) {
    ahis::LinkOptions lo;
    lo.delta = c.cfg.delta;
    lo.epsilon = c.cfg.epsilon;
    const auto charts = ahis::link_charts(d.faces[i], f, lo);
    ahis::ParametrizeOptions po;
    po.q_max = c.cfg.q_max;
    po.epsilon = c.cfg.epsilon;
    po.delta = c.cfg.delta;
    const auto P = ahis::newton_solve_series(f, d.faces[i], ahis::detail::preferred_chart(charts), po);
    out << "# face " << i + 1 << "\n";
    ahis::write_metric_csv(out, ahis::induced_metric(P));
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Singularity analysis of real analytic hypersurfaces: Newton diagram, parametrization, metric, heat trace"};
  app.require_subcommand(1);
  Common c;

  auto* analyze = app.add_subcommand("analyze", "Run the full pipeline and write a report");
  add_common(analyze, c);
  analyze->add_option("--format", c.format, "Report format")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();

  auto* diagram = app.add_subcommand("diagram", "Newton diagram and face weights");
  add_common(diagram, c);
  auto* parametrize = app.add_subcommand("parametrize", "Parametrization of each face");
  add_common(parametrize, c);
  auto* metric = app.add_subcommand("metric", "Induced metric and model operator of each face");
  add_common(metric, c);
  metric->add_option("--csv", c.csv, "Also write the metric on an (r, theta) grid");
  auto* heat = app.add_subcommand("heat", "Heat trace and its power-log fit");
  add_common(heat, c);
  heat->add_option("--csv", c.csv, "Also write the heat trace samples");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ahis::kExitOk : ahis::kExitParse;
  }

  try {
    parse_window(c);
    auto& cfg = c.cfg;
    if (app.got_subcommand(diagram)) cfg.run_parametrize = cfg.run_metric = cfg.run_spectral = cfg.run_estimates = false;
    if (app.got_subcommand(parametrize)) cfg.run_metric = cfg.run_spectral = cfg.run_estimates = false;
    if (app.got_subcommand(metric)) cfg.run_spectral = cfg.run_estimates = false;
    if (app.got_subcommand(heat)) cfg.run_estimates = false;

    const auto R = ahis::run_pipeline(cfg);
    if (app.got_subcommand(analyze)) {
      std::ostringstream os;
      ahis::emit_report(R, c.format == "csv" ? ahis::ReportFormat::csv : ahis::ReportFormat::json, os);
      write_text(c.out, os.str());
    } else {
      nlohmann::json view;
      if (app.got_subcommand(diagram)) view = R.diagram;
      if (app.got_subcommand(parametrize)) view = stage_view(R, "parametrize");
      if (app.got_subcommand(metric)) view = stage_view(R, "metric");
      if (app.got_subcommand(heat)) view = stage_view(R, "spectral");
      write_text(c.out, view.dump(2) + "\n");
      if (!c.csv.empty() && R.ok()) {
        if (app.got_subcommand(heat)) write_heat_csv(R, c.csv);
        if (app.got_subcommand(metric)) write_metric_grid(c, c.csv);
      }
    }
    if (!R.ok()) {
      const std::string err = !R.diagram.ok ? R.diagram.error : "a pipeline stage failed";
      std::cerr << "ahis: " << err << "\n";
    }
    return R.exit_code;
  } catch (const ahis::IoError& e) {
    std::cerr << "ahis: " << e.what() << "\n";
    return ahis::kExitIo;
  } catch (const ahis::ParseError& e) {
    std::cerr << "ahis: " << e.what() << "\n";
    return ahis::kExitParse;
  } catch (const ahis::DomainError& e) {
    std::cerr << "ahis: " << e.what() << "\n";
    return ahis::kExitParse;
  } catch (const std::exception& e) {
    std::cerr << "ahis: " << e.what() << "\n";
    return ahis::kExitStage;
  }
}
