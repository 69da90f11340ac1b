#include "eigenflow/cli.hpp"

#include "eigenflow/parallel.hpp"

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <stdexcept>

namespace eigenflow {

namespace {

constexpr int kSchemaVersion = 1;

Chart parse_chart(const std::string& name, ProcessKind kind) {
  if (name.empty()) return default_chart(kind);
  if (name == "lambda") return Chart::Lambda;
  if (name == "sigma") return Chart::Sigma;
  if (name == "gamma") return Chart::Gamma;
  throw std::invalid_argument("unknown chart: " + name);
}

Level parse_level(const std::string& name) {
  if (name == "matrix") return Level::Matrix;
  if (name == "spectral") return Level::Spectral;
  throw std::invalid_argument("unknown level: " + name);
}

Spectrum base_spectrum(const ExperimentConfig& config) {
  Spectrum s;
  s.values = Eigen::Map<const Eigen::VectorXd>(config.base.data(),
                                               static_cast<Eigen::Index>(config.base.size()));
  return s;
}

std::filesystem::path resolve_out_dir(const ExperimentConfig& config) {
  if (!config.out_dir.empty()) return config.out_dir;
  if (const char* env = std::getenv("EIGENFLOW_OUTDIR"); env && *env) return env;
  return ".";
}

using CsvRow = std::vector<std::string>;

void write_csv(const std::filesystem::path& path, const CsvRow& header,
               const std::vector<CsvRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::invalid_argument("cannot open output file: " + path.string());
  for (std::size_t i = 0; i < header.size(); ++i)
    out << header[i] << (i + 1 < header.size() ? "," : "");
  out << "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i)
      out << row[i] << (i + 1 < row.size() ? "," : "");
    out << "\n";
  }
  if (!out) throw std::invalid_argument("failed writing " + path.string());
}

void write_report(const std::filesystem::path& dir, const ExperimentConfig& config,
                  const nlohmann::json& results) {
  nlohmann::json j;
  j["schema_version"] = kSchemaVersion;
  j["command"] = config.command;
  j["config"] = config_to_json(config);
  j["results"] = results;
  std::ofstream out(dir / "report.json", std::ios::binary);
  if (!out) throw std::invalid_argument("cannot open report.json in " + dir.string());
  out << j.dump(2) << "\n";
}

std::vector<std::string> chart_columns(Chart chart, int n) {
  std::vector<std::string> cols;
  const std::string stem = chart_name(chart);
  for (int i = 1; i <= n; ++i) cols.push_back(stem + std::to_string(i));
  return cols;
}

std::vector<double> to_std(const Eigen::VectorXd& v) {
  return {v.data(), v.data() + v.size()};
}

// Built-in candidate drifts for adjudication; the first entry is the
// trusted convention.
std::vector<Candidate> builtin_candidates(ProcessKind kind, Chart chart, const Spectrum& base) {
  std::vector<Candidate> cands;
  const Eigen::VectorXd trusted = trusted_drift_in_chart(kind, chart, base).drift;
  switch (kind.family) {
    case Family::Dyson:
      cands.push_back({"intro", trusted});
      cands.push_back({"intro_double", 2.0 * trusted});
      cands.push_back({"zero_drift", Eigen::VectorXd::Zero(base.size())});
      break;
    case Family::Wishart:
      if (chart == Chart::Lambda) {
        cands.push_back({"intro_bru", trusted});
        // Section-2 half-factor sigma drift mapped to lambda.
        Spectrum sig;
        sig.kind = SpectrumKind::SingularValues;
        sig.values = base.values.cwiseSqrt();
        const Eigen::VectorXd half = spectral_drift(kind, DriftVariant::section2(), sig).drift;
        Eigen::VectorXd mapped = 2.0 * sig.values.cwiseProduct(half);
        mapped.array() += 1.0;
        cands.push_back({"section2_half", mapped});
      } else {
        cands.push_back({"bru_sigma", trusted});
        cands.push_back({"section2_half_sigma",
                         spectral_drift(kind, DriftVariant::section2(), base).drift});
      }
      break;
    case Family::Dynkin:
      if (chart == Chart::Lambda) {
        cands.push_back({"coth_ito", trusted});
        cands.push_back({"intro_display", spectral_drift(kind, DriftVariant::intro(), base).drift});
      } else if (chart == Chart::Gamma) {
        cands.push_back({"rw_coth", trusted});
        // Intro lambda display mapped to gamma: b_gamma = b_lambda/(2 lambda) - 1.
        Spectrum lam;
        lam.values = (2.0 * base.values).array().exp();
        const Eigen::VectorXd intro = spectral_drift(kind, DriftVariant::intro(), lam).drift;
        Eigen::VectorXd mapped = intro.cwiseQuotient(2.0 * lam.values);
        mapped.array() -= 1.0;
        cands.push_back({"intro_display_gamma", mapped});
      } else {
        cands.push_back({"rw_sigma", trusted});
        cands.push_back({"section2_sigma",
                         spectral_drift(kind, DriftVariant::section2(), base).drift});
      }
      break;
    case Family::FlagWarmup:
      throw std::invalid_argument("drift-check: use the mcf/flag experiments for the warm-up");
  }
  return cands;
}

int exit_code(bool pass) { return pass ? 0 : 1; }

int cmd_simulate(const ExperimentConfig& config, const std::filesystem::path& dir) {
  const ProcessKind kind = parse_process(config);
  ProcessSpec spec;
  spec.kind = kind;
  spec.level = parse_level(config.level);
  spec.variant = trusted_variant(kind);
  spec.n = config.n;
  spec.t_end = config.t_end;
  if (!config.base.empty()) spec.initial = base_spectrum(config).values;
  const StepControl ctrl{config.h, config.h_min, config.gap_threshold, config.max_halvings};

  std::vector<Trajectory> trajectories(config.paths);
  parallel_chunks(config.paths, 4, config.threads,
                  [&](std::int64_t, std::int64_t begin, std::int64_t end) {
                    for (std::int64_t p = begin; p < end; ++p)
                      trajectories[p] =
                          run_path(spec, ctrl, derive_stream(config.seed, static_cast<std::uint64_t>(p)));
                  });

  CsvRow header{"path", "time"};
  for (const auto& c : chart_columns(default_chart(kind), config.n)) header.push_back(c);
  std::vector<CsvRow> rows;
  std::int64_t collided = 0;
  for (std::int64_t p = 0; p < config.paths; ++p) {
    const Trajectory& traj = trajectories[p];
    if (traj.collided) ++collided;
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
      CsvRow row{std::to_string(p), format_double(traj.times[k])};
      for (int i = 0; i < traj.states[k].size(); ++i)
        row.push_back(format_double(traj.states[k][i]));
      rows.push_back(std::move(row));
    }
  }
  write_csv(dir / "trajectory.csv", header, rows);

  nlohmann::json results;
  results["csv"] = "trajectory.csv";
  results["paths"] = config.paths;
  results["collided_paths"] = collided;
  if (spec.level == Level::Spectral && spec.initial.size() == 0)
    results["notes"] = {"spectral run started from the documented epsilon perturbation"};
  write_report(dir, config, results);
  return 0;
}

int cmd_drift_check(const ExperimentConfig& config, const std::filesystem::path& dir) {
  const ProcessKind kind = parse_process(config);
  const Chart chart = parse_chart(config.chart, kind);
  if (config.base.empty()) throw std::invalid_argument("drift-check: --base is required");
  const Spectrum base = base_spectrum(config);

  const DriftEstimate est = estimate_drift(kind, parse_level(config.level), base, config.h,
                                           config.samples, config.seed, chart, config.threads);
  const std::vector<Candidate> cands = builtin_candidates(kind, chart, base);
  VerificationReport rep = adjudicate_drift(est, cands);
  rep.experiment = "drift_check";
  rep.seed = config.seed;

  const std::string trusted_label = cands.front().label;
  const double trusted_z = rep.candidates.front().max_abs_z;
  rep.checks.push_back({"trusted_within_3se", trusted_z <= 3.0, trusted_z, 3.0});
  const bool not_contradicted = rep.accepted == trusted_label || rep.accepted == "inconclusive";
  rep.checks.push_back({"adjudication_not_contradicting", not_contradicted,
                        not_contradicted ? 0.0 : 1.0, 0.0});
  if (kind.family == Family::Dyson && kind.beta == 4)
    rep.notes.push_back(
        "gse increments assume the gue per-component rule: variance h/2 per real part");

  CsvRow header{"component", "mean", "se"};
  for (const auto& c : cands) header.push_back("z_" + c.label);
  std::vector<CsvRow> rows;
  for (int i = 0; i < est.mean.size(); ++i) {
    CsvRow row{std::to_string(i + 1), format_double(est.mean[i]), format_double(est.se[i])};
    for (const auto& sc : rep.candidates) row.push_back(format_double(sc.z[i]));
    rows.push_back(std::move(row));
  }
  write_csv(dir / "drift.csv", header, rows);

  nlohmann::json results = rep.to_json();
  results["csv"] = "drift.csv";
  results["drift_mean"] = to_std(est.mean);
  results["drift_se"] = to_std(est.se);
  results["n_collided"] = est.n_collided;
  write_report(dir, config, results);
  return exit_code(rep.passed());
}

int cmd_dist_check(const ExperimentConfig& config, const std::filesystem::path& dir) {
  const ProcessKind kind = parse_process(config);
  const StepControl ctrl{config.h, config.h_min, config.gap_threshold, config.max_halvings};

  ProcessSpec spec_m;
  spec_m.kind = kind;
  spec_m.level = Level::Matrix;
  spec_m.n = config.n;
  spec_m.t_end = config.t_end;

  ProcessSpec spec_s = spec_m;
  spec_s.level = Level::Spectral;
  spec_s.variant = trusted_variant(kind);

  const Ensemble em = terminal_ensemble(spec_m, ctrl, config.paths, config.seed, config.threads);
  const Ensemble es = terminal_ensemble(spec_s, ctrl, config.paths, config.seed + 1, config.threads);

  VerificationReport rep;
  rep.experiment = "dist_check";
  rep.seed = config.seed;
  rep.h = config.h;
  rep.n_samples = config.paths;
  rep.notes.push_back("spectral level starts from the documented epsilon perturbation");
  rep.notes.push_back("collided paths excluded: matrix " + std::to_string(em.n_collided) +
                      ", spectral " + std::to_string(es.n_collided));

  CsvRow header{"marginal", "d", "p_bound", "critical_1pct", "n_matrix", "n_spectral"};
  std::vector<CsvRow> rows;
  for (int i = 0; i < config.n; ++i) {
    const auto [d, p] = ks_two_sample(em.spectra.col(i), es.spectra.col(i));
    const double nx = static_cast<double>(em.spectra.rows());
    const double ny = static_cast<double>(es.spectra.rows());
    const double crit = ks_critical(0.01, nx * ny / (nx + ny));
    rep.checks.push_back(
        {"ks_marginal_" + std::to_string(i + 1) + "_below_critical", d < crit, d, crit});
    rows.push_back({std::to_string(i + 1), format_double(d), format_double(p),
                    format_double(crit), std::to_string(em.spectra.rows()),
                    std::to_string(es.spectra.rows())});
  }
  write_csv(dir / "ks.csv", header, rows);

  nlohmann::json results = rep.to_json();
  results["csv"] = "ks.csv";
  write_report(dir, config, results);
  return exit_code(rep.passed());
}

int cmd_grad_check(const ExperimentConfig& config, const std::filesystem::path& dir) {
  const ProcessKind kind = parse_process(config);
  RngStream stream = derive_stream(config.seed, 0);

  VerificationReport rep;
  rep.experiment = "grad_check";
  rep.seed = config.seed;
  rep.n_samples = config.trials;

  CsvRow header{"trial", "n", "check", "value", "bound", "pass"};
  std::vector<CsvRow> rows;
  double worst = 0.0;
  bool all_pass = true;
  for (int t = 0; t < config.trials; ++t) {
    const int n = config.n_min +
                  static_cast<int>(stream.next_u64() %
                                   static_cast<std::uint64_t>(config.n_max - config.n_min + 1));
    const Spectrum s = random_test_spectrum(kind, n, stream);
    const VerificationReport sub = gradient_check(kind, s);
    for (const auto& check : sub.checks) {
      if (check.name == "fd_vs_analytic_rel") worst = std::max(worst, check.value);
      all_pass = all_pass && check.pass;
      rows.push_back({std::to_string(t), std::to_string(n), check.name,
                      format_double(check.value), format_double(check.bound),
                      check.pass ? "1" : "0"});
    }
  }
  rep.checks.push_back({"fd_vs_analytic_worst_rel", worst <= 1e-6 && all_pass, worst, 1e-6});
  write_csv(dir / "grad.csv", header, rows);

  nlohmann::json results = rep.to_json();
  results["csv"] = "grad.csv";
  write_report(dir, config, results);
  return exit_code(rep.passed());
}

int cmd_mcf_check(const ExperimentConfig& config, const std::filesystem::path& dir) {
  const ProcessKind kind = parse_process(config);
  Spectrum start;
  if (config.base.empty()) {
    start.values = Eigen::Vector2d(1.0, -1.0);
  } else {
    start = base_spectrum(config);
  }
  McfOptions opts{config.h, config.paths, config.seed, config.threads};
  McfResult res = mcf_check(kind, start, config.t_end, opts);

  const int n = start.size();
  CsvRow header{"time"};
  for (int i = 1; i <= n; ++i) header.push_back("mc" + std::to_string(i));
  for (int i = 1; i <= n; ++i) header.push_back("ode" + std::to_string(i));
  std::vector<CsvRow> rows;
  for (Eigen::Index k = 0; k < res.times.size(); ++k) {
    CsvRow row{format_double(res.times[k])};
    for (int i = 0; i < n; ++i) row.push_back(format_double(res.mc_mean(k, i)));
    for (int i = 0; i < n; ++i) row.push_back(format_double(res.ode(k, i)));
    rows.push_back(std::move(row));
  }
  write_csv(dir / "mcf.csv", header, rows);

  nlohmann::json results = res.report.to_json();
  results["csv"] = "mcf.csv";
  write_report(dir, config, results);
  return exit_code(res.report.passed());
}

int cmd_scaled_metric(const ExperimentConfig& config, const std::filesystem::path& dir) {
  const ProcessKind kind = parse_process(config);
  Spectrum base;
  if (config.base.empty()) {
    base.values = Eigen::Vector3d(4.0, 2.0, 1.0);
  } else {
    base = base_spectrum(config);
  }
  ScaledMetricOptions opts{config.h, config.samples, config.seed, config.threads};
  ScaledMetricResult res = scaled_metric_check(kind, base, config.r, opts);

  CsvRow header{"component", "drift_scaled", "drift_scaled_se", "qv_scaled", "qv_scaled_se",
                "drift_unit", "drift_unit_se", "qv_unit", "qv_unit_se"};
  std::vector<CsvRow> rows;
  for (int i = 0; i < base.size(); ++i)
    rows.push_back({std::to_string(i + 1), format_double(res.drift_scaled[i]),
                    format_double(res.drift_scaled_se[i]), format_double(res.qv_scaled[i]),
                    format_double(res.qv_scaled_se[i]), format_double(res.drift_unit[i]),
                    format_double(res.drift_unit_se[i]), format_double(res.qv_unit[i]),
                    format_double(res.qv_unit_se[i])});
  write_csv(dir / "scaled.csv", header, rows);

  nlohmann::json results = res.report.to_json();
  results["csv"] = "scaled.csv";
  write_report(dir, config, results);
  return exit_code(res.report.passed());
}

}  // namespace

ProcessKind parse_process(const ExperimentConfig& config) {
  if (config.process == "dyson") return ProcessKind::dyson(config.beta);
  if (config.process == "wishart") return ProcessKind::wishart();
  if (config.process == "dynkin") return ProcessKind::dynkin();
  if (config.process == "flag") return ProcessKind::flag_warmup();
  throw std::invalid_argument("unknown process: " + config.process);
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

nlohmann::json config_to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["command"] = c.command;
  j["process"] = c.process;
  j["level"] = c.level;
  j["chart"] = c.chart;
  j["n"] = c.n;
  j["beta"] = c.beta;
  j["t_end"] = c.t_end;
  j["h"] = c.h;
  j["h_min"] = c.h_min;
  j["gap_threshold"] = c.gap_threshold;
  j["max_halvings"] = c.max_halvings;
  j["paths"] = c.paths;
  j["samples"] = c.samples;
  j["seed"] = c.seed;
  j["base"] = c.base;
  j["r"] = c.r;
  j["n_min"] = c.n_min;
  j["n_max"] = c.n_max;
  j["trials"] = c.trials;
  return j;
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  c.command = j.at("command").get<std::string>();
  c.process = j.at("process").get<std::string>();
  c.level = j.at("level").get<std::string>();
  c.chart = j.at("chart").get<std::string>();
  c.n = j.at("n").get<int>();
  c.beta = j.at("beta").get<int>();
  c.t_end = j.at("t_end").get<double>();
  c.h = j.at("h").get<double>();
  c.h_min = j.at("h_min").get<double>();
  c.gap_threshold = j.at("gap_threshold").get<double>();
  c.max_halvings = j.at("max_halvings").get<int>();
  c.paths = j.at("paths").get<std::int64_t>();
  c.samples = j.at("samples").get<std::int64_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.base = j.at("base").get<std::vector<double>>();
  c.r = j.at("r").get<double>();
  c.n_min = j.at("n_min").get<int>();
  c.n_max = j.at("n_max").get<int>();
  c.trials = j.at("trials").get<int>();
  return c;
}

int run_experiment(const ExperimentConfig& config) {
  try {
    const std::filesystem::path dir = resolve_out_dir(config);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) {
      std::cerr << "error: cannot create output directory " << dir << "\n";
      return 2;
    }

    if (config.command == "simulate") return cmd_simulate(config, dir);
    if (config.command == "drift-check") return cmd_drift_check(config, dir);
    if (config.command == "dist-check") return cmd_dist_check(config, dir);
    if (config.command == "grad-check") return cmd_grad_check(config, dir);
    if (config.command == "mcf-check") return cmd_mcf_check(config, dir);
    if (config.command == "scaled-metric") return cmd_scaled_metric(config, dir);
    std::cerr << "error: unknown command '" << config.command << "'\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace eigenflow
