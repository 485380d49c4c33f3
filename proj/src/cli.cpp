#include "cgue/cli.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <set>

#include "cgue/errors.hpp"
#include "cgue/matrix_io.hpp"
#include "cgue/random.hpp"

namespace cgue {

namespace fs = std::filesystem;

namespace {

void require_keys(const json& j, const std::string& where, const std::set<std::string>& allowed) {
  if (!j.is_object()) throw InvalidArgument(where + ": expected an object");
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key)) throw InvalidArgument(where + ": unknown key '" + key + "'");
}

template <typename T>
T get(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("config key '") + key + "': " + e.what());
  }
}

std::vector<Eigen::VectorXd> spectra_from_rows(const std::vector<SpectrumRow>& rows) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    if (r.eigenvalues.size() != rows.front().eigenvalues.size())
      throw InvalidArgument("spectra rows have different lengths");
    out.push_back(r.eigenvalues);
  }
  return out;
}

Eigen::VectorXd vector_from_json(const json& j, const char* what) {
  if (!j.is_array()) throw InvalidArgument(std::string(what) + ": expected an array of numbers");
  Eigen::VectorXd v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw InvalidArgument(std::string(what) + ": expected numbers");
    v[static_cast<Index>(i)] = j[i].get<double>();
  }
  return v;
}

// Writes the report files into dir and returns their names.
std::vector<std::string> write_report(const fs::path& dir, const FluctuationReport& r, const json& record, bool svg) {
  std::vector<std::string> files{"report.json", "sigma2.csv", "delta3.csv", "nnsd.csv", "ratios.csv"};
  write_json(dir / "report.json", record);
  write_curve_csv(dir / "sigma2.csv", r.sigma2);
  write_curve_csv(dir / "delta3.csv", r.delta3);
  write_histogram_csv(dir / "nnsd.csv", r.nnsd.histogram);
  write_histogram_csv(dir / "ratios.csv", r.ratios.histogram);
  if (svg) {
    write_text(dir / "nnsd.svg", nnsd_svg(r.nnsd));
    write_text(dir / "sigma2.svg", sigma2_svg(r.sigma2));
    files.push_back("nnsd.svg");
    files.push_back("sigma2.svg");
  }
  return files;
}

CommandResult stats_on(const ExperimentConfig& c, const std::vector<Eigen::VectorXd>& spectra, const fs::path& dir) {
  const double lambda = get(c.stats, "lambda", get(c.ensemble, "lambda", 1.0));
  const auto options = report_options_from_config(c.stats, static_cast<Index>(spectra.size()), lambda);
  const auto report = fluctuation_report(spectra, options);
  const Index ref_samples = get<Index>(c.stats, "reference_samples", 200);
  const auto reference = gue_reference_report(spectra.front().size(), lambda, ref_samples,
                                              stream_key(c.seed, 0, 0x7265666572656e63ULL), c.threads, options);
  const auto comparison = compare(report, reference);
  json record;
  record["report"] = to_json(report);
  record["gue_reference"] = {{"samples", ref_samples},
                             {"ratio_mean", reference.ratios.mean},
                             {"ratio_error", reference.ratios.error}};
  record["comparison"] = to_json(comparison);
  record["classification"] = classify(report, reference.ratios.mean);
  record["poisson_ratio_mean"] = poisson_ratio_mean();
  CommandResult res;
  res.dir = dir;
  res.files = write_report(dir, report, record, c.svg);
  res.summary = {{"classification", record["classification"]},
                 {"ratio_mean", report.ratios.mean},
                 {"ratio_error", report.ratios.error},
                 {"gue_consistent", comparison.consistent}};
  if (report.nnsd.distances_reported) res.summary["ks_gue"] = report.nnsd.ks_gue;
  return res;
}

}  // namespace

ExperimentConfig config_from_json(const json& j) {
  require_keys(j, "config",
               {"command", "seed", "samples", "threads", "out", "svg", "ensemble", "constraints", "stats", "critical",
                "density", "fp"});
  ExperimentConfig c;
  c.command = get<std::string>(j, "command", "");
  c.seed = get<std::uint64_t>(j, "seed", 0);
  c.samples = get<Index>(j, "samples", 100);
  c.threads = get(j, "threads", 1);
  c.out = get<std::string>(j, "out", "");
  c.svg = get(j, "svg", false);
  auto section = [&](const char* key, json& dst, const std::set<std::string>& allowed) {
    if (!j.contains(key)) return;
    dst = j.at(key);
    require_keys(dst, key, allowed);
  };
  section("ensemble", c.ensemble, {"kind", "dim", "lambda", "l", "m", "k", "epsilon", "bandwidth", "regularized"});
  section("constraints", c.constraints, {"generator", "n_q", "seed", "bandwidth", "file", "diagonals"});
  section("stats", c.stats,
          {"input", "unfold", "degree", "edge_fraction", "L_max", "max_window_fraction", "nnsd_bins", "ratio_bins",
           "reference_samples", "lambda"});
  section("critical", c.critical, {"directions", "magnitudes", "cluster_tol"});
  section("density", c.density,
          {"n_max", "tol", "max_iters", "mixing", "grid_points", "moment_samples", "overlay"});
  section("fp", c.fp, {"route", "x", "sigma", "mc_samples", "extrapolate", "sigmas", "regularize", "chunk"});
  if (c.samples < 1) throw InvalidArgument("config: samples must be positive");
  if (c.threads < 1) throw InvalidArgument("config: threads must be positive");
  return c;
}

json to_json(const ExperimentConfig& c) {
  json j;
  j["command"] = c.command;
  j["seed"] = c.seed;
  j["samples"] = c.samples;
  j["threads"] = c.threads;
  j["out"] = c.out;
  j["svg"] = c.svg;
  j["ensemble"] = c.ensemble;
  j["constraints"] = c.constraints;
  j["stats"] = c.stats;
  j["critical"] = c.critical;
  j["density"] = c.density;
  j["fp"] = c.fp;
  return j;
}

void apply_overrides(ExperimentConfig& c, const CliOverrides& o) {
  if (o.seed) c.seed = *o.seed;
  if (o.samples) {
    if (*o.samples < 1) throw InvalidArgument("--samples must be positive");
    c.samples = *o.samples;
  }
  if (o.out) c.out = *o.out;
  if (o.threads) {
    if (*o.threads < 1) throw InvalidArgument("--threads must be positive");
    c.threads = *o.threads;
  }
  if (o.svg) c.svg = true;
}

ConstraintSet constraints_from_config(const json& s, Index n, std::uint64_t default_seed) {
  const auto name = get<std::string>(s, "generator", "none");
  const auto gen = constraint_generator_from_string(name);
  const auto seed = get<std::uint64_t>(s, "seed", default_seed);
  const auto n_q = get<Index>(s, "n_q", 0);
  switch (gen) {
    case ConstraintGenerator::none: return ConstraintSet::none(n);
    case ConstraintGenerator::random_traceless: return random_traceless_constraints(n, n_q, seed);
    case ConstraintGenerator::random: return random_constraints(n, n_q, seed);
    case ConstraintGenerator::diagonal_p: return diagonal_p_constraints(n);
    case ConstraintGenerator::band_complement: return band_complement_constraints(n, get<Index>(s, "bandwidth", 1));
    case ConstraintGenerator::explicit_set: {
      std::vector<HermitianMatrix> ms;
      if (s.contains("file")) {
        ms = read_matrices(get<std::string>(s, "file", ""));
      } else if (s.contains("diagonals")) {
        for (const auto& d : s.at("diagonals")) {
          Eigen::VectorXd v = vector_from_json(d, "constraints.diagonals");
          if (v.size() != n) throw InvalidArgument("constraints.diagonals: length differs from N");
          if (v.norm() == 0.0) throw InvalidArgument("constraints.diagonals: zero vector");
          ms.push_back(HermitianMatrix::diagonal(v / v.norm()));
        }
      } else {
        throw InvalidArgument("explicit constraints need 'file' or 'diagonals'");
      }
      return ConstraintSet::from_matrices(n, ms);
    }
    case ConstraintGenerator::reduced:
      return traceless_reduce(constraints_from_config(json{{"generator", "random"}, {"n_q", n_q}, {"seed", seed}}, n,
                                                      default_seed))
          .reduced;
  }
  return ConstraintSet::none(n);
}

EnsembleSpec ensemble_from_config(const ExperimentConfig& c) {
  EnsembleSpec spec;
  const auto& e = c.ensemble;
  spec.kind = ensemble_kind_from_string(get<std::string>(e, "kind", "gue"));
  spec.dim = get<Index>(e, "dim", 0);
  spec.l = get(e, "l", 0);
  spec.m = get(e, "m", 0);
  spec.k = get(e, "k", 0);
  spec.lambda = get(e, "lambda", 1.0);
  spec.epsilon = get(e, "epsilon", 0.0);
  spec.bandwidth = get<Index>(e, "bandwidth", 0);
  spec.regularized = get(e, "regularized", false);
  spec.seed = c.seed;
  if (spec.kind == EnsembleKind::constrained || spec.kind == EnsembleKind::deformed) {
    if (spec.dim < 1) throw InvalidArgument("ensemble.dim must be positive");
    spec.constraints = constraints_from_config(c.constraints, spec.dim, c.seed);
  }
  spec.validate();
  return spec;
}

fs::path output_dir(const ExperimentConfig& c) {
  if (!c.out.empty()) return c.out;
  return default_output_root() / (c.command.empty() ? "run" : c.command);
}

ReportOptions report_options_from_config(const json& s, Index samples, double lambda) {
  ReportOptions o;
  const auto method = get<std::string>(s, "unfold", "auto");
  if (method == "auto") {
    o.auto_unfold = true;
    o.unfold = default_unfold_options(static_cast<std::size_t>(samples));
  } else {
    o.auto_unfold = false;
    o.unfold.method = unfold_method_from_string(method);
  }
  o.unfold.degree = get(s, "degree", o.unfold.degree);
  o.unfold.edge_fraction = get(s, "edge_fraction", o.unfold.edge_fraction);
  o.unfold.lambda = lambda;
  o.nnsd_bins = get(s, "nnsd_bins", o.nnsd_bins);
  o.ratio_bins = get(s, "ratio_bins", o.ratio_bins);
  const int L_max = get(s, "L_max", 10);
  if (L_max < 1) throw InvalidArgument("stats.L_max must be >= 1");
  o.L_grid.clear();
  for (int L = 1; L <= L_max; ++L) o.L_grid.push_back(L);
  o.windows.max_window_fraction = get(s, "max_window_fraction", o.windows.max_window_fraction);
  return o;
}

FluctuationReport gue_reference_report(Index n, double lambda, Index samples, std::uint64_t seed, int threads,
                                       const ReportOptions& options) {
  EnsembleSpec spec;
  spec.kind = EnsembleKind::gue;
  spec.dim = n;
  spec.lambda = lambda;
  spec.seed = seed;
  const auto draws = sample_ensemble(spec, samples, threads);
  return fluctuation_report(eigenvalue_vectors(draws), options);
}

CommandResult cmd_sample(const ExperimentConfig& c) {
  const auto spec = ensemble_from_config(c);
  const auto samples = sample_ensemble(spec, c.samples, c.threads);
  CommandResult res;
  res.dir = output_dir(c);
  write_spectra_csv(res.dir / "spectra.csv", samples);
  json record = to_json(spec);
  record["samples"] = c.samples;
  write_json(res.dir / "ensemble.json", record);
  res.files = {"spectra.csv", "ensemble.json"};
  if ((spec.kind == EnsembleKind::constrained || spec.kind == EnsembleKind::deformed) &&
      spec.constraints.generator() == ConstraintGenerator::explicit_set) {
    write_matrices(res.dir / "constraints.mat", spec.constraints.constraints());
    res.files.push_back("constraints.mat");
  }
  res.summary = {{"kind", to_string(spec.kind)}, {"dim", spec.hilbert_dim()}, {"samples", c.samples}};
  return res;
}

CommandResult cmd_stats(const ExperimentConfig& c) {
  const auto input = get<std::string>(c.stats, "input", "");
  if (input.empty()) throw InvalidArgument("stats.input (spectra CSV) is required");
  const auto spectra = spectra_from_rows(read_spectra_csv(input));
  if (spectra.front().size() < 4) throw InvalidArgument("spectra too short for fluctuation statistics");
  return stats_on(c, spectra, output_dir(c));
}

CommandResult cmd_report(const ExperimentConfig& c) {
  auto res = cmd_sample(c);
  const auto spectra = spectra_from_rows(read_spectra_csv(res.dir / "spectra.csv"));
  auto stats = stats_on(c, spectra, res.dir);
  res.files.insert(res.files.end(), stats.files.begin(), stats.files.end());
  res.summary.update(stats.summary);
  return res;
}

CommandResult cmd_critical(const ExperimentConfig& c) {
  const Index n = get<Index>(c.ensemble, "dim", 0);
  if (n < 1) throw InvalidArgument("ensemble.dim must be positive");
  const auto cs = constraints_from_config(c.constraints, n, c.seed);
  DegeneracyOptions o;
  o.n_directions = get<Index>(c.critical, "directions", o.n_directions);
  o.magnitudes = get(c.critical, "magnitudes", o.magnitudes);
  o.cluster_tol = get(c.critical, "cluster_tol", o.cluster_tol);
  o.seed = c.seed;
  o.threads = c.threads;
  const auto profile = degeneracy_profile(cs, o);
  CommandResult res;
  res.dir = output_dir(c);
  json record = to_json(profile);
  record["constraints"] = to_json(cs);
  record["below_critical"] = cs.n_q() < profile.nq_crit;
  write_json(res.dir / "critical.json", record);
  res.files = {"critical.json"};
  res.summary = {{"nq_crit", profile.nq_crit}, {"n_q", cs.n_q()}, {"below_critical", cs.n_q() < profile.nq_crit}};
  return res;
}

CommandResult cmd_density(const ExperimentConfig& c) {
  const Index n = get<Index>(c.ensemble, "dim", 0);
  if (n < 2) throw InvalidArgument("ensemble.dim must be >= 2");
  const auto cs = constraints_from_config(c.constraints, n, c.seed);
  IterateOptions o;
  o.n_max = get(c.density, "n_max", o.n_max);
  o.tol = get(c.density, "tol", o.tol);
  o.max_iters = get(c.density, "max_iters", o.max_iters);
  o.mixing = get(c.density, "mixing", o.mixing);
  o.grid.points = get<Index>(c.density, "grid_points", o.grid.points);
  AngularMomentTable table;
  if (cs.n_q() > 0) {
    const Index mc = get<Index>(c.density, "moment_samples", 2000);
    table = angular_moments(cs, 2 * o.n_max, mc, c.seed, c.threads);
  }
  const auto model = iterate_density(table, n, cs.n_q(), o);
  CommandResult res;
  res.dir = output_dir(c);
  write_density_csv(res.dir / "density.csv", model);
  json record = to_json(model);
  record["dim"] = n;
  record["constraints"] = to_json(cs);
  record["l1_to_semicircle"] = l1_distance(model, semicircle(o.grid));
  if (cs.n_q() > 0) {
    record["angular_moments"] = table.moments;
    record["angular_moment_errors"] = table.errors;
  }
  if (c.density.contains("overlay")) {
    const auto spectra = spectra_from_rows(read_spectra_csv(get<std::string>(c.density, "overlay", "")));
    record["overlay"] = {{"samples", spectra.size()},
                         {"l1_to_empirical", l1_to_empirical(model, spectra, get(c.ensemble, "lambda", 1.0))}};
  }
  write_json(res.dir / "density.json", record);
  res.files = {"density.csv", "density.json"};
  res.summary = {{"iterations", model.iterations},
                 {"support", model.a},
                 {"residual", model.residual},
                 {"l1_to_semicircle", record["l1_to_semicircle"]}};
  if (record.contains("overlay")) res.summary["l1_to_empirical"] = record["overlay"]["l1_to_empirical"];
  if (!model.field.warning.empty()) res.summary["warning"] = model.field.warning;
  return res;
}

CommandResult cmd_fp(const ExperimentConfig& c) {
  const Index n = get<Index>(c.ensemble, "dim", 0);
  if (n < 2) throw InvalidArgument("ensemble.dim must be >= 2");
  const auto cs = constraints_from_config(c.constraints, n, c.seed);
  const double lambda = get(c.ensemble, "lambda", 1.0);
  std::vector<Eigen::VectorXd> xs;
  if (!c.fp.contains("x")) throw InvalidArgument("fp.x is required");
  const json& jx = c.fp.at("x");
  if (jx.is_array() && !jx.empty() && jx.front().is_array())
    for (const auto& row : jx) xs.push_back(vector_from_json(row, "fp.x"));
  else
    xs.push_back(vector_from_json(jx, "fp.x"));
  const auto route = get<std::string>(c.fp, "route", "determinant");
  const bool regularize = get(c.fp, "regularize", false);
  json records = json::array();
  for (const auto& x : xs) {
    if (x.size() != n) throw InvalidArgument("fp.x: length differs from ensemble.dim");
    FPValue v;
    json params = {{"lambda", lambda}};
    if (route == "determinant") {
      DeterminantOptions o;
      o.lambda = lambda;
      v = fp_determinant(x, cs, o);
    } else if (route == "haar-mc") {
      HaarMcOptions o;
      o.lambda = lambda;
      o.sigma = get(c.fp, "sigma", o.sigma);
      o.samples = get<Index>(c.fp, "mc_samples", o.samples);
      o.chunk = get<Index>(c.fp, "chunk", o.chunk);
      o.seed = c.seed;
      o.threads = c.threads;
      params["samples"] = o.samples;
      if (get(c.fp, "extrapolate", false)) {
        const auto sigmas = get(c.fp, "sigmas", std::vector<double>{0.2, 0.1, 0.05});
        v = fp_haar_mc_extrapolated(x, cs, o, sigmas);
        params["sigmas"] = sigmas;
      } else {
        v = fp_haar_mc(x, cs, o);
        params["sigma"] = o.sigma;
      }
    } else {
      throw InvalidArgument("fp.route must be 'determinant' or 'haar-mc'");
    }
    if (regularize) v = tilde_regularize(v, x, cs.n_q(), lambda);
    json rec = to_json(v);
    rec["x"] = json::array();
    for (Index i = 0; i < x.size(); ++i) rec["x"].push_back(x[i]);
    rec["parameters"] = params;
    records.push_back(rec);
  }
  CommandResult res;
  res.dir = output_dir(c);
  write_json(res.dir / "fp.json", {{"constraints", to_json(cs)}, {"records", records}});
  res.files = {"fp.json"};
  json values = json::array();
  for (const auto& r : records) values.push_back(r["value"]);
  res.summary = {{"route", route}, {"values", values}};
  return res;
}

int run_command(const ExperimentConfig& c, std::ostream& out, std::ostream& err) {
  const auto started = utc_timestamp();
  try {
    CommandResult res;
    if (c.command == "sample")
      res = cmd_sample(c);
    else if (c.command == "stats")
      res = cmd_stats(c);
    else if (c.command == "critical")
      res = cmd_critical(c);
    else if (c.command == "density")
      res = cmd_density(c);
    else if (c.command == "fp")
      res = cmd_fp(c);
    else if (c.command == "report")
      res = cmd_report(c);
    else
      throw InvalidArgument("unknown command '" + c.command + "'");
    const auto manifest = make_manifest(to_json(c), res.dir, res.files, started);
    write_json(res.dir / "manifest.json", to_json(manifest));
    out << res.summary.dump() << '\n';
    return kExitOk;
  } catch (const InvalidArgument& e) {
    err << "invalid input: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const json::exception& e) {
    err << "invalid input: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const fs::filesystem_error& e) {
    err << "invalid input: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const CapacityError& e) {
    err << "capacity guard: " << e.what() << '\n';
    return kExitCapacity;
  } catch (const DivergenceError& e) {
    err << "no convergence: " << e.what() << '\n' << "trace: " << e.trace() << '\n';
    return kExitNumeric;
  } catch (const AmbiguityError& e) {
    err << "ambiguous degeneracy: " << e.what() << " (" << e.first_pattern() << " vs " << e.second_pattern() << ")\n";
    return kExitNumeric;
  } catch (const NumericFailure& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumeric;
  }
}

}  // namespace cgue
