#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include <unistd.h>

#include "cgue/cli.hpp"
#include "cgue/errors.hpp"
#include "cgue/matrix_io.hpp"

using namespace cgue;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("cgue-test-" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

ExperimentConfig config(const json& j) { return config_from_json(j); }

// Runs the executable; returns its exit status.
int cli(const std::string& args) {
  const std::string cmd = std::string(CGUE_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

int cli_with(const json& cfg, const std::string& command, const fs::path& dir, const std::string& extra = "") {
  const auto path = dir / "config.json";
  write_json(path, cfg);
  return cli(command + " --config " + path.string() + " --out " + (dir / "out").string() + " " + extra);
}

int run_quiet(const ExperimentConfig& c) {
  std::ostringstream out, err;
  return run_command(c, out, err);
}

}  // namespace

TEST_CASE("sample determinism") {
  const auto dir = scratch("determinism");
  const json base = {{"command", "sample"}, {"seed", 1}, {"samples", 10}, {"ensemble", {{"kind", "gue"}, {"dim", 50}}}};
  std::vector<std::string> hashes;
  for (int threads : {1, 1, 3}) {
    auto c = config(base);
    c.threads = threads;
    c.out = (dir / std::to_string(hashes.size())).string();
    REQUIRE(run_quiet(c) == kExitOk);
    hashes.push_back(sha256_file(fs::path(c.out) / "spectra.csv"));
    const auto manifest = read_json(fs::path(c.out) / "manifest.json");
    CHECK(manifest["files"][0]["sha256"] == hashes.back());
    CHECK(manifest["code_version"] == CGUE_VERSION);
    CHECK(manifest["config"]["seed"] == 1);
  }
  CHECK(hashes[0] == hashes[1]);
  CHECK(hashes[0] == hashes[2]);
  CHECK(hashes[0].size() == 64);
}

TEST_CASE("executable exit codes") {
  const auto dir = scratch("exit");
  CHECK(cli("--version") == 0);
  CHECK(cli("nonsense") == kExitInvalid);
  CHECK(cli("sample --samples notanumber") == kExitInvalid);

  const json full = {{"ensemble", {{"kind", "constrained"}, {"dim", 4}}},
                     {"constraints", {{"generator", "random"}, {"n_q", 16}}}};
  CHECK(cli_with(full, "sample", dir) == kExitInvalid);

  const json unknown = {{"ensemble", {{"kind", "gue"}, {"dim", 4}, {"colour", "red"}}}};
  CHECK(cli_with(unknown, "sample", dir) == kExitInvalid);

  const json egue_big = {{"ensemble", {{"kind", "egue"}, {"l", 16}, {"m", 8}, {"k", 2}}}};
  CHECK(cli_with(egue_big, "sample", dir, "--samples 1") == kExitCapacity);

  const json fp_big = {{"ensemble", {{"dim", 7}}},
                       {"constraints", {{"generator", "random-traceless"}, {"n_q", 1}}},
                       {"fp", {{"x", {0, 1, 2, 3, 4, 5, 6}}}}};
  CHECK(cli_with(fp_big, "fp", dir) == kExitCapacity);

  const json even = {{"ensemble", {{"dim", 16}}},
                     {"constraints", {{"generator", "random-traceless"}, {"n_q", 20}}},
                     {"density", {{"n_max", 2}, {"moment_samples", 50}}}};
  CHECK(cli_with(even, "density", dir) == kExitNumeric);

  std::ofstream(dir / "empty.csv").close();
  const json empty = {{"stats", {{"input", (dir / "empty.csv").string()}}}};
  CHECK(cli_with(empty, "stats", dir) == kExitInvalid);
  const json missing = {{"stats", {{"input", (dir / "absent.csv").string()}}}};
  CHECK(cli_with(missing, "stats", dir) == kExitInvalid);
}

TEST_CASE("EGUE rows") {
  const auto dir = scratch("egue");
  auto c = config({{"command", "sample"},
                   {"samples", 2},
                   {"out", dir.string()},
                   {"ensemble", {{"kind", "egue"}, {"l", 12}, {"m", 4}, {"k", 2}}}});
  REQUIRE(run_quiet(c) == kExitOk);
  const auto rows = read_spectra_csv(dir / "spectra.csv");
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].eigenvalues.size() == 495);
  CHECK(rows[1].sample_index == 1);
}

TEST_CASE("stats classification") {
  const auto dir = scratch("stats");
  auto s = config({{"command", "sample"},
                   {"seed", 3},
                   {"samples", 150},
                   {"out", (dir / "gue").string()},
                   {"ensemble", {{"kind", "gue"}, {"dim", 80}}}});
  REQUIRE(run_quiet(s) == kExitOk);
  const json stats = {{"reference_samples", 300}, {"L_max", 5}};
  auto g = config({{"command", "stats"}, {"out", (dir / "gue-stats").string()}, {"svg", true}, {"stats", stats}});
  g.stats["input"] = (dir / "gue" / "spectra.csv").string();
  auto res = cmd_stats(g);
  CHECK(res.summary["classification"] == "GUE-consistent");
  CHECK(fs::exists(dir / "gue-stats" / "nnsd.svg"));
  CHECK(fs::exists(dir / "gue-stats" / "report.json"));

  // synthetic Poisson levels
  std::mt19937_64 rng(8);
  std::exponential_distribution<double> e;
  std::vector<SpectrumSample> rows;
  for (int i = 0; i < 150; ++i) {
    SpectrumSample x;
    x.sample_index = i;
    x.eigenvalues.resize(200);
    double v = 0.0;
    for (auto& l : x.eigenvalues) l = (v += e(rng));
    rows.push_back(x);
  }
  write_spectra_csv(dir / "poisson.csv", rows);
  auto p = config({{"command", "stats"}, {"out", (dir / "poisson-stats").string()}, {"stats", stats}});
  p.stats["input"] = (dir / "poisson.csv").string();
  CHECK(cmd_stats(p).summary["classification"] == "Poisson-consistent");
}

TEST_CASE("critical") {
  const auto dir = scratch("critical");
  auto c = config({{"command", "critical"},
                   {"out", dir.string()},
                   {"ensemble", {{"dim", 10}}},
                   {"constraints", {{"generator", "random-traceless"}, {"n_q", 6}}},
                   {"critical", {{"directions", 3}}}});
  CHECK(cmd_critical(c).summary["nq_crit"] == 45);

  c.ensemble["dim"] = 8;
  c.constraints = {{"generator", "explicit"}, {"diagonals", {{1, 1, 1, 1, -1, -1, -1, -1}}}};
  const auto r = cmd_critical(c);
  CHECK(r.summary["nq_crit"] == 16);
  const auto record = read_json(dir / "critical.json");
  CHECK(record["multiplicities"] == json({4, 4}));

  // the same constraint through a matrix file
  Eigen::VectorXd d(8);
  d << 1, 1, 1, 1, -1, -1, -1, -1;
  write_matrices(dir / "b.mat", {HermitianMatrix::diagonal(d / std::sqrt(8.0))});
  c.constraints = {{"generator", "explicit"}, {"file", (dir / "b.mat").string()}};
  CHECK(cmd_critical(c).summary["nq_crit"] == 16);

  c.ensemble["dim"] = 495;
  c.constraints = {{"generator", "random-traceless"}, {"n_q", 2}};
  c.critical = {{"directions", 1}, {"magnitudes", {1e3, 1e4}}};
  CHECK(cmd_critical(c).summary["nq_crit"] == 122265);
}

TEST_CASE("density command") {
  const auto dir = scratch("density");
  auto c = config({{"command", "density"}, {"out", dir.string()}, {"ensemble", {{"dim", 32}}}});
  REQUIRE(run_quiet(c) == kExitOk);
  const auto [eps, rho] = read_density_csv(dir / "density.csv");
  REQUIRE(eps.size() == 2001);
  for (Index i = 0; i < eps.size(); i += 50)
    CHECK(std::abs(rho[i] - std::sqrt(std::max(0.0, 4 - eps[i] * eps[i])) / (2 * std::numbers::pi)) < 1e-12);
  CHECK(read_json(dir / "density.json")["l1_to_semicircle"].get<double>() < 1e-8);

  // overlay against sampled GUE spectra
  auto s = config({{"command", "sample"},
                   {"samples", 50},
                   {"out", (dir / "spectra").string()},
                   {"ensemble", {{"kind", "gue"}, {"dim", 100}}}});
  REQUIRE(run_quiet(s) == kExitOk);
  c.density["overlay"] = (dir / "spectra" / "spectra.csv").string();
  const auto r = cmd_density(c);
  CHECK(r.summary["l1_to_empirical"].get<double>() < 0.06);
}

TEST_CASE("fp command") {
  const auto dir = scratch("fp");
  auto c = config({{"command", "fp"},
                   {"out", dir.string()},
                   {"ensemble", {{"dim", 2}}},
                   {"constraints", {{"generator", "explicit"}, {"diagonals", {{1, -1}}}}},
                   {"fp", {{"x", {{0, 1}, {0, 2}}}}}});
  auto r = cmd_fp(c);
  CHECK(r.summary["values"][0].get<double>() == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(r.summary["values"][1].get<double>() == doctest::Approx(1.0).epsilon(1e-9));

  c.ensemble["dim"] = 3;
  c.constraints = {{"generator", "none"}};
  c.fp = {{"x", {-1, 0, 1}}};
  CHECK(cmd_fp(c).summary["values"][0] == 1.0);

  c.constraints = {{"generator", "random-traceless"}, {"n_q", 1}};
  c.fp = {{"x", {-0.5, 0.3, 0.3}}, {"regularize", true}};
  const double v = cmd_fp(c).summary["values"][0].get<double>();
  CHECK(std::isfinite(v));
  CHECK(v > 0.0);
  const auto rec = read_json(dir / "fp.json")["records"][0];
  CHECK(rec["regularized"] == true);
  CHECK(rec["route"] == "determinant");

  c.fp = {{"x", {-0.5, 0.3, 0.4}}, {"route", "haar-mc"}, {"mc_samples", 2000}};
  const auto mc = read_json(cmd_fp(c).dir / "fp.json")["records"][0];
  CHECK(mc.contains("stderr"));
}

TEST_CASE("config precedence") {
  auto c = config({{"seed", 5}, {"samples", 7}, {"ensemble", {{"kind", "gue"}, {"dim", 3}}}});
  CHECK(c.seed == 5);
  CHECK(c.threads == 1);
  CliOverrides o;
  o.seed = 9;
  o.threads = 2;
  apply_overrides(c, o);
  CHECK(c.seed == 9);
  CHECK(c.samples == 7);
  CHECK(c.threads == 2);
  o = {};
  o.samples = 0;
  CHECK_THROWS_AS(apply_overrides(c, o), InvalidArgument);

  const auto back = config_from_json(to_json(c));
  CHECK(to_json(back) == to_json(c));
  CHECK_THROWS_AS(config_from_json({{"sed", 1}}), InvalidArgument);

  c.command = "sample";
  c.out.clear();
  ::setenv(kOutputRootVariable, "/tmp/cgue-root-test", 1);
  CHECK(output_dir(c) == fs::path("/tmp/cgue-root-test") / "sample");
  ::unsetenv(kOutputRootVariable);
  CHECK(output_dir(c) == fs::path("cgue-out") / "sample");
}

TEST_CASE("file round trips") {
  const auto dir = scratch("roundtrip");
  std::mt19937_64 g(1);
  std::normal_distribution<double> d(0.0, 1e3);
  for (int i = 0; i < 1000; ++i) {
    const double v = d(g) * std::pow(10.0, (i % 40) - 20);
    CHECK(parse_double(format_double(v)) == v);
  }
  CHECK_THROWS_AS(parse_double("1.5x"), InvalidArgument);

  EnsembleSpec spec;
  spec.dim = 6;
  spec.seed = 4;
  const auto samples = sample_ensemble(spec, 3);
  write_spectra_csv(dir / "s.csv", samples);
  const auto rows = read_spectra_csv(dir / "s.csv");
  REQUIRE(rows.size() == 3);
  for (int i = 0; i < 3; ++i) CHECK(rows[i].eigenvalues == samples[i].eigenvalues);

  Curve cv{{1, 2, 3}, {0.1, 1.0 / 3.0, 2.5e-17}, {0.01, 0.02, 0.03}};
  write_curve_csv(dir / "c.csv", cv);
  const auto cb = read_curve_csv(dir / "c.csv");
  CHECK(cb.L == cv.L);
  CHECK(cb.value == cv.value);
  CHECK(cb.error == cv.error);

  const auto dm = semicircle();
  write_density_csv(dir / "d.csv", dm);
  const auto [eps, rho] = read_density_csv(dir / "d.csv");
  CHECK(eps == dm.grid);
  CHECK(rho == dm.rho);

  const json j = {{"a", 0.1}, {"b", {1, 2}}, {"c", "x"}};
  write_json(dir / "j.json", j);
  CHECK(read_json(dir / "j.json") == j);

  const auto h = sample_gue(spec, 0);
  write_matrices(dir / "m.mat", {h, h});
  const auto hs = read_matrices(dir / "m.mat");
  REQUIRE(hs.size() == 2);
  CHECK(hs[1].dense() == h.dense());

  std::ofstream(dir / "bad.csv") << "0,1.0,abc\n";
  CHECK_THROWS_AS(read_spectra_csv(dir / "bad.csv"), InvalidArgument);
}

TEST_CASE("hashing") {
  const auto dir = scratch("hash");
  std::ofstream(dir / "abc.txt") << "abc";
  CHECK(sha256_file(dir / "abc.txt") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("report command") {
  const auto dir = scratch("report");
  auto c = config({{"command", "report"},
                   {"samples", 60},
                   {"out", dir.string()},
                   {"ensemble", {{"kind", "gue"}, {"dim", 80}}},
                   {"stats", {{"reference_samples", 60}, {"L_max", 5}}}});
  REQUIRE(run_quiet(c) == kExitOk);
  for (const char* f : {"spectra.csv", "report.json", "sigma2.csv", "delta3.csv", "manifest.json"})
    CHECK(fs::exists(dir / f));
  const auto sigma2 = read_curve_csv(dir / "sigma2.csv");
  CHECK(sigma2.L.size() == 5);
}
