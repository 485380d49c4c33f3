#include "cgue/io.hpp"

#include <openssl/evp.h>

#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

#include "cgue/errors.hpp"

namespace cgue {

namespace fs = std::filesystem;

std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto r = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), r.ptr);
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
  while (end > begin && (end[-1] == ' ' || end[-1] == '\t' || end[-1] == '\r')) --end;
  const auto r = std::from_chars(begin, end, v);
  if (r.ec != std::errc() || r.ptr != end) throw InvalidArgument("cannot parse number '" + s + "'");
  return v;
}

fs::path default_output_root() {
  if (const char* root = std::getenv(kOutputRootVariable); root && *root) return root;
  return "cgue-out";
}

namespace {

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  return out;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot read " + path.string());
  return in;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

json vector_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

// NaN and infinities become null.
json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

// ---------------------------------------------------------------- spectra

void write_spectra_csv(const fs::path& path, const std::vector<SpectrumSample>& samples) {
  auto out = open_out(path);
  for (const auto& s : samples) {
    out << s.sample_index;
    for (Index i = 0; i < s.eigenvalues.size(); ++i) out << ',' << format_double(s.eigenvalues[i]);
    out << '\n';
  }
}

std::vector<SpectrumRow> read_spectra_csv(const fs::path& path) {
  auto in = open_in(path);
  std::vector<SpectrumRow> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = split(line, ',');
    if (cells.size() < 2) throw InvalidArgument(path.string() + ":" + std::to_string(line_no) + ": too few fields");
    SpectrumRow row;
    try {
      const double idx = parse_double(cells[0]);
      if (idx < 0 || idx != std::floor(idx)) throw InvalidArgument("bad sample index");
      row.sample_index = static_cast<Index>(idx);
      row.eigenvalues.resize(static_cast<Index>(cells.size() - 1));
      for (std::size_t i = 1; i < cells.size(); ++i) row.eigenvalues[static_cast<Index>(i - 1)] = parse_double(cells[i]);
    } catch (const InvalidArgument& e) {
      throw InvalidArgument(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    for (Index i = 1; i < row.eigenvalues.size(); ++i)
      if (row.eigenvalues[i] < row.eigenvalues[i - 1])
        throw InvalidArgument(path.string() + ":" + std::to_string(line_no) + ": eigenvalues not ascending");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InvalidArgument(path.string() + ": no spectra");
  return rows;
}

// ---------------------------------------------------------------- curves

void write_curve_csv(const fs::path& path, const Curve& c) {
  auto out = open_out(path);
  out << "L,value,error\n";
  for (std::size_t i = 0; i < c.L.size(); ++i)
    out << format_double(c.L[i]) << ',' << format_double(c.value[i]) << ',' << format_double(c.error[i]) << '\n';
}

Curve read_curve_csv(const fs::path& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("L,value,error", 0) != 0) throw InvalidArgument("curve CSV: bad header");
  Curve c;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != 3) throw InvalidArgument("curve CSV: expected 3 fields");
    c.L.push_back(parse_double(cells[0]));
    c.value.push_back(parse_double(cells[1]));
    c.error.push_back(parse_double(cells[2]));
  }
  return c;
}

void write_histogram_csv(const fs::path& path, const Histogram& h) {
  auto out = open_out(path);
  out << "lo,hi,density\n";
  for (std::size_t i = 0; i < h.density.size(); ++i)
    out << format_double(h.edges[i]) << ',' << format_double(h.edges[i + 1]) << ',' << format_double(h.density[i])
        << '\n';
}

void write_density_csv(const fs::path& path, const DensityModel& dm) {
  auto out = open_out(path);
  out << "eps,rho\n";
  for (Index i = 0; i < dm.grid.size(); ++i) out << format_double(dm.grid[i]) << ',' << format_double(dm.rho[i]) << '\n';
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> read_density_csv(const fs::path& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("eps,rho", 0) != 0) throw InvalidArgument("density CSV: bad header");
  std::vector<double> e, r;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != 2) throw InvalidArgument("density CSV: expected 2 fields");
    e.push_back(parse_double(cells[0]));
    r.push_back(parse_double(cells[1]));
  }
  return {Eigen::Map<Eigen::VectorXd>(e.data(), static_cast<Index>(e.size())),
          Eigen::Map<Eigen::VectorXd>(r.data(), static_cast<Index>(r.size()))};
}

// ---------------------------------------------------------------- JSON records

json to_json(const ConstraintSet& cs) {
  json j;
  j["dim"] = cs.dim();
  j["n_q"] = cs.n_q();
  j["n_p"] = cs.n_p();
  j["seed"] = cs.seed();
  j["generator"] = to_string(cs.generator());
  j["traceless"] = cs.traceless();
  return j;
}

json to_json(const EnsembleSpec& s) {
  json j;
  j["kind"] = to_string(s.kind);
  j["dim"] = s.hilbert_dim();
  if (s.kind == EnsembleKind::egue) {
    j["l"] = s.l;
    j["m"] = s.m;
    j["k"] = s.k;
  }
  j["lambda"] = s.lambda;
  if (s.kind == EnsembleKind::constrained || s.kind == EnsembleKind::deformed) {
    j["constraints"] = to_json(s.constraints);
    j["regularized"] = s.regularized;
  }
  if (s.kind == EnsembleKind::deformed) j["epsilon"] = s.epsilon;
  if (s.kind == EnsembleKind::banded) j["bandwidth"] = s.bandwidth;
  j["seed"] = s.seed;
  return j;
}

json to_json(const Histogram& h) {
  json j;
  j["edges"] = h.edges;
  j["density"] = h.density;
  j["count"] = h.count;
  j["total"] = h.total;
  return j;
}

json to_json(const Curve& c) {
  json j;
  j["L"] = c.L;
  j["value"] = c.value;
  j["error"] = c.error;
  return j;
}

json to_json(const FluctuationReport& r) {
  json j;
  j["samples"] = r.samples;
  j["unfold_method"] = to_string(r.unfold_method);
  j["spacing_count"] = r.spacings.size();
  json n;
  n["histogram"] = to_json(r.nnsd.histogram);
  n["distances_reported"] = r.nnsd.distances_reported;
  if (r.nnsd.distances_reported) {
    n["ks_gue"] = number(r.nnsd.ks_gue);
    n["ks_poisson"] = number(r.nnsd.ks_poisson);
  }
  n["repulsion_exponent"] = number(r.nnsd.repulsion_exponent);
  j["nnsd"] = n;
  json q;
  q["mean"] = number(r.ratios.mean);
  q["error"] = number(r.ratios.error);
  q["count"] = r.ratios.count;
  q["histogram"] = to_json(r.ratios.histogram);
  j["ratios"] = q;
  j["sigma2"] = to_json(r.sigma2);
  j["delta3"] = to_json(r.delta3);
  return j;
}

json to_json(const ComparisonSummary& c) {
  json j;
  j["nnsd_ks"] = number(c.nnsd.distance);
  j["nnsd_ks_p"] = number(c.nnsd.p_value);
  j["ratio_difference"] = number(c.ratio_difference);
  j["ratio_sigma"] = number(c.ratio_sigma);
  j["sigma2_sup"] = number(c.sigma2_sup);
  j["sigma2_sup_z"] = number(c.sigma2_sup_z);
  j["delta3_sup"] = number(c.delta3_sup);
  j["delta3_sup_z"] = number(c.delta3_sup_z);
  j["consistent"] = c.consistent;
  return j;
}

json to_json(const FPValue& v) {
  json j;
  j["route"] = to_string(v.route);
  j["value"] = number(v.value);
  j["stderr"] = v.error ? number(*v.error) : json(nullptr);
  j["absolute"] = number(v.absolute);
  j["reference"] = number(v.reference);
  j["x_ref"] = vector_json(v.x_ref);
  j["normalized"] = v.normalized;
  j["regularized"] = v.regularized;
  j["singular"] = v.singular;
  if (v.route == FPRoute::haar_mc) {
    j["unreliable"] = v.unreliable;
    j["effective_samples"] = number(v.effective_samples);
  }
  return j;
}

json to_json(const DegeneracyProfile& p) {
  json j;
  j["clusters"] = p.clusters;
  j["multiplicities"] = p.multiplicities;
  j["nq_crit"] = p.nq_crit;
  return j;
}

json to_json(const EffectiveField& f) {
  json j;
  j["c"] = f.c;
  j["decreasing"] = f.decreasing;
  if (!f.warning.empty()) j["warning"] = f.warning;
  return j;
}

json to_json(const DensityModel& dm) {
  json j;
  j["n_max"] = dm.field.c.size();
  j["iterations"] = dm.iterations;
  j["converged"] = dm.converged;
  j["residual"] = number(dm.residual);
  j["support"] = {-dm.a, dm.a};
  j["moments"] = dm.moments;
  j["field"] = to_json(dm.field);
  j["trace"] = dm.trace;
  j["grid_points"] = dm.grid.size();
  return j;
}

void write_json(const fs::path& path, const json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

json read_json(const fs::path& path) {
  auto in = open_in(path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw InvalidArgument(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------- manifest

std::string sha256_file(const fs::path& path) {
  auto in = open_in(path);
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
    EVP_MD_CTX_free(ctx);
    throw NumericFailure("sha256: digest unavailable");
  }
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md.data(), &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return hex.str();
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

RunManifest make_manifest(const json& config, const fs::path& dir, const std::vector<std::string>& files,
                          const std::string& started) {
  RunManifest m;
  m.config = config;
  m.code_version = CGUE_VERSION;
  m.started = started;
  m.finished = utc_timestamp();
  for (const auto& f : files) {
    const fs::path p = dir / f;
    m.files.push_back({f, sha256_file(p), fs::file_size(p)});
  }
  return m;
}

json to_json(const RunManifest& m) {
  json j;
  j["code_version"] = m.code_version;
  j["started"] = m.started;
  j["finished"] = m.finished;
  j["config"] = m.config;
  json files = json::array();
  for (const auto& f : m.files) files.push_back({{"path", f.path}, {"sha256", f.sha256}, {"bytes", f.bytes}});
  j["files"] = files;
  return j;
}

// ---------------------------------------------------------------- SVG

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << v;
  return os.str();
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

}  // namespace

std::string render_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                       const std::vector<SvgSeries>& series) {
  constexpr double W = 640, H = 420, L = 60, R = 20, T = 40, B = 50;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y1 = 0.0;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y1 = std::max(y1, s.y[i]);
    }
  if (!(x1 > x0)) {
    x0 = 0.0;
    x1 = 1.0;
  }
  if (!(y1 > 0.0)) y1 = 1.0;
  y1 *= 1.05;
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - y / y1 * (H - T - B); };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << escape(title) << "</text>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double xv = x0 + (x1 - x0) * t / 4.0, yv = y1 * t / 4.0;
    os << "<text x=\"" << fmt(px(xv)) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\">" << fmt(xv) << "</text>\n";
    os << "<text x=\"" << L - 6 << "\" y=\"" << fmt(py(yv) + 4) << "\" text-anchor=\"end\">" << fmt(yv) << "</text>\n";
  }
  os << "<text x=\"" << W / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">" << escape(x_label) << "</text>\n";
  os << "<text x=\"16\" y=\"" << H / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " << H / 2 << ")\">"
     << escape(y_label) << "</text>\n";
  int legend = 0;
  for (const auto& s : series) {
    if (s.bars && s.x.size() >= 2) {
      const double w = s.x[1] - s.x[0];
      for (std::size_t i = 0; i < s.x.size(); ++i)
        os << "<rect x=\"" << fmt(px(s.x[i] - w / 2)) << "\" y=\"" << fmt(py(s.y[i])) << "\" width=\""
           << fmt(px(s.x[i] + w / 2) - px(s.x[i] - w / 2)) << "\" height=\"" << fmt(H - B - py(s.y[i]))
           << "\" fill=\"" << s.color << "\" fill-opacity=\"0.5\"/>\n";
    } else {
      os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t i = 0; i < s.x.size(); ++i)
        if (std::isfinite(s.y[i])) os << fmt(px(s.x[i])) << ',' << fmt(py(s.y[i])) << ' ';
      os << "\"/>\n";
    }
    const double ly = T + 14.0 * legend++;
    os << "<rect x=\"" << W - R - 150 << "\" y=\"" << ly << "\" width=\"10\" height=\"10\" fill=\"" << s.color << "\"/>";
    os << "<text x=\"" << W - R - 135 << "\" y=\"" << ly + 9 << "\">" << escape(s.label) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string nnsd_svg(const NnsdResult& r) {
  SvgSeries hist{"unfolded spacings", {}, r.histogram.density, "#1f77b4", true};
  for (std::size_t i = 0; i + 1 < r.histogram.edges.size(); ++i)
    hist.x.push_back(0.5 * (r.histogram.edges[i] + r.histogram.edges[i + 1]));
  SvgSeries gue{"Wigner surmise", {}, {}, "#d62728"};
  SvgSeries poisson{"Poisson exp(-s)", {}, {}, "#2ca02c"};
  const double s_max = r.histogram.edges.empty() ? 4.0 : r.histogram.edges.back();
  for (int i = 0; i <= 200; ++i) {
    const double s = s_max * i / 200.0;
    gue.x.push_back(s);
    gue.y.push_back(wigner_surmise_pdf(s));
    poisson.x.push_back(s);
    poisson.y.push_back(std::exp(-s));
  }
  return render_svg("Nearest-neighbour spacing distribution", "s", "P(s)", {hist, gue, poisson});
}

std::string sigma2_svg(const Curve& c) {
  SvgSeries data{"measured", c.L, c.value, "#1f77b4"};
  SvgSeries gue{"GUE asymptote", {}, {}, "#d62728"};
  SvgSeries poisson{"Poisson L", {}, {}, "#2ca02c"};
  for (double L : c.L) {
    gue.x.push_back(L);
    gue.y.push_back((std::log(2.0 * std::numbers::pi * L) + std::numbers::egamma + 1.0) / (std::numbers::pi * std::numbers::pi));
    poisson.x.push_back(L);
    poisson.y.push_back(L);
  }
  return render_svg("Number variance", "L", "Sigma^2(L)", {data, gue, poisson});
}

void write_text(const fs::path& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
}

}  // namespace cgue
