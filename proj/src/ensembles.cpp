#include "cgue/ensembles.hpp"

#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include "cgue/egue.hpp"
#include "cgue/errors.hpp"
#include "cgue/random.hpp"

namespace cgue {

std::string to_string(EnsembleKind k) {
  switch (k) {
    case EnsembleKind::gue: return "gue";
    case EnsembleKind::constrained: return "constrained";
    case EnsembleKind::deformed: return "deformed";
    case EnsembleKind::banded: return "banded";
    case EnsembleKind::egue: return "egue";
  }
  return "gue";
}

EnsembleKind ensemble_kind_from_string(const std::string& s) {
  static const std::map<std::string, EnsembleKind> names{{"gue", EnsembleKind::gue},
                                                         {"constrained", EnsembleKind::constrained},
                                                         {"deformed", EnsembleKind::deformed},
                                                         {"banded", EnsembleKind::banded},
                                                         {"egue", EnsembleKind::egue}};
  auto it = names.find(s);
  if (it == names.end()) throw InvalidArgument("unknown ensemble kind '" + s + "'");
  return it->second;
}

Index EnsembleSpec::hilbert_dim() const {
  if (kind == EnsembleKind::egue) return binomial(l, m);
  return dim;
}

void EnsembleSpec::validate() const {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw InvalidArgument("ensemble: lambda must be positive");
  if (kind == EnsembleKind::egue) {
    if (k < 1 || k > m || m > l || l > 62) throw InvalidArgument("egue: need 1 <= k <= m <= l <= 62");
    if (binomial(l, m) > kEgueMaxDim) {
      std::ostringstream os;
      os << "egue: C(" << l << "," << m << ") = " << binomial(l, m) << " exceeds the dense envelope " << kEgueMaxDim;
      throw CapacityError(os.str());
    }
    return;
  }
  if (dim < 1) throw InvalidArgument("ensemble: dimension must be positive");
  switch (kind) {
    case EnsembleKind::constrained:
    case EnsembleKind::deformed:
      if (constraints.dim() != dim) throw InvalidArgument("ensemble: constraint set dimension differs from N");
      if (kind == EnsembleKind::constrained && constraints.n_p() == 0)
        throw InvalidArgument("constrained ensemble: the P-span is empty (N_Q = N^2)");
      if (kind == EnsembleKind::deformed && (!(epsilon >= 0.0) || !std::isfinite(epsilon)))
        throw InvalidArgument("deformed ensemble: epsilon must be >= 0");
      if (regularized && kind == EnsembleKind::constrained) {
        if (!constraints.traceless()) throw InvalidArgument("regularized sampling needs traceless constraints");
        if (constraints.n_p() < 2) throw InvalidArgument("regularized sampling needs a traceless P direction");
      }
      break;
    case EnsembleKind::banded:
      if (bandwidth < 1 || bandwidth > dim) throw InvalidArgument("banded ensemble: need 1 <= b <= N");
      break;
    default:
      break;
  }
}

Eigen::VectorXd gaussian_coordinates(Index n, double lambda, std::uint64_t seed, Index sample_index) {
  auto engine = make_engine(seed, static_cast<std::uint64_t>(sample_index), domain::sample);
  std::normal_distribution<double> normal(0.0, lambda / std::sqrt(static_cast<double>(n)));
  Eigen::VectorXd z(n * n);
  for (Index i = 0; i < z.size(); ++i) z[i] = normal(engine);
  return z;
}

HermitianMatrix sample_gue(const EnsembleSpec& spec, Index sample_index) {
  if (!(spec.lambda > 0.0) || spec.dim < 1) throw InvalidArgument("sample_gue: need N >= 1 and lambda > 0");
  return from_coordinates(spec.dim, gaussian_coordinates(spec.dim, spec.lambda, spec.seed, sample_index));
}

HermitianMatrix sample_constrained_matrix(const EnsembleSpec& spec, Index sample_index) {
  spec.validate();
  const Index n = spec.dim;
  Eigen::VectorXd h = spec.constraints.project_p(gaussian_coordinates(n, spec.lambda, spec.seed, sample_index));
  if (spec.regularized) {
    // Split off the trace direction (inside P for traceless constraints) and
    // give the traceless rest a chi radius with N^2 - 1 degrees of freedom:
    // r^(N_P - 2) times the factor r^(N_Q) of the regularized weight.
    const Eigen::VectorXd u = trace_direction(n);
    const double along = u.dot(h);
    Eigen::VectorXd rest = h - along * u;
    const double norm = rest.norm();
    auto engine = make_engine(spec.seed, static_cast<std::uint64_t>(sample_index), domain::radius);
    std::gamma_distribution<double> gamma(0.5 * static_cast<double>(n * n - 1), 2.0);
    const double radius = spec.lambda / std::sqrt(static_cast<double>(n)) * std::sqrt(gamma(engine));
    if (norm > 0.0) rest *= radius / norm;
    h = along * u + rest;
  }
  return from_coordinates(n, h);
}

HermitianMatrix sample_deformed_matrix(const EnsembleSpec& spec, Index sample_index) {
  spec.validate();
  if (spec.kind != EnsembleKind::deformed) throw InvalidArgument("sample_deformed: spec kind must be deformed");
  const auto z = gaussian_coordinates(spec.dim, spec.lambda, spec.seed, sample_index);
  return from_coordinates(spec.dim, spec.constraints.scale_q(z, spec.epsilon));
}

Index banded_parameter_count(Index n, Index bandwidth) {
  if (bandwidth < 1 || bandwidth > n) throw InvalidArgument("banded: need 1 <= b <= N");
  // n diagonal reals plus two reals for each pair 0 < nu - mu <= b.
  return n + 2 * (n * bandwidth - bandwidth * (bandwidth + 1) / 2);
}

Index banded_constraint_count(Index n, Index bandwidth) { return n * n - banded_parameter_count(n, bandwidth); }

HermitianMatrix sample_banded_matrix(const EnsembleSpec& spec, Index sample_index) {
  spec.validate();
  const Index n = spec.dim;
  Eigen::VectorXd z = gaussian_coordinates(n, spec.lambda, spec.seed, sample_index);
  const Index pairs = n * (n - 1) / 2;
  Index p = 0;
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j, ++p) {
      if (j - i > spec.bandwidth) {
        z[n + p] = 0.0;
        z[n + pairs + p] = 0.0;
      }
    }
  }
  return from_coordinates(n, z);
}

namespace {
SpectrumSample make_sample(const EnsembleSpec& spec, Index index, const HermitianMatrix& h) {
  return {eigenvalues(h), std::make_shared<const EnsembleSpec>(spec), index};
}
}  // namespace

SpectrumSample sample_constrained_spectrum(const EnsembleSpec& spec, Index sample_index) {
  if (spec.kind != EnsembleKind::constrained)
    throw InvalidArgument("sample_constrained_spectrum: spec kind must be constrained");
  return make_sample(spec, sample_index, sample_constrained_matrix(spec, sample_index));
}

SpectrumSample sample_deformed(const EnsembleSpec& spec, Index sample_index) {
  return make_sample(spec, sample_index, sample_deformed_matrix(spec, sample_index));
}

SpectrumSample sample_banded(const EnsembleSpec& spec, Index sample_index) {
  if (spec.kind != EnsembleKind::banded) throw InvalidArgument("sample_banded: spec kind must be banded");
  return make_sample(spec, sample_index, sample_banded_matrix(spec, sample_index));
}

HermitianMatrix sample_matrix(const EnsembleSpec& spec, Index sample_index) {
  switch (spec.kind) {
    case EnsembleKind::gue:
      spec.validate();
      return sample_gue(spec, sample_index);
    case EnsembleKind::constrained: return sample_constrained_matrix(spec, sample_index);
    case EnsembleKind::deformed: return sample_deformed_matrix(spec, sample_index);
    case EnsembleKind::banded: return sample_banded_matrix(spec, sample_index);
    case EnsembleKind::egue: return build_egue(spec, sample_index);
  }
  throw InvalidArgument("sample_matrix: unknown ensemble kind");
}

SpectrumSample sample_spectrum(const EnsembleSpec& spec, Index sample_index) {
  return make_sample(spec, sample_index, sample_matrix(spec, sample_index));
}

std::vector<SpectrumSample> sample_ensemble(const EnsembleSpec& spec, Index count, int threads, Index first) {
  spec.validate();
  if (count < 0) throw InvalidArgument("sample_ensemble: negative sample count");
  auto shared = std::make_shared<const EnsembleSpec>(spec);
  std::vector<SpectrumSample> out(static_cast<std::size_t>(count));
  parallel_for(count, threads, [&](std::int64_t i) {
    const Index index = first + i;
    out[static_cast<std::size_t>(i)] = {eigenvalues(sample_matrix(spec, index)), shared, index};
  });
  return out;
}

}  // namespace cgue
