#include "cgue/egue.hpp"

#include <algorithm>
#include <bit>
#include <limits>

#include "cgue/ensembles.hpp"
#include "cgue/errors.hpp"

namespace cgue {
namespace {

// (-1)^(number of occupied orbitals below j)
inline double below_sign(std::uint64_t state, int j) {
  const std::uint64_t mask = (std::uint64_t{1} << j) - 1;
  return (std::popcount(state & mask) % 2) ? -1.0 : 1.0;
}

Index state_index(const std::vector<std::uint64_t>& states, std::uint64_t s) {
  auto it = std::lower_bound(states.begin(), states.end(), s);
  return static_cast<Index>(it - states.begin());
}

// Every subset of `set` with exactly k elements.
template <typename F>
void for_each_subset(std::uint64_t set, int k, F&& f) {
  std::vector<int> bits;
  for (int j = 0; j < 64; ++j)
    if (set >> j & 1) bits.push_back(j);
  const int n = static_cast<int>(bits.size());
  if (k > n) return;
  std::vector<int> pick(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) pick[static_cast<std::size_t>(i)] = i;
  while (true) {
    std::uint64_t sub = 0;
    for (int i : pick) sub |= std::uint64_t{1} << bits[static_cast<std::size_t>(i)];
    f(sub);
    int i = k - 1;
    while (i >= 0 && pick[static_cast<std::size_t>(i)] == n - k + i) --i;
    if (i < 0) return;
    ++pick[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < k; ++j) pick[static_cast<std::size_t>(j)] = pick[static_cast<std::size_t>(j - 1)] + 1;
  }
}

void check_lkm(int l, int k, int m) {
  if (l < 1 || l > 62) throw InvalidArgument("egue: need 1 <= l <= 62");
  if (k < 1 || k > m || m > l) throw InvalidArgument("egue: need 1 <= k <= m <= l");
}

}  // namespace

Index binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  Index r = 1;
  for (int i = 1; i <= k; ++i) {
    const Index num = n - k + i;
    if (r > std::numeric_limits<Index>::max() / num) throw CapacityError("binomial: overflow");
    r = r * num / i;
  }
  return r;
}

std::vector<std::uint64_t> slater_states(int l, int m) {
  if (l < 0 || l > 62 || m < 0 || m > l) throw InvalidArgument("slater_states: need 0 <= m <= l <= 62");
  const Index count = binomial(l, m);
  if (count > kEgueMaxDim) throw CapacityError("slater_states: C(l, m) exceeds the dense envelope");
  std::vector<std::uint64_t> states;
  states.reserve(static_cast<std::size_t>(count));
  if (m == 0) return {0};
  // Gosper's hack walks popcount-m masks in increasing order.
  std::uint64_t s = (std::uint64_t{1} << m) - 1;
  const std::uint64_t limit = std::uint64_t{1} << l;
  while (s < limit) {
    states.push_back(s);
    const std::uint64_t c = s & (~s + 1);
    const std::uint64_t r = s + c;
    s = (((r ^ s) >> 2) / c) | r;
  }
  return states;
}

HermitianMatrix lift_k_body(const HermitianMatrix& v, int l, int k, int m) {
  check_lkm(l, k, m);
  const auto kstates = slater_states(l, k);
  if (v.dim() != static_cast<Index>(kstates.size()))
    throw InvalidArgument("lift_k_body: coefficient matrix must have dimension C(l, k)");
  const auto mstates = slater_states(l, m);
  const Index n = static_cast<Index>(mstates.size());
  const std::uint64_t full = (std::uint64_t{1} << l) - 1;
  ComplexMatrix h = ComplexMatrix::Zero(n, n);
  for (Index col = 0; col < n; ++col) {
    const std::uint64_t j_state = mstates[static_cast<std::size_t>(col)];
    for_each_subset(j_state, k, [&](std::uint64_t beta) {
      // a_beta = a_{beta_k} ... a_{beta_1}: lowest orbital acts first.
      std::uint64_t s = j_state;
      double sign = 1.0;
      for (int j = 0; j < l; ++j) {
        if (beta >> j & 1) {
          sign *= below_sign(s, j);
          s &= ~(std::uint64_t{1} << j);
        }
      }
      const Index b = state_index(kstates, beta);
      for_each_subset(full & ~s, k, [&](std::uint64_t alpha) {
        // a+_alpha = a+_{alpha_1} ... a+_{alpha_k}: highest orbital acts first.
        std::uint64_t t = s;
        double sgn = sign;
        for (int j = l - 1; j >= 0; --j) {
          if (alpha >> j & 1) {
            sgn *= below_sign(t, j);
            t |= std::uint64_t{1} << j;
          }
        }
        const Index row = state_index(mstates, t);
        h(row, col) += sgn * v(state_index(kstates, alpha), b);
      });
    });
  }
  return HermitianMatrix::hermitian_part(h);
}

std::int64_t egue_connection_count(int l, int m, int k) {
  check_lkm(l, k, m);
  std::int64_t per_state = 0;
  for (int kk = 1; kk <= k; ++kk) per_state += binomial(m, kk) * binomial(l - m, kk);
  return binomial(l, m) * per_state;
}

std::int64_t egue_parameter_count(int l, int k) {
  const auto d = binomial(l, k);
  return d * d;
}

HermitianMatrix build_egue(const EnsembleSpec& spec, Index sample_index) {
  if (spec.kind != EnsembleKind::egue) throw InvalidArgument("build_egue: spec kind must be egue");
  spec.validate();
  EnsembleSpec coeff;
  coeff.kind = EnsembleKind::gue;
  coeff.dim = binomial(spec.l, spec.k);
  coeff.lambda = spec.lambda;
  coeff.seed = spec.seed;
  return lift_k_body(sample_gue(coeff, sample_index), spec.l, spec.k, spec.m);
}

}  // namespace cgue
