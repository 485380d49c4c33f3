#pragma once

// Embedded Gaussian unitary ensemble EGUE(k): a random k-body operator on l
// single-particle orbitals, acting on the C(l, m) Slater determinants of m
// spinless fermions.

#include <cstdint>
#include <vector>

#include "cgue/hermitian.hpp"

namespace cgue {

/// Largest many-body dimension the dense builder accepts.
inline constexpr Index kEgueMaxDim = 4096;

/// C(n, k); throws CapacityError on overflow.
Index binomial(int n, int k);

/// Occupation bitmasks with popcount m over l orbitals, ascending.
/// |S> = a+_{s1} a+_{s2} ... |0> with s1 < s2 < ...
std::vector<std::uint64_t> slater_states(int l, int m);

/// Lifts the C(l,k) x C(l,k) matrix v (indexed by slater_states(l, k)) to
/// sum_{alpha,beta} v_{alpha beta} a+_alpha a_beta on the m-particle space.
HermitianMatrix lift_k_body(const HermitianMatrix& v, int l, int k, int m);

/// Ordered pairs of m-particle determinants connected by a k'-body operator
/// with 1 <= k' <= k: C(l,m) sum_{k'} C(m,k') C(l-m,k').
std::int64_t egue_connection_count(int l, int m, int k);

/// Independent real parameters of the k-body coefficient matrix, C(l,k)^2.
std::int64_t egue_parameter_count(int l, int k);

}  // namespace cgue
