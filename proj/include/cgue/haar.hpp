#pragma once

#include <cstdint>

#include "cgue/hermitian.hpp"
#include "cgue/random.hpp"

namespace cgue {

/// Haar-distributed N x N unitary: QR of a complex Ginibre matrix with the
/// phases of R's diagonal moved into Q.
ComplexMatrix haar_unitary(Index n, Engine& engine);
ComplexMatrix haar_unitary(Index n, std::uint64_t seed, Index index);

/// First k columns of a Haar unitary (Gram-Schmidt on k complex Gaussian
/// vectors; same law as k columns of haar_unitary).
ComplexMatrix haar_columns(Index n, Index k, Engine& engine);

}  // namespace cgue
