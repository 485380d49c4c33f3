#include "cgue/haar.hpp"

#include <cmath>
#include <random>

namespace cgue {

namespace {
ComplexMatrix ginibre(Index rows, Index cols, Engine& engine) {
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  ComplexMatrix g(rows, cols);
  for (Index c = 0; c < cols; ++c)
    for (Index r = 0; r < rows; ++r) {
      const double re = normal(engine);
      const double im = normal(engine);
      g(r, c) = {re, im};
    }
  return g;
}
}  // namespace

ComplexMatrix haar_unitary(Index n, Engine& engine) {
  const ComplexMatrix g = ginibre(n, n, engine);
  Eigen::HouseholderQR<ComplexMatrix> qr(g);
  ComplexMatrix q = qr.householderQ();
  const ComplexMatrix& r = qr.matrixQR();
  for (Index j = 0; j < n; ++j) {
    const auto d = r(j, j);
    const double mag = std::abs(d);
    q.col(j) *= mag > 0.0 ? d / mag : std::complex<double>(1.0);
  }
  return q;
}

ComplexMatrix haar_unitary(Index n, std::uint64_t seed, Index index) {
  auto engine = make_engine(seed, static_cast<std::uint64_t>(index), domain::haar);
  return haar_unitary(n, engine);
}

ComplexMatrix haar_columns(Index n, Index k, Engine& engine) {
  ComplexMatrix v = ginibre(n, k, engine);
  for (Index j = 0; j < k; ++j) {
    for (int pass = 0; pass < 2; ++pass)
      for (Index i = 0; i < j; ++i) v.col(j) -= v.col(i).dot(v.col(j)) * v.col(i);
    v.col(j).normalize();
  }
  return v;
}

}  // namespace cgue
