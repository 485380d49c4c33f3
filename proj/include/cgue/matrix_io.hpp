#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "cgue/hermitian.hpp"

namespace cgue {

// Matrix file: one header line holding a JSON record
//   {"dim":N,"layout":"row-major","scalar":"complex-f64-interleaved"}
// followed by 2 N^2 little-endian IEEE-754 doubles (re, im interleaved).

void write_matrix(std::ostream& out, const HermitianMatrix& h);
HermitianMatrix read_matrix(std::istream& in);

void write_matrix_file(const std::filesystem::path& path, const HermitianMatrix& h);
HermitianMatrix read_matrix_file(const std::filesystem::path& path);

/// Several matrices concatenated in one stream.
void write_matrices(const std::filesystem::path& path, const std::vector<HermitianMatrix>& hs);
std::vector<HermitianMatrix> read_matrices(const std::filesystem::path& path);

}  // namespace cgue
