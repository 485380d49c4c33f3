#include "cgue/matrix_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include <json.hpp>

namespace cgue {
namespace {

void put_le_double(std::ostream& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof bits);
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(bits >> (8 * i));
  out.write(reinterpret_cast<const char*>(buf), 8);
}

double get_le_double(std::istream& in) {
  unsigned char buf[8];
  if (!in.read(reinterpret_cast<char*>(buf), 8)) throw InvalidArgument("read_matrix: truncated payload");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  double v;
  std::memcpy(&v, &bits, sizeof v);
  return v;
}

}  // namespace

void write_matrix(std::ostream& out, const HermitianMatrix& h) {
  nlohmann::ordered_json header;
  header["dim"] = h.dim();
  header["layout"] = "row-major";
  header["scalar"] = "complex-f64-interleaved";
  out << header.dump() << '\n';
  for (Index r = 0; r < h.dim(); ++r) {
    for (Index c = 0; c < h.dim(); ++c) {
      put_le_double(out, h(r, c).real());
      put_le_double(out, h(r, c).imag());
    }
  }
}

HermitianMatrix read_matrix(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InvalidArgument("read_matrix: missing header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("read_matrix: malformed header: ") + e.what());
  }
  if (header.value("layout", "") != "row-major" || header.value("scalar", "") != "complex-f64-interleaved")
    throw InvalidArgument("read_matrix: unsupported layout or scalar type");
  const auto n = header.at("dim").get<Index>();
  if (n <= 0) throw InvalidArgument("read_matrix: dimension must be positive");
  ComplexMatrix m(n, n);
  for (Index r = 0; r < n; ++r) {
    for (Index c = 0; c < n; ++c) {
      const double re = get_le_double(in);
      const double im = get_le_double(in);
      m(r, c) = {re, im};
    }
  }
  return HermitianMatrix(m);
}

void write_matrix_file(const std::filesystem::path& path, const HermitianMatrix& h) {
  write_matrices(path, {h});
}

HermitianMatrix read_matrix_file(const std::filesystem::path& path) {
  auto all = read_matrices(path);
  if (all.size() != 1) throw InvalidArgument("read_matrix_file: expected exactly one matrix");
  return all.front();
}

void write_matrices(const std::filesystem::path& path, const std::vector<HermitianMatrix>& hs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("write_matrices: cannot open " + path.string());
  for (const auto& h : hs) write_matrix(out, h);
}

std::vector<HermitianMatrix> read_matrices(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("read_matrices: cannot open " + path.string());
  std::vector<HermitianMatrix> out;
  while (in.peek() != std::char_traits<char>::eof()) out.push_back(read_matrix(in));
  return out;
}

}  // namespace cgue
