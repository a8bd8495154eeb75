#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "avgcase/errors.hpp"

namespace avgcase {

// Dense row-major matrix.
template <class T>
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  [[nodiscard]] std::size_t rows() const { return rows_; }
  [[nodiscard]] std::size_t cols() const { return cols_; }
  [[nodiscard]] std::size_t size() const { return data_.size(); }

  T& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  const T& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<T> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const T> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::vector<T>& values() { return data_; }
  const std::vector<T>& values() const { return data_; }

  bool operator==(const DenseMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using RealMatrix = DenseMatrix<double>;
using BinaryMatrix = DenseMatrix<std::uint8_t>;

// ---------------------------------------------------------------------------
// AMATv1: "AMAT" | u32 version=1 | u64 rows | u64 cols | u32 dtype (1 = f64) | payload.
// All integers and doubles little-endian, payload row-major.

namespace amat {
inline constexpr char kMagic[4] = {'A', 'M', 'A', 'T'};
inline constexpr std::uint32_t kVersion = 1;
inline constexpr std::uint32_t kDtypeF64 = 1;

static_assert(std::endian::native == std::endian::little, "AMATv1 writer assumes a little-endian host");

template <class U>
void put(std::ostream& os, U v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(U));
}
template <class U>
U get(std::istream& is) {
  U v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(U))) throw FormatError("AMATv1: truncated header");
  return v;
}
}  // namespace amat

inline void write_amat(std::ostream& os, const RealMatrix& m) {
  os.write(amat::kMagic, 4);
  amat::put<std::uint32_t>(os, amat::kVersion);
  amat::put<std::uint64_t>(os, m.rows());
  amat::put<std::uint64_t>(os, m.cols());
  amat::put<std::uint32_t>(os, amat::kDtypeF64);
  os.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
}

inline RealMatrix read_amat(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, amat::kMagic, 4) != 0) throw FormatError("AMATv1: bad magic");
  if (amat::get<std::uint32_t>(is) != amat::kVersion) throw FormatError("AMATv1: unsupported version");
  const auto rows = amat::get<std::uint64_t>(is);
  const auto cols = amat::get<std::uint64_t>(is);
  if (amat::get<std::uint32_t>(is) != amat::kDtypeF64) throw FormatError("AMATv1: unsupported dtype");
  RealMatrix m(rows, cols);
  if (!is.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double))))
    throw FormatError("AMATv1: truncated payload");
  return m;
}

inline void save_amat(const std::string& path, const RealMatrix& m) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open " + path + " for writing");
  write_amat(os, m);
}

inline RealMatrix load_amat(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path);
  return read_amat(is);
}

// CSV with round-trip precision.
inline void write_csv(std::ostream& os, const RealMatrix& m) {
  os << std::setprecision(17);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j) os << ',';
      os << m(i, j);
    }
    os << '\n';
  }
}

}  // namespace avgcase
