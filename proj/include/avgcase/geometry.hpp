#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "avgcase/errors.hpp"
#include "avgcase/matrix.hpp"

namespace avgcase {

inline bool is_prime(std::uint64_t r) {
  if (r < 2) return false;
  for (std::uint64_t d = 2; d * d <= r; ++d)
    if (r % d == 0) return false;
  return true;
}

// Smallest prime strictly greater than x.
inline std::uint64_t next_prime_above(double x) {
  auto r = static_cast<std::uint64_t>(std::floor(x)) + 1;
  if (r < 2) r = 2;
  while (!is_prime(r)) ++r;
  return r;
}

// Checked r^t; nullopt-like 0 on overflow.
inline std::uint64_t checked_pow(std::uint64_t r, std::uint64_t t) {
  std::uint64_t out = 1;
  for (std::uint64_t i = 0; i < t; ++i) {
    if (out > UINT64_MAX / r) return 0;
    out *= r;
  }
  return out;
}

struct PrimePower {
  std::uint64_t r = 2;
  std::uint64_t t = 2;

  PrimePower(std::uint64_t r_, std::uint64_t t_) : r(r_), t(t_) {
    if (!is_prime(r)) throw ParameterError("r = " + std::to_string(r) + " is not prime");
    if (t < 1) throw ParameterError("t must be at least 1");
    if (checked_pow(r, t) == 0) throw ParameterError("r^t overflows 64 bits");
  }

  [[nodiscard]] std::uint64_t points() const { return checked_pow(r, t); }
  [[nodiscard]] std::uint64_t hyperplanes() const { return (points() - 1) / (r - 1); }
};

using FieldVector = std::vector<std::uint32_t>;

// Base-r digits of index j, most significant first.
inline FieldVector point_coords(std::uint64_t j, const PrimePower& pp) {
  FieldVector v(pp.t);
  for (std::uint64_t c = pp.t; c-- > 0;) {
    v[c] = static_cast<std::uint32_t>(j % pp.r);
    j /= pp.r;
  }
  return v;
}

// All points of F_r^t in lexicographic order; index 0 is the zero vector.
inline std::vector<FieldVector> enum_points(const PrimePower& pp) {
  std::vector<FieldVector> out;
  out.reserve(pp.points());
  for (std::uint64_t j = 0; j < pp.points(); ++j) out.push_back(point_coords(j, pp));
  return out;
}

struct Hyperplane {
  FieldVector normal;
  std::uint32_t r = 2;
  // Membership: <normal, x> = 0 mod r.
  [[nodiscard]] bool contains(const FieldVector& x) const {
    std::uint64_t s = 0;
    for (std::size_t c = 0; c < normal.size(); ++c) s += std::uint64_t{normal[c]} * x[c];
    return s % r == 0;
  }
};

// Hyperplanes through 0 indexed by canonical normals (first nonzero coordinate 1), lexicographic.
inline std::vector<Hyperplane> enum_hyperplanes(const PrimePower& pp) {
  std::vector<Hyperplane> out;
  out.reserve(pp.hyperplanes());
  for (std::uint64_t j = 1; j < pp.points(); ++j) {
    FieldVector v = point_coords(j, pp);
    std::size_t lead = 0;
    while (v[lead] == 0) ++lead;
    if (v[lead] == 1) out.push_back({std::move(v), static_cast<std::uint32_t>(pp.r)});
  }
  return out;
}

// Two-valued l x r^t matrix: entry (i,j) is (1-r)/sqrt(r^t (r-1)) when point j lies on
// hyperplane i and 1/sqrt(r^t (r-1)) otherwise.
struct IncidenceMatrix {
  std::uint64_t r = 2, t = 2;
  std::size_t rows = 0, cols = 0;
  std::size_t zero_col = 0;
  double positive = 0.0, negative = 0.0;
  RealMatrix values;
  BinaryMatrix on_plane;  // 1 where the entry takes the negative value
};

inline constexpr std::uint64_t kMaxIncidencePoints = std::uint64_t{1} << 20;

inline IncidenceMatrix build_H(const PrimePower& pp) {
  if (pp.points() > kMaxIncidencePoints)
    throw ParameterError("build_H: r^t = " + std::to_string(pp.points()) + " exceeds the dense limit");
  IncidenceMatrix h;
  h.r = pp.r;
  h.t = pp.t;
  h.rows = pp.hyperplanes();
  h.cols = pp.points();
  h.zero_col = 0;
  const double scale = 1.0 / std::sqrt(static_cast<double>(h.cols) * static_cast<double>(pp.r - 1));
  h.positive = scale;
  h.negative = (1.0 - static_cast<double>(pp.r)) * scale;
  const auto points = enum_points(pp);
  const auto planes = enum_hyperplanes(pp);
  h.values = RealMatrix(h.rows, h.cols);
  h.on_plane = BinaryMatrix(h.rows, h.cols);
  for (std::size_t i = 0; i < h.rows; ++i)
    for (std::size_t j = 0; j < h.cols; ++j) {
      const bool on = planes[i].contains(points[j]);
      h.on_plane(i, j) = on ? 1 : 0;
      h.values(i, j) = on ? h.negative : h.positive;
    }
  return h;
}

}  // namespace avgcase
