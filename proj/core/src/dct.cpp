#include "actalign/dct.hpp"

#include <cmath>
#include <numbers>
#include <vector>

namespace actalign {

namespace {

// basis[k * H + n] = s_k * cos(pi * (n + 1/2) * k / H)
std::vector<double> dct_basis(std::size_t horizon) {
  const double h = static_cast<double>(horizon);
  std::vector<double> basis(horizon * horizon);
  for (std::size_t k = 0; k < horizon; ++k) {
    const double scale = k == 0 ? std::sqrt(1.0 / h) : std::sqrt(2.0 / h);
    for (std::size_t n = 0; n < horizon; ++n) {
      basis[k * horizon + n] =
          scale * std::cos(std::numbers::pi * (static_cast<double>(n) + 0.5) * static_cast<double>(k) / h);
    }
  }
  return basis;
}

}  // namespace

CoefficientGrid dct2(const ActionChunk& chunk) {
  const std::size_t horizon = chunk.rows();
  const std::size_t dims = chunk.cols();
  const auto basis = dct_basis(horizon);
  CoefficientGrid out(horizon, dims);
  for (std::size_t k = 0; k < horizon; ++k) {
    for (std::size_t d = 0; d < dims; ++d) {
      double acc = 0.0;
      for (std::size_t n = 0; n < horizon; ++n) acc += basis[k * horizon + n] * chunk(n, d);
      out(k, d) = acc;
    }
  }
  return out;
}

ActionChunk idct2(const CoefficientGrid& grid) {
  const std::size_t horizon = grid.rows();
  const std::size_t dims = grid.cols();
  const auto basis = dct_basis(horizon);
  ActionChunk out(horizon, dims);
  for (std::size_t n = 0; n < horizon; ++n) {
    for (std::size_t d = 0; d < dims; ++d) {
      double acc = 0.0;
      for (std::size_t k = 0; k < horizon; ++k) acc += basis[k * horizon + n] * grid(k, d);
      out(n, d) = acc;
    }
  }
  return out;
}

}  // namespace actalign
