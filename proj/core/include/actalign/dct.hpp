#pragma once

#include "actalign/grid.hpp"
#include "actalign/traj_data.hpp"

namespace actalign {

// Frequency-major: row k holds frequency k of every action dimension.
using CoefficientGrid = DenseGrid<struct CoefficientGridTag>;

// Orthonormal DCT-II along the time axis, independently per dimension:
//   C[k][d] = s_k * sum_n a[n][d] * cos(pi * (n + 1/2) * k / H)
// with s_0 = sqrt(1/H) and s_k = sqrt(2/H) for k > 0.
CoefficientGrid dct2(const ActionChunk& chunk);

// Orthonormal DCT-III; exact inverse of dct2.
ActionChunk idct2(const CoefficientGrid& grid);

}  // namespace actalign
