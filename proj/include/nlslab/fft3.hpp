#pragma once

#include <complex>
#include <vector>

#include "nlslab/grid.hpp"

namespace nlslab {

// In-place unnormalized rank-N complex DFTs on box-grid data (row major,
// last axis fastest).  Plans are cached per (N, n, direction) behind a
// mutex; execution is single-threaded and deterministic.
void fft_forward(const BoxGrid& grid, std::vector<std::complex<double>>& data);
void fft_backward(const BoxGrid& grid, std::vector<std::complex<double>>& data);

}  // namespace nlslab
