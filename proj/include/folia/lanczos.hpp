#pragma once

#include <cstdint>
#include <vector>

#include "folia/grid_cache.hpp"
#include "folia/operators.hpp"

// Smallest eigenvalues of a self-adjoint operator in the volume-weighted
// inner product. The similarity transform by the square root of the volume
// weight turns the problem into a plain Hermitian one; iteration runs in
// the Nyquist-free Fourier band, where the spectral derivative is exact,
// via restarted Lanczos with full reorthogonalization and deflation
// locking. Small bands fall back to a dense solve in the plane-wave basis;
// both paths target the same projected operator, so they agree to
// rounding. Results are deterministic in the seed.

namespace folia {

struct SpectrumOptions {
  int count = 10;
  int max_iter = 120;   // Lanczos steps per sweep
  int restarts = 8;     // extra sweeps beyond one per requested eigenvalue
  double tol = 1e-8;    // residual cutoff for locking a Ritz pair
  std::uint64_t seed = 42;
  std::size_t dense_cutoff = 4096;  // band dimension for the dense path
};

std::vector<double> low_spectrum(const GridGeometryCache& cache,
                                 const LinearOperatorHandle& op,
                                 const SpectrumOptions& opt = {});

}  // namespace folia
