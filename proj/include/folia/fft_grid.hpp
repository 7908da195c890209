#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <vector>

// Spectral differentiation on a uniform N^n grid over the unit torus.
// Fields are sampled row-major with the last axis fastest. Derivatives
// multiply Fourier modes by 2 pi i k with the Nyquist mode zeroed, so a
// real field keeps a real derivative and the operation is skew-adjoint.

namespace folia {

class FftGrid {
public:
  FftGrid(int nvars, int grid_size);
  ~FftGrid();
  FftGrid(const FftGrid&) = delete;
  FftGrid& operator=(const FftGrid&) = delete;

  int nvars() const { return nvars_; }
  int grid_size() const { return n_; }
  std::size_t npoints() const { return npoints_; }

  // coordinates of a flattened grid index
  std::vector<double> coords(std::size_t flat) const;

  // flat index into the FFTW mode layout of the integer frequency vector k
  std::size_t mode_index(const std::vector<int>& k) const;

  // evaluate sum_k modes[k] e^{2 pi i k.x} on the grid; modes is a full
  // array in FFTW layout (use mode_index to address frequencies)
  void synthesize(const std::complex<double>* modes,
                  std::complex<double>* out) const;

  // remove every Fourier mode that touches the Nyquist frequency on some
  // axis, in place; such modes are invisible to the spectral derivative
  void project_nyquist_free(std::complex<double>* field) const;

  // d/dx_axis of a complex scalar field (out may alias in)
  void derivative(int axis, const std::complex<double>* in,
                  std::complex<double>* out) const;

  // all n partial derivatives sharing a single forward transform
  void gradient(const std::complex<double>* in,
                const std::vector<std::complex<double>*>& outs) const;

  void derivative_real(int axis, const double* in, double* out) const;

private:
  struct Impl;
  int nvars_, n_;
  std::size_t npoints_;
  std::unique_ptr<Impl> impl_;
};

}  // namespace folia
