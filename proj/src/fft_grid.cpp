#include "folia/fft_grid.hpp"

#include <fftw3.h>

#include <cmath>
#include <algorithm>
#include <cstring>
#include <numbers>
#include <stdexcept>

namespace folia {

struct FftGrid::Impl {
  fftw_complex* buf = nullptr;
  fftw_complex* modes = nullptr;
  fftw_plan fwd = nullptr;
  fftw_plan bwd = nullptr;
  ~Impl() {
    if (fwd) fftw_destroy_plan(fwd);
    if (bwd) fftw_destroy_plan(bwd);
    if (buf) fftw_free(buf);
    if (modes) fftw_free(modes);
  }
};

FftGrid::FftGrid(int nvars, int grid_size)
    : nvars_(nvars), n_(grid_size), impl_(std::make_unique<Impl>()) {
  if (nvars < 1 || nvars > 6) throw std::invalid_argument("fft grid: arity");
  if (grid_size < 2) throw std::invalid_argument("fft grid: size");
  npoints_ = 1;
  for (int i = 0; i < nvars; ++i) npoints_ *= static_cast<std::size_t>(n_);
  impl_->buf = fftw_alloc_complex(npoints_);
  impl_->modes = fftw_alloc_complex(npoints_);
  std::vector<int> dims(nvars_, n_);
  impl_->fwd = fftw_plan_dft(nvars_, dims.data(), impl_->buf, impl_->modes,
                             FFTW_FORWARD, FFTW_ESTIMATE);
  impl_->bwd = fftw_plan_dft(nvars_, dims.data(), impl_->modes, impl_->buf,
                             FFTW_BACKWARD, FFTW_ESTIMATE);
  if (!impl_->fwd || !impl_->bwd)
    throw std::runtime_error("fft grid: planning failed");
}

FftGrid::~FftGrid() = default;

std::vector<double> FftGrid::coords(std::size_t flat) const {
  std::vector<double> x(nvars_);
  for (int axis = nvars_ - 1; axis >= 0; --axis) {
    x[axis] = static_cast<double>(flat % n_) / n_;
    flat /= n_;
  }
  return x;
}

namespace {

// frequency of mode index j on an N-point axis; Nyquist handled by caller
inline int mode_freq(int j, int n) { return j <= n / 2 ? j : j - n; }

}  // namespace

void FftGrid::gradient(const std::complex<double>* in,
                       const std::vector<std::complex<double>*>& outs) const {
  if (static_cast<int>(outs.size()) != nvars_)
    throw std::invalid_argument("fft grid: gradient output arity");
  std::copy(in, in + npoints_,
            reinterpret_cast<std::complex<double>*>(impl_->buf));
  fftw_execute(impl_->fwd);
  const auto* modes = reinterpret_cast<const std::complex<double>*>(impl_->modes);
  std::vector<std::complex<double>> saved(modes, modes + npoints_);

  const double norm = 1.0 / static_cast<double>(npoints_);
  std::vector<std::size_t> stride(nvars_);
  stride[nvars_ - 1] = 1;
  for (int a = nvars_ - 2; a >= 0; --a)
    stride[a] = stride[a + 1] * static_cast<std::size_t>(n_);

  for (int axis = 0; axis < nvars_; ++axis) {
    if (!outs[axis]) continue;
    for (std::size_t f = 0; f < npoints_; ++f) {
      int j = static_cast<int>((f / stride[axis]) % n_);
      double w;
      if (n_ % 2 == 0 && j == n_ / 2)
        w = 0;  // zero the Nyquist mode: keeps real fields real
      else
        w = 2.0 * std::numbers::pi * mode_freq(j, n_);
      // multiply by i*w, folding in the inverse-transform normalization
      double re = saved[f].real(), im = saved[f].imag();
      impl_->modes[f][0] = -w * im * norm;
      impl_->modes[f][1] = w * re * norm;
    }
    fftw_execute(impl_->bwd);
    const auto* res = reinterpret_cast<const std::complex<double>*>(impl_->buf);
    std::copy(res, res + npoints_, outs[axis]);
  }
}

std::size_t FftGrid::mode_index(const std::vector<int>& k) const {
  if (static_cast<int>(k.size()) != nvars_)
    throw std::invalid_argument("fft grid: mode arity");
  std::size_t flat = 0;
  for (int axis = 0; axis < nvars_; ++axis) {
    int j = k[axis] % n_;
    if (j < 0) j += n_;
    flat = flat * static_cast<std::size_t>(n_) + static_cast<std::size_t>(j);
  }
  return flat;
}

void FftGrid::synthesize(const std::complex<double>* modes,
                         std::complex<double>* out) const {
  std::copy(modes, modes + npoints_,
            reinterpret_cast<std::complex<double>*>(impl_->modes));
  fftw_execute(impl_->bwd);
  const auto* res = reinterpret_cast<const std::complex<double>*>(impl_->buf);
  std::copy(res, res + npoints_, out);
}

void FftGrid::project_nyquist_free(std::complex<double>* field) const {
  if (n_ % 2 != 0) return;  // odd grids have no Nyquist mode
  std::copy(field, field + npoints_,
            reinterpret_cast<std::complex<double>*>(impl_->buf));
  fftw_execute(impl_->fwd);
  const double norm = 1.0 / static_cast<double>(npoints_);
  for (std::size_t f = 0; f < npoints_; ++f) {
    std::size_t rest = f;
    bool hit = false;
    for (int axis = nvars_ - 1; axis >= 0; --axis) {
      if (static_cast<int>(rest % n_) == n_ / 2) { hit = true; break; }
      rest /= n_;
    }
    double scale = hit ? 0.0 : norm;
    impl_->modes[f][0] *= scale;
    impl_->modes[f][1] *= scale;
  }
  fftw_execute(impl_->bwd);
  const auto* res = reinterpret_cast<const std::complex<double>*>(impl_->buf);
  std::copy(res, res + npoints_, field);
}

void FftGrid::derivative(int axis, const std::complex<double>* in,
                         std::complex<double>* out) const {
  if (axis < 0 || axis >= nvars_)
    throw std::invalid_argument("fft grid: derivative axis");
  std::vector<std::complex<double>*> outs(nvars_, nullptr);
  outs[axis] = out;
  gradient(in, outs);
}

void FftGrid::derivative_real(int axis, const double* in, double* out) const {
  std::vector<std::complex<double>> tmp(npoints_);
  for (std::size_t f = 0; f < npoints_; ++f) tmp[f] = in[f];
  derivative(axis, tmp.data(), tmp.data());
  for (std::size_t f = 0; f < npoints_; ++f) out[f] = tmp[f].real();
}

}  // namespace folia
