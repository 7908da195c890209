#include "folia/lanczos.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>

#include "folia/fft_grid.hpp"

namespace folia {

namespace {

using Eigen::VectorXcd;

// the weight-symmetrized, band-projected operator and its vector space
struct BandProblem {
  const GridGeometryCache* cache;
  const LinearOperatorHandle* op;
  FftGrid grid;
  int d;
  std::size_t np, dim;
  std::vector<double> sw;  // sqrt of the volume weight per point
  mutable std::vector<std::complex<double>> scratch;
  mutable long applies = 0;

  BandProblem(const GridGeometryCache& c, const LinearOperatorHandle& o)
      : cache(&c), op(&o), grid(o.nvars, o.grid_size),
        d(o.fiber_dim), np(c.npoints),
        dim(c.npoints * static_cast<std::size_t>(o.fiber_dim)),
        sw(c.npoints), scratch(c.npoints) {
    const double cell = 1.0 / static_cast<double>(np);
    for (std::size_t pt = 0; pt < np; ++pt)
      sw[pt] = std::sqrt(cache->sqrt_det[pt] * cell);
  }

  int band() const { return (op->grid_size - 1) / 2; }
  std::size_t band_dim() const {
    std::size_t b = 1;
    for (int i = 0; i < op->nvars; ++i)
      b *= static_cast<std::size_t>(2 * band() + 1);
    return b * static_cast<std::size_t>(d);
  }

  // y = P W^{1/2} A W^{-1/2} x for x supported on the Nyquist-free band
  void apply(const VectorXcd& x, VectorXcd& y) const {
    ++applies;
    FiberSectionGrid u =
        FiberSectionGrid::zero(op->nvars, op->grid_size, d);
    for (std::size_t pt = 0; pt < np; ++pt) {
      const double inv = 1.0 / sw[pt];
      for (int c = 0; c < d; ++c)
        u.values[pt * d + c] = x[static_cast<long>(pt * d + c)] * inv;
    }
    FiberSectionGrid v = op->apply(u);
    for (std::size_t pt = 0; pt < np; ++pt)
      for (int c = 0; c < d; ++c) v.values[pt * d + c] *= sw[pt];
    auto* scr = scratch.data();
    y.resize(static_cast<long>(dim));
    for (int c = 0; c < d; ++c) {
      for (std::size_t pt = 0; pt < np; ++pt) scr[pt] = v.values[pt * d + c];
      grid.project_nyquist_free(scr);
      for (std::size_t pt = 0; pt < np; ++pt)
        y[static_cast<long>(pt * d + c)] = scr[pt];
    }
  }

  VectorXcd random_start(std::uint64_t seed) const {
    FiberSectionGrid s = random_bandlimited_section(
        op->nvars, op->grid_size, d, band(), seed);
    return Eigen::Map<const VectorXcd>(s.values.data(),
                                       static_cast<long>(dim));
  }

  // re-enforce the band-subspace invariant; without this, rounding noise in
  // the exact kernel of the projected operator is amplified by the
  // three-term recurrence until spurious zero modes dominate
  void project(VectorXcd& x) const {
    auto* scr = scratch.data();
    for (int c = 0; c < d; ++c) {
      for (std::size_t pt = 0; pt < np; ++pt)
        scr[pt] = x[static_cast<long>(pt * d + c)];
      grid.project_nyquist_free(scr);
      for (std::size_t pt = 0; pt < np; ++pt)
        x[static_cast<long>(pt * d + c)] = scr[pt];
    }
  }
};

void orthogonalize(VectorXcd& w, const std::vector<VectorXcd>& basis) {
  for (int pass = 0; pass < 2; ++pass)
    for (const VectorXcd& b : basis) w -= b.dot(w) * b;
}

std::vector<double> dense_band_spectrum(const BandProblem& pr, int count) {
  const int nv = pr.op->nvars, d = pr.d;
  const int b = pr.band();
  const std::size_t bdim = pr.band_dim();
  const double rt = std::sqrt(static_cast<double>(pr.np));

  // enumerate the plane-wave basis
  std::vector<std::vector<int>> freqs;
  std::vector<int> k(nv, -b);
  while (true) {
    freqs.push_back(k);
    int axis = nv - 1;
    while (axis >= 0 && ++k[axis] > b) k[axis--] = -b;
    if (axis < 0) break;
  }

  Eigen::MatrixXcd B(bdim, bdim);
  std::vector<std::complex<double>> modes(pr.np), field(pr.np);
  std::vector<std::complex<double>> rfield(pr.np), rmodes(pr.np);
  VectorXcd x(static_cast<long>(pr.dim)), y;
  long col = 0;
  for (const auto& kf : freqs) {
    std::fill(modes.begin(), modes.end(), std::complex<double>(0.0));
    modes[pr.grid.mode_index(kf)] = 1.0 / rt;
    pr.grid.synthesize(modes.data(), field.data());
    for (int c = 0; c < d; ++c, ++col) {
      x.setZero();
      for (std::size_t pt = 0; pt < pr.np; ++pt)
        x[static_cast<long>(pt * d + c)] = field[pt];
      pr.apply(x, y);
      // band coefficients of each component, one transform per component;
      // the forward transform is the conjugate of synthesize on conjugated
      // data, which avoids a second FFTW plan set
      for (int cc = 0; cc < d; ++cc) {
        for (std::size_t pt = 0; pt < pr.np; ++pt)
          rfield[pt] = std::conj(y[static_cast<long>(pt * d + cc)]);
        pr.grid.synthesize(rfield.data(), rmodes.data());
        for (std::size_t fi = 0; fi < freqs.size(); ++fi)
          B(static_cast<long>(fi) * d + cc, col) =
              std::conj(rmodes[pr.grid.mode_index(freqs[fi])]) / rt;
      }
    }
  }
  B = 0.5 * (B + B.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(B);
  std::vector<double> out;
  for (int i = 0; i < count && i < static_cast<int>(bdim); ++i)
    out.push_back(es.eigenvalues()[i]);
  return out;
}

}  // namespace

std::vector<double> low_spectrum(const GridGeometryCache& cache,
                                 const LinearOperatorHandle& op,
                                 const SpectrumOptions& opt) {
  if (opt.count < 1) throw std::invalid_argument("spectrum: count < 1");
  BandProblem pr(cache, op);
  if (pr.band_dim() <= opt.dense_cutoff)
    return dense_band_spectrum(pr, opt.count);

  std::vector<VectorXcd> locked_vecs;
  std::vector<double> locked_vals;
  const int max_sweeps = opt.restarts + opt.count;
  VectorXcd warm;
  bool have_warm = false;

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    if (static_cast<int>(locked_vals.size()) >= opt.count) break;
    VectorXcd v0 = have_warm
                       ? warm
                       : pr.random_start(opt.seed + 1000u * sweep);
    have_warm = false;
    orthogonalize(v0, locked_vecs);
    double nrm = v0.norm();
    if (nrm < 1e-12) continue;
    v0 /= nrm;

    const long room = static_cast<long>(pr.band_dim()) -
                      static_cast<long>(locked_vecs.size());
    const int m = static_cast<int>(
        std::min<long>(opt.max_iter, std::max<long>(room, 1)));
    std::vector<VectorXcd> V;
    V.reserve(m);
    V.push_back(v0);
    Eigen::VectorXd alpha(m), beta(m);
    int steps = 0;
    VectorXcd w;
    for (int j = 0; j < m; ++j) {
      pr.apply(V[j], w);
      alpha[j] = w.dot(V[j]).real();
      w -= alpha[j] * V[j];
      if (j > 0) w -= beta[j - 1] * V[j - 1];
      orthogonalize(w, locked_vecs);
      orthogonalize(w, V);
      pr.project(w);
      beta[j] = w.norm();
      steps = j + 1;
      if (beta[j] < 1e-12) break;
      if (j + 1 < m) V.push_back(w / beta[j]);
    }

    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(steps, steps);
    for (int j = 0; j < steps; ++j) {
      T(j, j) = alpha[j];
      if (j + 1 < steps) T(j, j + 1) = T(j + 1, j) = beta[j];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);

    // lock the ascending prefix of converged Ritz pairs
    bool locked_any = false;
    for (int idx = 0; idx < steps; ++idx) {
      const double theta = es.eigenvalues()[idx];
      VectorXcd x = VectorXcd::Zero(static_cast<long>(pr.dim));
      for (int j = 0; j < steps; ++j) x += es.eigenvectors()(j, idx) * V[j];
      orthogonalize(x, locked_vecs);
      pr.project(x);
      const double xn = x.norm();
      if (xn < 0.5) continue;  // collapsed onto the locked span
      x /= xn;
      pr.apply(x, w);
      const double res = (w - theta * x).norm();
      if (res <= opt.tol * std::max(1.0, std::abs(theta))) {
        locked_vecs.push_back(x);
        locked_vals.push_back(theta);
        locked_any = true;
        if (static_cast<int>(locked_vals.size()) >= opt.count) break;
      } else {
        warm = x;
        have_warm = true;
        break;
      }
    }
    (void)locked_any;
  }

  if (static_cast<int>(locked_vals.size()) < opt.count)
    throw std::runtime_error("spectrum: iteration budget exhausted");
  std::sort(locked_vals.begin(), locked_vals.end());
  locked_vals.resize(opt.count);
  return locked_vals;
}

}  // namespace folia
