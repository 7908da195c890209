#include "folia/grid_cache.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "folia/fft_grid.hpp"

namespace folia {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

std::string point_label(const std::vector<double>& x) {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < x.size(); ++i)
    os << (i ? "," : "") << format_double(x[i]);
  os << ")";
  return os.str();
}

// metric entries with exact first and second derivatives, expanded over a
// shared table of distinct frequencies so each grid point needs one
// sin/cos evaluation per frequency
struct PreparedField {
  struct T {
    int slot;
    double a, b;  // cos and sin coefficients
  };
  std::vector<T> terms;
  double eval(const std::vector<double>& c, const std::vector<double>& s) const {
    double acc = 0;
    for (const auto& t : terms) acc += t.a * c[t.slot] + t.b * s[t.slot];
    return acc;
  }
};

struct PreparedMetric {
  int p = 0, q = 0, n = 0;
  double inv_eps = 1;
  std::vector<std::vector<int>> freqs;
  struct Entry {
    PreparedField v;
    std::vector<PreparedField> d1;  // n
    std::vector<PreparedField> d2;  // n*n
  };
  std::vector<Entry> ef, ep;

  std::map<std::vector<int>, int> slot_map;
  PreparedField compile(const TrigPolyField& f) {
    PreparedField out;
    for (const auto& t : f.terms()) {
      auto [it, inserted] = slot_map.try_emplace(t.freq, (int)freqs.size());
      if (inserted) freqs.push_back(t.freq);
      out.terms.push_back({it->second, t.cos_coeff, t.sin_coeff});
    }
    return out;
  }
  Entry compile_entry(const TrigPolyField& f) {
    Entry e;
    e.v = compile(f);
    e.d1.resize(n);
    e.d2.resize(n * n);
    for (int a = 0; a < n; ++a) {
      TrigPolyField da = f.derivative(a);
      e.d1[a] = compile(da);
      for (int b = 0; b < n; ++b) e.d2[a * n + b] = compile(da.derivative(b));
    }
    return e;
  }
};

PreparedMetric prepare_metric(const CoordFoliatedTorus& m) {
  PreparedMetric pm;
  pm.p = m.p;
  pm.q = m.q;
  pm.n = m.n();
  pm.inv_eps = 1.0 / m.epsilon;
  for (const auto& f : m.gf) pm.ef.push_back(pm.compile_entry(f));
  for (const auto& f : m.gp) pm.ep.push_back(pm.compile_entry(f));
  return pm;
}

// Levi-Civita data of a metric block from pointwise exact derivative values
struct LCData {
  int d = 0;
  MatrixXd gi;
  std::vector<double> gamma;   // [l][m][n] = Gamma^l_{mn}
  std::vector<double> dgamma;  // [k][l][m][n] = d_k Gamma^l_{mn}

  double g_at(int l, int m, int n_) const {
    return gamma[(l * d + m) * d + n_];
  }
  double dg_at(int k, int l, int m, int n_) const {
    return dgamma[((k * d + l) * d + m) * d + n_];
  }

  void build(const MatrixXd& g, const std::vector<MatrixXd>& dg,
             const std::vector<MatrixXd>& d2g) {
    gi = g.inverse();
    gamma.assign((std::size_t)d * d * d, 0.0);
    dgamma.assign((std::size_t)d * d * d * d, 0.0);
    std::vector<MatrixXd> dgi(d);
    for (int k = 0; k < d; ++k) dgi[k] = -gi * dg[k] * gi;
    for (int l = 0; l < d; ++l)
      for (int mu = 0; mu < d; ++mu)
        for (int nu = 0; nu < d; ++nu) {
          double acc = 0;
          for (int r = 0; r < d; ++r)
            acc += gi(l, r) *
                   (dg[mu](r, nu) + dg[nu](r, mu) - dg[r](mu, nu));
          gamma[(l * d + mu) * d + nu] = 0.5 * acc;
          for (int k = 0; k < d; ++k) {
            double dacc = 0;
            for (int r = 0; r < d; ++r) {
              dacc += dgi[k](l, r) *
                      (dg[mu](r, nu) + dg[nu](r, mu) - dg[r](mu, nu));
              dacc += gi(l, r) * (d2g[k * d + mu](r, nu) +
                                  d2g[k * d + nu](r, mu) -
                                  d2g[k * d + r](mu, nu));
            }
            dgamma[((k * d + l) * d + mu) * d + nu] = 0.5 * dacc;
          }
        }
  }

  // R^l_{r mu nu} for R(d_mu, d_nu) d_r = R^l_{r mu nu} d_l
  double riemann(int l, int r, int mu, int nu) const {
    double acc = dg_at(mu, l, nu, r) - dg_at(nu, l, mu, r);
    for (int s = 0; s < d; ++s)
      acc += g_at(l, mu, s) * g_at(s, nu, r) - g_at(l, nu, s) * g_at(s, mu, r);
    return acc;
  }

  double scalar() const {
    double k = 0;
    for (int r = 0; r < d; ++r)
      for (int nu = 0; nu < d; ++nu) {
        double ric = 0;
        for (int mu = 0; mu < d; ++mu) ric += riemann(mu, r, mu, nu);
        k += gi(r, nu) * ric;
      }
    return k;
  }

  // curvature of the projected connection on the coordinate sub-bundle
  // spanned by axes [lo, hi); kap and lam are absolute coordinate indices
  double bundle_curv(int lo, int hi, int kap, int lam, int mu, int nu) const {
    double acc = dg_at(mu, kap, nu, lam) - dg_at(nu, kap, mu, lam);
    for (int s = lo; s < hi; ++s)
      acc += g_at(kap, mu, s) * g_at(s, nu, lam) -
             g_at(kap, nu, s) * g_at(s, mu, lam);
    return acc;
  }
};

// d(G^{1/2}) via the Sylvester identity dS S + S dS = dG in the eigenbasis,
// and d(G^{-1/2}) = -A dS A
void sqrt_block_derivatives(const Eigen::SelfAdjointEigenSolver<MatrixXd>& es,
                            const MatrixXd& ainv_sqrt, const MatrixXd& dg,
                            MatrixXd& ds, MatrixXd& da) {
  const MatrixXd& u = es.eigenvectors();
  const VectorXd& lam = es.eigenvalues();
  MatrixXd m = u.transpose() * dg * u;
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j)
      m(i, j) /= std::sqrt(lam(i)) + std::sqrt(lam(j));
  ds = u * m * u.transpose();
  da = -ainv_sqrt * ds * ainv_sqrt;
}

struct BlockEval {
  MatrixXd g;                // scaled metric block
  std::vector<MatrixXd> dg;  // n derivative matrices
  std::vector<MatrixXd> d2g; // n*n
  MatrixXd sqrt_g, inv_sqrt; // S and A = S^{-1}
  std::vector<MatrixXd> dinv_sqrt;  // n
  double det = 0;
  double min_eig = 0;
};

void eval_block(const PreparedMetric& pm,
                const std::vector<PreparedMetric::Entry>& entries, int dim,
                double scale, const std::vector<double>& c,
                const std::vector<double>& s, BlockEval& out) {
  int n = pm.n;
  out.g.resize(dim, dim);
  out.dg.assign(n, MatrixXd(dim, dim));
  out.d2g.assign(n * n, MatrixXd(dim, dim));
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) {
      const auto& e = entries[i * dim + j];
      out.g(i, j) = scale * e.v.eval(c, s);
      for (int a = 0; a < n; ++a) {
        out.dg[a](i, j) = scale * e.d1[a].eval(c, s);
        for (int b = 0; b < n; ++b)
          out.d2g[a * n + b](i, j) = scale * e.d2[a * n + b].eval(c, s);
      }
    }
  // symmetrize to remove any roundoff asymmetry
  out.g = 0.5 * (out.g + out.g.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(out.g);
  out.min_eig = es.eigenvalues().minCoeff();
  if (out.min_eig <= 0) return;
  VectorXd rt = es.eigenvalues().cwiseSqrt();
  out.sqrt_g = es.eigenvectors() * rt.asDiagonal() * es.eigenvectors().transpose();
  out.inv_sqrt = es.eigenvectors() * rt.cwiseInverse().asDiagonal() *
                 es.eigenvectors().transpose();
  out.det = es.eigenvalues().prod();
  out.dinv_sqrt.assign(n, MatrixXd(dim, dim));
  MatrixXd ds(dim, dim);
  for (int a = 0; a < n; ++a)
    sqrt_block_derivatives(es, out.inv_sqrt, out.dg[a], ds, out.dinv_sqrt[a]);
}

}  // namespace

int CoordFoliatedTorus::metric_bandwidth() const {
  int bw = 0;
  for (const auto& f : gf) bw = std::max(bw, f.bandwidth());
  for (const auto& f : gp) bw = std::max(bw, f.bandwidth());
  return bw;
}

CoordFoliatedTorus CoordFoliatedTorus::with_epsilon(double eps) const {
  if (!(eps > 0))
    throw std::invalid_argument("foliated torus: epsilon must be positive");
  CoordFoliatedTorus out = *this;
  out.epsilon = eps;
  return out;
}

CoordFoliatedTorus CoordFoliatedTorus::flat(int p, int q) {
  CoordFoliatedTorus m;
  m.p = p;
  m.q = q;
  m.name = "flat_torus";
  int n = p + q;
  m.gf.assign(p * p, TrigPolyField(n));
  m.gp.assign(q * q, TrigPolyField(n));
  for (int i = 0; i < p; ++i) m.gf_at(i, i) = TrigPolyField::constant(n, 1.0);
  for (int s = 0; s < q; ++s) m.gp_at(s, s) = TrigPolyField::constant(n, 1.0);
  return m;
}

CoordFoliatedTorus CoordFoliatedTorus::sin_warped(int p, int q, double sigma) {
  CoordFoliatedTorus m = flat(p, q);
  m.name = "sin_warped_torus";
  int n = p + q;
  std::vector<int> freq(n, 0);
  freq[0] = 1;
  for (int s = 0; s < q; ++s) m.gp_at(s, s).add_sin(freq, sigma);
  return m;
}

int min_grid_size(const CoordFoliatedTorus& m) {
  return std::max(4, 4 * m.metric_bandwidth() + 1);
}

int GridGeometryCache::pair_index(int mu, int nu, int n) {
  // index of (mu,nu) with mu < nu in lexicographic pair order
  return mu * n - mu * (mu + 1) / 2 + (nu - mu - 1);
}

double GridGeometryCache::curv_f_at(std::size_t pt, int mu, int nu, int i,
                                    int j) const {
  if (mu == nu) return 0;
  double sign = 1;
  if (mu > nu) {
    std::swap(mu, nu);
    sign = -1;
  }
  return sign * curv_f[(pt * npairs() + pair_index(mu, nu, n())) * p * p +
                       i * p + j];
}

double GridGeometryCache::curv_p_at(std::size_t pt, int mu, int nu, int s,
                                    int t) const {
  if (mu == nu) return 0;
  double sign = 1;
  if (mu > nu) {
    std::swap(mu, nu);
    sign = -1;
  }
  return sign * curv_p[(pt * npairs() + pair_index(mu, nu, n())) * q * q +
                       s * q + t];
}

double GridGeometryCache::frame_component(std::size_t pt, int mu, int a) const {
  if (a < p) return mu < p ? frame_f_at(pt, mu, a) : 0.0;
  return mu >= p ? frame_p_at(pt, mu - p, a - p) : 0.0;
}

double GridGeometryCache::frame_conn_at(std::size_t pt, int a, int b,
                                        int c) const {
  double acc = 0;
  if (a < p)
    for (int mu = 0; mu < p; ++mu)
      acc += frame_f_at(pt, mu, a) * conn_at(pt, mu, b, c);
  else
    for (int mu = p; mu < n(); ++mu)
      acc += frame_p_at(pt, mu - p, a - p) * conn_at(pt, mu, b, c);
  return acc;
}

double GridGeometryCache::curv_p_frame_at(std::size_t pt, int a, int b, int s,
                                          int t) const {
  double acc = 0;
  for (int mu = 0; mu < n(); ++mu) {
    double ea = frame_component(pt, mu, a);
    if (ea == 0) continue;
    for (int nu = 0; nu < n(); ++nu) {
      double eb = frame_component(pt, nu, b);
      if (eb == 0) continue;
      acc += ea * eb * curv_p_at(pt, mu, nu, s, t);
    }
  }
  return acc;
}

double GridGeometryCache::curv_f_frame_at(std::size_t pt, int a, int b, int i,
                                          int j) const {
  double acc = 0;
  for (int mu = 0; mu < n(); ++mu) {
    double ea = frame_component(pt, mu, a);
    if (ea == 0) continue;
    for (int nu = 0; nu < n(); ++nu) {
      double eb = frame_component(pt, nu, b);
      if (eb == 0) continue;
      acc += ea * eb * curv_f_at(pt, mu, nu, i, j);
    }
  }
  return acc;
}

double GridGeometryCache::s_tensor_at(std::size_t pt, int a, int b,
                                      int c) const {
  bool b_leaf = b < p, c_leaf = c < p;
  if (b_leaf == c_leaf) return 0.0;
  return frame_conn_at(pt, a, b, c);
}

std::vector<double> GridGeometryCache::grid_coords(std::size_t pt) const {
  std::vector<double> x(n());
  std::size_t f = pt;
  for (int axis = n() - 1; axis >= 0; --axis) {
    x[axis] = static_cast<double>(f % N) / N;
    f /= N;
  }
  return x;
}

GridGeometryCache build_cache(const CoordFoliatedTorus& m, int N) {
  const int p = m.p, q = m.q, n = m.n();
  // the geometry is parity-agnostic; spinor modules enforce their own
  // evenness requirements when an operator is assembled on top of the cache
  if (p < 1 || q < 1)
    throw std::invalid_argument(
        "grid geometry: leaf and transverse dimensions must be >= 1");
  if ((int)m.gf.size() != p * p || (int)m.gp.size() != q * q)
    throw std::invalid_argument("grid geometry: metric block shape mismatch");
  if (!(m.epsilon > 0))
    throw std::invalid_argument("grid geometry: epsilon must be positive");
  if (N < min_grid_size(m)) {
    std::ostringstream os;
    os << "grid geometry: resolution " << N
       << " violates the anti-aliasing rule; need N >= " << min_grid_size(m);
    throw std::invalid_argument(os.str());
  }

  PreparedMetric pm = prepare_metric(m);
  GridGeometryCache c;
  c.p = p;
  c.q = q;
  c.N = N;
  c.epsilon = m.epsilon;
  c.npoints = 1;
  for (int i = 0; i < n; ++i) c.npoints *= (std::size_t)N;
  const std::size_t np = c.npoints;
  const int pairs = c.npairs();
  c.frame_f.resize(np * p * p);
  c.frame_p.resize(np * q * q);
  c.dframe_f.resize(np * n * p * p);
  c.dframe_p.resize(np * n * q * q);
  c.conn.resize(np * n * n * n);
  c.omega.resize(np * p * q * q);
  c.scal.resize(np);
  c.scal_leaf.resize(np);
  c.curv_f.resize(np * pairs * p * p);
  c.curv_p.resize(np * pairs * q * q);
  c.sqrt_det.resize(np);

  const int nfreq = (int)pm.freqs.size();
  std::vector<double> cosv(nfreq), sinv(nfreq);
  BlockEval bf, bp;
  std::vector<MatrixXd> dgfull(n, MatrixXd::Zero(n, n));
  std::vector<MatrixXd> d2gfull(n * n, MatrixXd::Zero(n, n));
  MatrixXd gfull = MatrixXd::Zero(n, n);
  MatrixXd efull = MatrixXd::Zero(n, n);
  std::vector<MatrixXd> defull(n, MatrixXd::Zero(n, n));
  LCData lc, lc_leaf;
  lc.d = n;
  lc_leaf.d = p;
  std::vector<MatrixXd> leaf_dg(p), leaf_d2g(p * p);
  MatrixXd rb, frame_form;

  for (std::size_t pt = 0; pt < np; ++pt) {
    std::vector<double> x = c.grid_coords(pt);
    for (int f = 0; f < nfreq; ++f) {
      double phase = 0;
      for (int i = 0; i < n; ++i) phase += pm.freqs[f][i] * x[i];
      phase *= two_pi;
      cosv[f] = std::cos(phase);
      sinv[f] = std::sin(phase);
    }
    eval_block(pm, pm.ef, p, 1.0, cosv, sinv, bf);
    if (bf.min_eig <= 0)
      throw std::domain_error(
          "grid geometry: leaf metric block not positive definite at " +
          point_label(x));
    eval_block(pm, pm.ep, q, pm.inv_eps, cosv, sinv, bp);
    if (bp.min_eig <= 0)
      throw std::domain_error(
          "grid geometry: transverse metric block not positive definite at " +
          point_label(x));

    // full rescaled metric and its exact derivative values
    gfull.setZero();
    gfull.topLeftCorner(p, p) = bf.g;
    gfull.bottomRightCorner(q, q) = bp.g;
    for (int a = 0; a < n; ++a) {
      dgfull[a].setZero();
      dgfull[a].topLeftCorner(p, p) = bf.dg[a];
      dgfull[a].bottomRightCorner(q, q) = bp.dg[a];
      for (int b = 0; b < n; ++b) {
        d2gfull[a * n + b].setZero();
        d2gfull[a * n + b].topLeftCorner(p, p) = bf.d2g[a * n + b];
        d2gfull[a * n + b].bottomRightCorner(q, q) = bp.d2g[a * n + b];
      }
    }
    lc.build(gfull, dgfull, d2gfull);
    c.scal[pt] = lc.scalar();

    // leafwise curvature: GF along leaf coordinates only
    for (int a = 0; a < p; ++a) {
      leaf_dg[a] = bf.dg[a];
      for (int b = 0; b < p; ++b) leaf_d2g[a * p + b] = bf.d2g[a * n + b];
    }
    lc_leaf.build(bf.g, leaf_dg, leaf_d2g);
    c.scal_leaf[pt] = lc_leaf.scalar();

    // orthonormal frames and their pointwise-exact derivatives
    efull.setZero();
    efull.topLeftCorner(p, p) = bf.inv_sqrt;
    efull.bottomRightCorner(q, q) = bp.inv_sqrt;
    for (int a = 0; a < n; ++a) {
      defull[a].setZero();
      defull[a].topLeftCorner(p, p) = bf.dinv_sqrt[a];
      defull[a].bottomRightCorner(q, q) = bp.dinv_sqrt[a];
    }
    for (int mu = 0; mu < p; ++mu)
      for (int i = 0; i < p; ++i)
        c.frame_f[(pt * p + mu) * p + i] = bf.inv_sqrt(mu, i);
    for (int k = 0; k < q; ++k)
      for (int s = 0; s < q; ++s)
        c.frame_p[(pt * q + k) * q + s] = bp.inv_sqrt(k, s);
    for (int a = 0; a < n; ++a) {
      for (int mu = 0; mu < p; ++mu)
        for (int i = 0; i < p; ++i)
          c.dframe_f[((pt * n + a) * p + mu) * p + i] = bf.dinv_sqrt[a](mu, i);
      for (int k = 0; k < q; ++k)
        for (int s = 0; s < q; ++s)
          c.dframe_p[((pt * n + a) * q + k) * q + s] = bp.dinv_sqrt[a](k, s);
    }

    // connection matrices <nabla_{dx_mu} E_b, E_c> in the orthonormal frame
    MatrixXd w = gfull * efull;  // pairing helper: w(lambda, c)
    for (int mu = 0; mu < n; ++mu) {
      for (int b = 0; b < n; ++b) {
        for (int cc = 0; cc < n; ++cc) {
          double acc = 0;
          for (int lam = 0; lam < n; ++lam) {
            double cov = defull[mu](lam, b);
            for (int nu = 0; nu < n; ++nu)
              cov += efull(nu, b) * lc.g_at(lam, mu, nu);
            acc += cov * w(lam, cc);
          }
          c.conn[((pt * n + mu) * n + b) * n + cc] = acc;
        }
      }
    }

    // omega(dx_i) in the orthonormal transverse frame: A (d_i GP) A
    for (int i = 0; i < p; ++i) {
      MatrixXd wi = bp.inv_sqrt * bp.dg[i] * bp.inv_sqrt;
      for (int s = 0; s < q; ++s)
        for (int t = 0; t < q; ++t)
          c.omega[((pt * p + i) * q + s) * q + t] = wi(s, t);
    }

    // projected-bundle curvature forms in the orthonormal frames
    for (int mu = 0; mu < n; ++mu)
      for (int nu = mu + 1; nu < n; ++nu) {
        int pr = GridGeometryCache::pair_index(mu, nu, n);
        rb.resize(p, p);
        for (int kap = 0; kap < p; ++kap)
          for (int lam = 0; lam < p; ++lam)
            rb(kap, lam) = lc.bundle_curv(0, p, kap, lam, mu, nu);
        frame_form = bf.inv_sqrt.transpose() * rb.transpose() * bf.sqrt_g;
        for (int i = 0; i < p; ++i)
          for (int j = 0; j < p; ++j)
            c.curv_f[(pt * pairs + pr) * p * p + i * p + j] =
                frame_form(i, j);
        rb.resize(q, q);
        for (int kap = 0; kap < q; ++kap)
          for (int lam = 0; lam < q; ++lam)
            rb(kap, lam) = lc.bundle_curv(p, n, p + kap, p + lam, mu, nu);
        frame_form = bp.inv_sqrt.transpose() * rb.transpose() * bp.sqrt_g;
        for (int s = 0; s < q; ++s)
          for (int t = 0; t < q; ++t)
            c.curv_p[(pt * pairs + pr) * q * q + s * q + t] =
                frame_form(s, t);
      }

    c.sqrt_det[pt] = std::sqrt(bf.det * bp.det);
  }
  return c;
}

SampledScalarField scalar_curvature_eps(const GridGeometryCache& c) {
  SampledScalarField f;
  f.N = c.N;
  f.values = &c.scal;
  f.min_value = *std::min_element(c.scal.begin(), c.scal.end());
  return f;
}

SampledScalarField leaf_scalar_curvature(const GridGeometryCache& c) {
  SampledScalarField f;
  f.N = c.N;
  f.values = &c.scal_leaf;
  f.min_value = *std::min_element(c.scal_leaf.begin(), c.scal_leaf.end());
  return f;
}

namespace {

// max over unit u of sqrt(sum_i (u^T W_i u)^2); exact directional scan plus
// golden-section refinement for q = 2, projected gradient ascent otherwise
double omega_direction_norm(const std::vector<MatrixXd>& w, int q) {
  auto value = [&](const VectorXd& u) {
    double acc = 0;
    for (const auto& wi : w) {
      double v = u.dot(wi * u);
      acc += v * v;
    }
    return acc;
  };
  if (q == 2) {
    auto fval = [&](double th) {
      VectorXd u(2);
      u << std::cos(th), std::sin(th);
      return value(u);
    };
    int best = 0;
    double bestv = -1;
    const int scan = 256;
    for (int k = 0; k < scan; ++k) {
      double v = fval(std::numbers::pi * k / scan);
      if (v > bestv) {
        bestv = v;
        best = k;
      }
    }
    double lo = std::numbers::pi * (best - 1) / scan;
    double hi = std::numbers::pi * (best + 1) / scan;
    const double gr = (std::sqrt(5.0) - 1) / 2;
    double a = hi - gr * (hi - lo), b = lo + gr * (hi - lo);
    double fa = fval(a), fb = fval(b);
    for (int it = 0; it < 80; ++it) {
      if (fa < fb) {
        lo = a;
        a = b;
        fa = fb;
        b = lo + gr * (hi - lo);
        fb = fval(b);
      } else {
        hi = b;
        b = a;
        fb = fa;
        a = hi - gr * (hi - lo);
        fa = fval(a);
      }
    }
    return std::sqrt(std::max(bestv, std::max(fa, fb)));
  }
  // deterministic multi-start ascent
  std::vector<VectorXd> starts;
  for (int i = 0; i < q; ++i) starts.push_back(VectorXd::Unit(q, i));
  MatrixXd acc = MatrixXd::Zero(q, q);
  for (const auto& wi : w) acc += wi * wi;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(acc);
  for (int i = 0; i < q; ++i) starts.push_back(es.eigenvectors().col(i));
  double best = 0;
  for (auto u : starts) {
    u.normalize();
    double f = value(u);
    for (int it = 0; it < 200; ++it) {
      VectorXd grad = VectorXd::Zero(q);
      for (const auto& wi : w) grad += 4.0 * u.dot(wi * u) * (wi * u);
      grad -= grad.dot(u) * u;  // project to the sphere tangent
      if (grad.norm() < 1e-14) break;
      double step = 0.5;
      VectorXd cand;
      double fc = f;
      for (int bt = 0; bt < 40; ++bt) {
        cand = (u + step * grad).normalized();
        fc = value(cand);
        if (fc > f) break;
        step *= 0.5;
      }
      if (fc <= f) break;
      u = cand;
      f = fc;
    }
    best = std::max(best, f);
  }
  return std::sqrt(best);
}

}  // namespace

double omega_sup_norm(const GridGeometryCache& c) {
  const int p = c.p, q = c.q;
  double sup = 0;
  std::vector<MatrixXd> wcoord(p, MatrixXd(q, q));
  std::vector<MatrixXd> wframe(p, MatrixXd(q, q));
  for (std::size_t pt = 0; pt < c.npoints; ++pt) {
    for (int i = 0; i < p; ++i)
      for (int s = 0; s < q; ++s)
        for (int t = 0; t < q; ++t) wcoord[i](s, t) = c.omega_at(pt, i, s, t);
    for (int i = 0; i < p; ++i) {
      wframe[i].setZero();
      for (int mu = 0; mu < p; ++mu) {
        double e = c.frame_f_at(pt, mu, i);
        if (e != 0) wframe[i] += e * wcoord[mu];
      }
    }
    sup = std::max(sup, omega_direction_norm(wframe, q));
  }
  return sup;
}

CheckReport verify_grid_geometry(const CoordFoliatedTorus& m, int N) {
  CheckReport rep;
  rep.suite = "grid_geometry";
  rep.model = m.name + "/N=" + std::to_string(N) +
              "/eps=" + format_double(m.epsilon);
  GridGeometryCache c = build_cache(m, N);
  const int p = c.p, q = c.q, n = c.n();

  // frame factorization: E^T g E = identity on both blocks, with the metric
  // evaluated directly from the model for independence from the cache
  double worst_frame = 0;
  {
    MatrixXd gf(p, p), gp(q, q), ef(p, p), ep(q, q);
    for (std::size_t pt = 0; pt < c.npoints; ++pt) {
      std::vector<double> x = c.grid_coords(pt);
      for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) gf(i, j) = m.gf_at(i, j).eval(x);
      for (int s = 0; s < q; ++s)
        for (int t = 0; t < q; ++t)
          gp(s, t) = m.gp_at(s, t).eval(x) / m.epsilon;
      for (int mu = 0; mu < p; ++mu)
        for (int i = 0; i < p; ++i) ef(mu, i) = c.frame_f_at(pt, mu, i);
      for (int k = 0; k < q; ++k)
        for (int s = 0; s < q; ++s) ep(k, s) = c.frame_p_at(pt, k, s);
      worst_frame = std::max(
          worst_frame,
          (ef.transpose() * gf * ef - MatrixXd::Identity(p, p))
              .cwiseAbs()
              .maxCoeff());
      worst_frame = std::max(
          worst_frame,
          (ep.transpose() * gp * ep - MatrixXd::Identity(q, q))
              .cwiseAbs()
              .maxCoeff());
    }
  }
  rep.add("frame_factorization", rep.model, worst_frame <= 1e-12,
           "max |E^T g E - I| = " + format_double(worst_frame));

  // Fourier differentiation agrees with the exact symbolic derivative
  {
    FftGrid fft(n, N);
    std::vector<std::complex<double>> buf(c.npoints), dbuf(c.npoints);
    double worst = 0;
    auto check_field = [&](const TrigPolyField& f) {
      for (std::size_t pt = 0; pt < c.npoints; ++pt)
        buf[pt] = f.eval(c.grid_coords(pt));
      for (int axis = 0; axis < n; ++axis) {
        TrigPolyField df = f.derivative(axis);
        fft.derivative(axis, buf.data(), dbuf.data());
        for (std::size_t pt = 0; pt < c.npoints; ++pt) {
          double exact = df.eval(c.grid_coords(pt));
          worst = std::max(worst, std::abs(dbuf[pt].real() - exact));
          worst = std::max(worst, std::abs(dbuf[pt].imag()));
        }
      }
    };
    for (const auto& f : m.gf) check_field(f);
    for (const auto& f : m.gp) check_field(f);
    rep.add("fourier_derivative_match", rep.model, worst <= 1e-12,
             "max |spectral - exact| = " + format_double(worst));
  }

  // Koszul output: metric compatibility in the orthonormal frame
  double worst_compat = 0;
  for (std::size_t pt = 0; pt < c.npoints; ++pt)
    for (int mu = 0; mu < n; ++mu)
      for (int b = 0; b < n; ++b)
        for (int cc = b; cc < n; ++cc)
          worst_compat =
              std::max(worst_compat, std::abs(c.conn_at(pt, mu, b, cc) +
                                              c.conn_at(pt, mu, cc, b)));
  rep.add("koszul_metric_compatibility", rep.model, worst_compat <= 1e-10,
           "max |<nabla E_b,E_c> + <E_b,nabla E_c>| = " +
               format_double(worst_compat));

  // torsion-freeness against an independent bracket computation
  double worst_torsion = 0;
  {
    MatrixXd g(n, n), e(n, n);
    std::vector<MatrixXd> de(n, MatrixXd(n, n));
    for (std::size_t pt = 0; pt < c.npoints; ++pt) {
      g.setZero();
      e.setZero();
      std::vector<double> x = c.grid_coords(pt);
      for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) g(i, j) = m.gf_at(i, j).eval(x);
      for (int s = 0; s < q; ++s)
        for (int t = 0; t < q; ++t)
          g(p + s, p + t) = m.gp_at(s, t).eval(x) / m.epsilon;
      for (int mu = 0; mu < n; ++mu)
        for (int a = 0; a < n; ++a) e(mu, a) = c.frame_component(pt, mu, a);
      for (int nu = 0; nu < n; ++nu) {
        de[nu].setZero();
        for (int mu = 0; mu < p; ++mu)
          for (int i = 0; i < p; ++i)
            de[nu](mu, i) = c.dframe_f_at(pt, nu, mu, i);
        for (int k = 0; k < q; ++k)
          for (int s = 0; s < q; ++s)
            de[nu](p + k, p + s) = c.dframe_p_at(pt, nu, k, s);
      }
      for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b)
          for (int cc = 0; cc < n; ++cc) {
            double bracket = 0;
            for (int lam = 0; lam < n; ++lam) {
              double blam = 0;
              for (int mu = 0; mu < n; ++mu)
                blam += e(mu, a) * de[mu](lam, b) - e(mu, b) * de[mu](lam, a);
              double pair = 0;
              for (int kap = 0; kap < n; ++kap)
                pair += g(lam, kap) * e(kap, cc);
              bracket += blam * pair;
            }
            double resid = c.frame_conn_at(pt, a, b, cc) -
                           c.frame_conn_at(pt, b, a, cc) - bracket;
            worst_torsion = std::max(worst_torsion, std::abs(resid));
          }
    }
  }
  rep.add("koszul_torsion_free", rep.model, worst_torsion <= 1e-10,
           "max |nabla_a E_b - nabla_b E_a - [E_a,E_b]| = " +
               format_double(worst_torsion));

  // omega from the metric derivative vs the Koszul second fundamental form
  double worst_omega = 0;
  for (std::size_t pt = 0; pt < c.npoints; ++pt)
    for (int i = 0; i < p; ++i)
      for (int s = 0; s < q; ++s)
        for (int t = 0; t < q; ++t) {
          double wfr = 0;
          for (int mu = 0; mu < p; ++mu)
            wfr += c.frame_f_at(pt, mu, i) * c.omega_at(pt, mu, s, t);
          double koszul = -c.frame_conn_at(pt, p + s, p + t, i) -
                          c.frame_conn_at(pt, p + t, p + s, i);
          worst_omega = std::max(worst_omega, std::abs(wfr - koszul));
        }
  rep.add("omega_koszul_consistency", rep.model, worst_omega <= 1e-10,
           "max |omega(f_i) - Koszul form| = " + format_double(worst_omega));

  return rep;
}

GapProbeReport gap_inequality_probe(
    const std::function<CoordFoliatedTorus(double)>& family,
    const std::vector<double>& sigmas, const std::vector<double>& eps_list,
    int N) {
  GapProbeReport rep;
  for (double sigma : sigmas) {
    CoordFoliatedTorus base = family(sigma);
    for (double eps : eps_list) {
      GridGeometryCache c = build_cache(base.with_epsilon(eps), N);
      GapProbeRow row;
      row.sigma = sigma;
      row.epsilon = eps;
      row.N = N;
      row.min_kf = leaf_scalar_curvature(c).min_value;
      row.min_k_eps = scalar_curvature_eps(c).min_value;
      row.omega_norm = omega_sup_norm(c);
      rep.rows.push_back(row);
    }
  }
  // fitted constant: worst curvature deficit per unit omega, per epsilon
  std::map<double, double> per_eps;
  for (const auto& r : rep.rows) {
    if (r.omega_norm < 1e-14) continue;
    double deficit = std::max(0.0, r.min_kf - r.min_k_eps);
    double ratio = deficit / r.omega_norm;
    auto it = per_eps.try_emplace(r.epsilon, 0.0).first;
    it->second = std::max(it->second, ratio);
    rep.fitted_c = std::max(rep.fitted_c, ratio);
  }
  for (const auto& [eps, cval] : per_eps)
    rep.fitted_c_per_eps.emplace_back(eps, cval);
  if (per_eps.size() >= 2) {
    double lo = per_eps.begin()->second, hi = lo;
    for (const auto& [eps, cval] : per_eps) {
      lo = std::min(lo, cval);
      hi = std::max(hi, cval);
    }
    rep.c_stability_ratio = lo > 0 ? hi / lo : (hi > 0 ? 1e300 : 1.0);
  }
  // qualitative pattern: the deficit shrinks with sigma for every epsilon,
  // and every row satisfies the inequality with the fitted constant
  bool holds = true;
  for (double eps : eps_list) {
    std::vector<std::pair<double, double>> by_sigma;  // (sigma, deficit)
    for (const auto& r : rep.rows)
      if (r.epsilon == eps)
        by_sigma.emplace_back(r.sigma,
                              std::max(0.0, r.min_kf - r.min_k_eps));
    std::sort(by_sigma.begin(), by_sigma.end());
    for (std::size_t i = 1; i < by_sigma.size(); ++i)
      if (by_sigma[i - 1].second > by_sigma[i].second * 1.05 + 1e-9)
        holds = false;
  }
  for (const auto& r : rep.rows)
    if (r.min_k_eps < r.min_kf - rep.fitted_c * r.omega_norm - 1e-9)
      holds = false;
  rep.pattern_holds = holds;
  return rep;
}

}  // namespace folia
