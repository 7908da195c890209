#include "folia/operators.hpp"

#include <cmath>
#include <memory>
#include <numbers>
#include <random>
#include <stdexcept>
#include <utility>

#include "folia/fft_grid.hpp"

namespace folia {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// ---------------------------------------------------------------------
// unit-sparse matrices: every Clifford generator and most products of
// generators have at most one entry per row, so coefficient-weighted
// accumulation touches d entries instead of d^2

struct SPerm {
  std::vector<int> col;                   // -1 marks an empty row
  std::vector<std::complex<double>> val;
};

bool to_sperm(const CMat& m, SPerm& out) {
  const int d = static_cast<int>(m.rows());
  out.col.assign(d, -1);
  out.val.assign(d, 0.0);
  for (int r = 0; r < d; ++r) {
    for (int c = 0; c < d; ++c) {
      if (std::abs(m(r, c)) < 1e-300) continue;
      if (out.col[r] >= 0) return false;
      out.col[r] = c;
      out.val[r] = m(r, c);
    }
  }
  return true;
}

// a constant matrix scaled pointwise by one scalar coefficient
struct Term {
  int coeff = 0;  // index into the per-point coefficient scratch
  bool sparse = false;
  SPerm sp;
  CMat dense;
};

void add_term(std::vector<Term>& terms, int coeff, const CMat& m) {
  if (m.cwiseAbs().maxCoeff() < 1e-300) return;
  Term t;
  t.coeff = coeff;
  t.dense = m;
  t.sparse = to_sperm(m, t.sp);
  terms.push_back(std::move(t));
}

void accumulate(CMat& z, const Term& t, double c) {
  if (c == 0.0) return;
  if (t.sparse) {
    const int d = static_cast<int>(z.rows());
    for (int r = 0; r < d; ++r)
      if (t.sp.col[r] >= 0) z(r, t.sp.col[r]) += c * t.sp.val[r];
  } else {
    z += c * t.dense;
  }
}

void accumulate_table(CMat& z, const std::vector<Term>& terms,
                      const std::vector<double>& coeffs, double weight = 1.0) {
  for (const Term& t : terms) accumulate(z, t, weight * coeffs[t.coeff]);
}

// y += m u for a unit-sparse m
void sperm_mv_add(const SPerm& m, const std::complex<double>* u,
                  std::complex<double>* y, int d) {
  for (int r = 0; r < d; ++r)
    if (m.col[r] >= 0) y[r] += m.val[r] * u[m.col[r]];
}

// ---------------------------------------------------------------------
// coefficient bookkeeping

inline int fc_index(int a, int b, int c, int n) { return (a * n + b) * n + c; }

// per-point frame-direction Christoffel scratch fc[a][b][c]
void fill_frame_conn(const GridGeometryCache& cache, std::size_t pt,
                     std::vector<double>& fc) {
  const int n = cache.n();
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        fc[fc_index(a, b, c, n)] = cache.frame_conn_at(pt, a, b, c);
}

// curvature (and scalar) coefficient specifications for the endomorphism
struct CoeffSpec {
  enum Kind { kCurvF, kCurvP, kScal } kind = kCurvF;
  int a = 0, b = 0, i = 0, j = 0;
};

double eval_coeff_cache(const GridGeometryCache& cache, std::size_t pt,
                        const CoeffSpec& s) {
  switch (s.kind) {
    case CoeffSpec::kCurvF:
      return cache.curv_f_frame_at(pt, s.a, s.b, s.i, s.j);
    case CoeffSpec::kCurvP:
      return cache.curv_p_frame_at(pt, s.a, s.b, s.i, s.j);
    case CoeffSpec::kScal:
      return cache.scal[pt];
  }
  return 0.0;
}

double eval_coeff_raw(const std::vector<double>& rf,
                      const std::vector<double>& rp, double scal, int n, int p,
                      int q, const CoeffSpec& s) {
  switch (s.kind) {
    case CoeffSpec::kCurvF:
      return rf[((static_cast<std::size_t>(s.a) * n + s.b) * p + s.i) * p +
                s.j];
    case CoeffSpec::kCurvP:
      return rp[((static_cast<std::size_t>(s.a) * n + s.b) * q + s.i) * q +
                s.j];
    case CoeffSpec::kScal:
      return scal;
  }
  return 0.0;
}

// ---------------------------------------------------------------------
// constant-matrix tables for one (cache, fiber) pair

struct FiberTables {
  const GridGeometryCache* cache = nullptr;
  GradedFiber fib;
  int n = 0, p = 0, q = 0, d = 0;

  std::vector<SPerm> cgen;          // c(E_a)
  std::vector<CMat> phi_unit;       // q*q: twisting lift of the (t,s) unit
  std::vector<Term> zterms;         // Dirac zeroth order, coeffs = fc
  std::vector<std::vector<Term>> omega;  // connection lift per direction
  std::vector<std::vector<Term>> mix;    // mixing correction per direction
  std::vector<CMat> mix_f;          // p*q: (1/2) c(f_j) c(h_s)
  std::vector<CMat> mix_p;          // q*p: (1/2) c(h_t) c(f_j)

  const CMat& cmat(int a) const { return a < p ? fib.cf[a] : fib.ch[a - p]; }
};

std::shared_ptr<FiberTables> build_tables(const GridGeometryCache& cache,
                                          const GradedFiber& fib) {
  if (fib.p != cache.p || fib.q != cache.q)
    throw std::invalid_argument("operators: fiber/cache rank mismatch");
  auto tb = std::make_shared<FiberTables>();
  tb->cache = &cache;
  tb->fib = fib;
  tb->n = cache.n();
  tb->p = cache.p;
  tb->q = cache.q;
  tb->d = fib.dim;
  const int n = tb->n, p = tb->p, q = tb->q;

  tb->cgen.resize(n);
  for (int a = 0; a < n; ++a)
    if (!to_sperm(tb->cmat(a), tb->cgen[a]))
      throw std::runtime_error("operators: generator not unit-sparse");

  if (!fib.phi.is_trivial()) {
    tb->phi_unit.resize(static_cast<std::size_t>(q) * q);
    const int slice = fib.sr.dim() * fib.er.dim();
    const CMat eye = CMat::Identity(slice, slice);
    for (int t = 0; t < q; ++t)
      for (int s = 0; s < q; ++s) {
        CMat unit = CMat::Zero(q, q);
        unit(t, s) = 1.0;
        tb->phi_unit[t * q + s] =
            kron(eye, phi_derivation_lift(fib.phi, q, unit));
      }
  }

  // connection lift per frame direction: quadratic spin and exterior parts
  // plus the twisting-bundle derivation
  tb->omega.resize(n);
  for (int a = 0; a < n; ++a) {
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < p; ++j)
        add_term(tb->omega[a], fc_index(a, i, j, n),
                 0.25 * fib.cf[i] * fib.cf[j]);
    for (int s = 0; s < q; ++s)
      for (int t = 0; t < q; ++t) {
        add_term(tb->omega[a], fc_index(a, p + s, p + t, n),
                 0.25 * (fib.ch[s] * fib.ch[t] - fib.chat[s] * fib.chat[t]));
        if (!fib.phi.is_trivial())
          add_term(tb->omega[a], fc_index(a, p + s, p + t, n),
                   tb->phi_unit[t * q + s]);
      }
  }

  // mixing corrections: leaf directions couple the two families one way,
  // transverse directions the other
  tb->mix.resize(n);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j)
      for (int s = 0; s < q; ++s)
        add_term(tb->mix[i], fc_index(i, j, p + s, n),
                 0.5 * fib.cf[j] * fib.ch[s]);
  for (int s = 0; s < q; ++s)
    for (int t = 0; t < q; ++t)
      for (int j = 0; j < p; ++j)
        add_term(tb->mix[p + s], fc_index(p + s, p + t, j, n),
                 0.5 * fib.ch[t] * fib.cf[j]);

  tb->mix_f.resize(static_cast<std::size_t>(p) * q);
  for (int j = 0; j < p; ++j)
    for (int s = 0; s < q; ++s)
      tb->mix_f[j * q + s] = 0.5 * fib.cf[j] * fib.ch[s];
  tb->mix_p.resize(static_cast<std::size_t>(q) * p);
  for (int t = 0; t < q; ++t)
    for (int j = 0; j < p; ++j)
      tb->mix_p[t * p + j] = 0.5 * fib.ch[t] * fib.cf[j];

  // Dirac zeroth order: c(E_a) times the connection lift, plus the two
  // cubic corrections
  for (int a = 0; a < n; ++a) {
    const CMat& ca = tb->cmat(a);
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < p; ++j)
        add_term(tb->zterms, fc_index(a, i, j, n),
                 ca * (0.25 * fib.cf[i] * fib.cf[j]));
    for (int s = 0; s < q; ++s)
      for (int t = 0; t < q; ++t) {
        add_term(tb->zterms, fc_index(a, p + s, p + t, n),
                 ca * (0.25 * (fib.ch[s] * fib.ch[t] -
                               fib.chat[s] * fib.chat[t])));
        if (!fib.phi.is_trivial())
          add_term(tb->zterms, fc_index(a, p + s, p + t, n),
                   ca * tb->phi_unit[t * q + s]);
      }
  }
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j)
      for (int s = 0; s < q; ++s)
        add_term(tb->zterms, fc_index(i, j, p + s, n),
                 0.5 * fib.cf[i] * fib.cf[j] * fib.ch[s]);
  for (int s = 0; s < q; ++s)
    for (int t = 0; t < q; ++t)
      for (int j = 0; j < p; ++j)
        add_term(tb->zterms, fc_index(p + s, p + t, j, n),
                 0.5 * fib.ch[s] * fib.ch[t] * fib.cf[j]);

  return tb;
}

// assemble the Dirac zeroth-order matrix at one point
void dirac_zero_at(const FiberTables& tb, std::size_t pt,
                   std::vector<double>& fc, CMat& z) {
  fill_frame_conn(*tb.cache, pt, fc);
  z.setZero();
  accumulate_table(z, tb.zterms, fc);
}

// connection-plus-mixing lift for one frame direction, from the frame
// Christoffel scratch of one point
void direction_lift_at(const FiberTables& tb, int a,
                       const std::vector<double>& fc, CMat& z) {
  z.setZero();
  accumulate_table(z, tb.omega[a], fc);
  accumulate_table(z, tb.mix[a], fc);
}

// ---------------------------------------------------------------------
// curvature endomorphism tables

struct EndoTable {
  std::vector<CoeffSpec> coeffs;
  std::vector<Term> terms;
  int add_coeff(const CoeffSpec& s) {
    coeffs.push_back(s);
    return static_cast<int>(coeffs.size()) - 1;
  }
};

// the three curvature sub-blocks of the lifted connection acting through
// one ordered Clifford pair cpair = c(E_a) c(E_b)
void add_twist_block(EndoTable& et, const FiberTables& tb, int a, int b,
                     const CMat& cpair, double weight) {
  const int p = tb.p, q = tb.q;
  for (int k = 0; k < p; ++k)
    for (int l = 0; l < p; ++l) {
      CoeffSpec s;
      s.kind = CoeffSpec::kCurvF;
      s.a = a; s.b = b; s.i = k; s.j = l;
      add_term(et.terms, et.add_coeff(s),
               weight * cpair * (0.25 * tb.fib.cf[k] * tb.fib.cf[l]));
    }
  for (int sdx = 0; sdx < q; ++sdx)
    for (int t = 0; t < q; ++t) {
      CoeffSpec s;
      s.kind = CoeffSpec::kCurvP;
      s.a = a; s.b = b; s.i = sdx; s.j = t;
      CMat block = 0.25 * (tb.fib.ch[sdx] * tb.fib.ch[t] -
                           tb.fib.chat[sdx] * tb.fib.chat[t]);
      if (!tb.fib.phi.is_trivial()) block += tb.phi_unit[t * q + sdx];
      add_term(et.terms, et.add_coeff(s), weight * cpair * block);
    }
}

EndoTable build_endo_table(const FiberTables& tb, unsigned terms) {
  EndoTable et;
  const int p = tb.p, q = tb.q, d = tb.d;
  const GradedFiber& fib = tb.fib;

  if (terms & kEndoTwistFF)
    for (int i = 0; i < p; ++i)
      for (int j = i + 1; j < p; ++j)
        add_twist_block(et, tb, i, j, fib.cf[i] * fib.cf[j], 1.0);
  if (terms & kEndoTwistFH)
    for (int i = 0; i < p; ++i)
      for (int s = 0; s < q; ++s)
        add_twist_block(et, tb, i, p + s, fib.cf[i] * fib.ch[s], 1.0);
  if (terms & kEndoTwistHH)
    for (int s = 0; s < q; ++s)
      for (int t = s + 1; t < q; ++t)
        add_twist_block(et, tb, p + s, p + t, fib.ch[s] * fib.ch[t], 1.0);
  if (terms & kEndoScalar) {
    CoeffSpec s;
    s.kind = CoeffSpec::kScal;
    add_term(et.terms, et.add_coeff(s), 0.25 * CMat::Identity(d, d));
  }
  // transverse-bundle curvature contracted against chat pairs; the printed
  // pairing runs (to, from), hence the swapped trailing indices
  if (terms & kEndoPerpFH)
    for (int i = 0; i < p; ++i)
      for (int r = 0; r < q; ++r)
        for (int s = 0; s < q; ++s)
          for (int t = 0; t < q; ++t) {
            CoeffSpec cs;
            cs.kind = CoeffSpec::kCurvP;
            cs.a = i; cs.b = p + r; cs.i = t; cs.j = s;
            add_term(et.terms, et.add_coeff(cs),
                     0.25 * fib.cf[i] * fib.ch[r] * fib.chat[s] *
                         fib.chat[t]);
          }
  if (terms & kEndoPerpFF)
    for (int i = 0; i < p; ++i)
      for (int j = i + 1; j < p; ++j)
        for (int s = 0; s < q; ++s)
          for (int t = 0; t < q; ++t) {
            CoeffSpec cs;
            cs.kind = CoeffSpec::kCurvP;
            cs.a = i; cs.b = j; cs.i = t; cs.j = s;
            add_term(et.terms, et.add_coeff(cs),
                     0.25 * fib.cf[i] * fib.cf[j] * fib.chat[s] *
                         fib.chat[t]);
          }
  if (terms & kEndoPerpHH)
    for (int r = 0; r < q; ++r)
      for (int l = r + 1; l < q; ++l)
        for (int s = 0; s < q; ++s)
          for (int t = 0; t < q; ++t) {
            CoeffSpec cs;
            cs.kind = CoeffSpec::kCurvP;
            cs.a = p + r; cs.b = p + l; cs.i = t; cs.j = s;
            add_term(et.terms, et.add_coeff(cs),
                     0.25 * fib.ch[r] * fib.ch[l] * fib.chat[s] *
                         fib.chat[t]);
          }
  return et;
}

CMat endo_at(const EndoTable& et, const GridGeometryCache& cache,
             std::size_t pt, int d) {
  std::vector<double> c(et.coeffs.size());
  for (std::size_t k = 0; k < et.coeffs.size(); ++k)
    c[k] = eval_coeff_cache(cache, pt, et.coeffs[k]);
  CMat z = CMat::Zero(d, d);
  for (const Term& t : et.terms) accumulate(z, t, c[t.coeff]);
  return z;
}

// ---------------------------------------------------------------------
// section/gradient plumbing

struct GradientWork {
  std::shared_ptr<FftGrid> grid;
  std::vector<std::complex<double>> in;
  std::vector<std::vector<std::complex<double>>> out;  // per axis

  GradientWork(int nvars, int N)
      : grid(std::make_shared<FftGrid>(nvars, N)),
        in(grid->npoints()),
        out(nvars, std::vector<std::complex<double>>(grid->npoints())) {}
};

// all coordinate derivatives of every fiber component of u
void section_gradient(GradientWork& gw, const FiberSectionGrid& u,
                      std::vector<FiberSectionGrid>& du) {
  const int nvars = u.nvars, d = u.fiber_dim;
  const std::size_t np = u.npoints();
  du.assign(nvars, FiberSectionGrid::zero(u.nvars, u.grid_size, d));
  std::vector<std::complex<double>*> outs(nvars);
  for (int axis = 0; axis < nvars; ++axis) outs[axis] = gw.out[axis].data();
  for (int c = 0; c < d; ++c) {
    for (std::size_t pt = 0; pt < np; ++pt) gw.in[pt] = u.values[pt * d + c];
    gw.grid->gradient(gw.in.data(), outs);
    for (int axis = 0; axis < nvars; ++axis) {
      const auto& o = gw.out[axis];
      auto& dst = du[axis].values;
      for (std::size_t pt = 0; pt < np; ++pt) dst[pt * d + c] = o[pt];
    }
  }
}

void check_section(const LinearOperatorHandle& h, const FiberSectionGrid& u) {
  if (u.nvars != h.nvars || u.grid_size != h.grid_size ||
      u.fiber_dim != h.fiber_dim)
    throw std::invalid_argument("operator: section shape mismatch");
}

// frame coefficient of direction a along axis mu
inline double frame_coeff(const GridGeometryCache& cache, std::size_t pt,
                          int mu, int a) {
  const int p = cache.p;
  if (a < p) return mu < p ? cache.frame_f_at(pt, mu, a) : 0.0;
  return mu >= p ? cache.frame_p_at(pt, mu - p, a - p) : 0.0;
}

// materialize a per-point matrix field when it fits comfortably in memory
constexpr std::size_t kMaterializeEntries = 6u << 20;

}  // namespace

// ---------------------------------------------------------------------

std::size_t FiberSectionGrid::npoints() const {
  std::size_t np = 1;
  for (int i = 0; i < nvars; ++i) np *= static_cast<std::size_t>(grid_size);
  return np;
}

FiberSectionGrid FiberSectionGrid::zero(int nvars, int grid_size,
                                        int fiber_dim) {
  FiberSectionGrid s;
  s.nvars = nvars;
  s.grid_size = grid_size;
  s.fiber_dim = fiber_dim;
  s.values.assign(s.npoints() * static_cast<std::size_t>(fiber_dim), 0.0);
  return s;
}

std::complex<double> section_inner(const GridGeometryCache& cache,
                                   const FiberSectionGrid& u,
                                   const FiberSectionGrid& v) {
  if (u.values.size() != v.values.size())
    throw std::invalid_argument("section_inner: shape mismatch");
  const std::size_t np = u.npoints();
  if (np != cache.npoints)
    throw std::invalid_argument("section_inner: cache mismatch");
  const int d = u.fiber_dim;
  const double cell = 1.0 / static_cast<double>(np);
  std::complex<double> acc = 0.0;
  for (std::size_t pt = 0; pt < np; ++pt) {
    std::complex<double> dot = 0.0;
    const auto* up = u.at(pt);
    const auto* vp = v.at(pt);
    for (int c = 0; c < d; ++c) dot += up[c] * std::conj(vp[c]);
    acc += dot * (cache.sqrt_det[pt] * cell);
  }
  return acc;
}

double section_norm(const GridGeometryCache& cache,
                    const FiberSectionGrid& u) {
  return std::sqrt(std::abs(section_inner(cache, u, u)));
}

namespace {

// deterministic standard normals (mt19937_64 output is specified by the
// standard; the distribution classes are not)
struct NormalRng {
  std::mt19937_64 eng;
  bool have = false;
  double spare = 0.0;
  explicit NormalRng(std::uint64_t seed) : eng(seed) {}
  double uniform() {
    return static_cast<double>(eng() >> 11) * 0x1.0p-53;
  }
  double normal() {
    if (have) {
      have = false;
      return spare;
    }
    double u1 = uniform(), u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare = r * std::sin(kTwoPi * u2);
    have = true;
    return r * std::cos(kTwoPi * u2);
  }
};

}  // namespace

FiberSectionGrid random_bandlimited_section(int nvars, int grid_size,
                                            int fiber_dim, int band,
                                            std::uint64_t seed) {
  if (band < 0 || 2 * band >= grid_size)
    throw std::invalid_argument("random section: band exceeds grid");
  FiberSectionGrid s = FiberSectionGrid::zero(nvars, grid_size, fiber_dim);
  FftGrid grid(nvars, grid_size);
  NormalRng rng(seed);
  std::vector<std::complex<double>> modes(grid.npoints());
  std::vector<std::complex<double>> field(grid.npoints());
  std::vector<int> k(nvars, -band);
  for (int c = 0; c < fiber_dim; ++c) {
    std::fill(modes.begin(), modes.end(), std::complex<double>(0.0));
    std::fill(k.begin(), k.end(), -band);
    while (true) {
      modes[grid.mode_index(k)] =
          std::complex<double>(rng.normal(), rng.normal());
      int axis = nvars - 1;
      while (axis >= 0 && ++k[axis] > band) k[axis--] = -band;
      if (axis < 0) break;
    }
    grid.synthesize(modes.data(), field.data());
    const std::size_t np = grid.npoints();
    for (std::size_t pt = 0; pt < np; ++pt)
      s.values[pt * fiber_dim + c] = field[pt];
  }
  return s;
}

FiberSectionGrid plane_wave_section(int nvars, int grid_size,
                                    const Eigen::VectorXcd& fiber,
                                    const std::vector<int>& k) {
  if (static_cast<int>(k.size()) != nvars)
    throw std::invalid_argument("plane wave: frequency arity");
  const int d = static_cast<int>(fiber.size());
  FiberSectionGrid s = FiberSectionGrid::zero(nvars, grid_size, d);
  const std::size_t np = s.npoints();
  for (std::size_t pt = 0; pt < np; ++pt) {
    double phase = 0.0;
    std::size_t rest = pt;
    for (int axis = nvars - 1; axis >= 0; --axis) {
      phase += k[axis] * static_cast<double>(rest % grid_size) / grid_size;
      rest /= grid_size;
    }
    const std::complex<double> w =
        std::exp(std::complex<double>(0.0, kTwoPi * phase));
    for (int c = 0; c < d; ++c) s.values[pt * d + c] = w * fiber[c];
  }
  return s;
}

FiberSectionGrid apply_pointwise(const CMat& m, const FiberSectionGrid& u) {
  const int d = u.fiber_dim;
  if (m.rows() != d || m.cols() != d)
    throw std::invalid_argument("apply_pointwise: dimension mismatch");
  FiberSectionGrid out = FiberSectionGrid::zero(u.nvars, u.grid_size, d);
  const std::size_t np = u.npoints();
  Eigen::Map<const Eigen::MatrixXcd> um(u.values.data(), d, np);
  Eigen::Map<Eigen::MatrixXcd> om(out.values.data(), d, np);
  om.noalias() = m * um;
  return out;
}

FiberSectionGrid LinearOperatorHandle::apply(const FiberSectionGrid& u) const {
  check_section(*this, u);
  FiberSectionGrid out = FiberSectionGrid::zero(nvars, grid_size, fiber_dim);
  apply_fn(u, out);
  return out;
}

LinearOperatorHandle compose(const LinearOperatorHandle& outer,
                             const LinearOperatorHandle& inner) {
  LinearOperatorHandle h;
  h.tag = outer.tag + "*" + inner.tag;
  h.nvars = inner.nvars;
  h.grid_size = inner.grid_size;
  h.fiber_dim = inner.fiber_dim;
  auto o = outer.apply_fn;
  auto i = inner.apply_fn;
  int nv = inner.nvars, N = inner.grid_size, d = inner.fiber_dim;
  h.apply_fn = [o, i, nv, N, d](const FiberSectionGrid& u,
                                FiberSectionGrid& out) {
    FiberSectionGrid mid = FiberSectionGrid::zero(nv, N, d);
    i(u, mid);
    o(mid, out);
  };
  return h;
}

LinearOperatorHandle operator_difference(const LinearOperatorHandle& a,
                                         const LinearOperatorHandle& b) {
  LinearOperatorHandle h;
  h.tag = a.tag + "-" + b.tag;
  h.nvars = a.nvars;
  h.grid_size = a.grid_size;
  h.fiber_dim = a.fiber_dim;
  auto fa = a.apply_fn;
  auto fb = b.apply_fn;
  int nv = a.nvars, N = a.grid_size, d = a.fiber_dim;
  h.apply_fn = [fa, fb, nv, N, d](const FiberSectionGrid& u,
                                  FiberSectionGrid& out) {
    FiberSectionGrid tmp = FiberSectionGrid::zero(nv, N, d);
    fa(u, out);
    fb(u, tmp);
    const std::size_t m = out.values.size();
    for (std::size_t k = 0; k < m; ++k) out.values[k] -= tmp.values[k];
  };
  return h;
}

CMat curvature_endomorphism(const GradedFiber& fib, double scal,
                            const std::vector<double>& rf,
                            const std::vector<double>& rp, unsigned terms) {
  if (!fib.phi.is_trivial())
    throw std::invalid_argument(
        "curvature_endomorphism: raw form needs a trivial twisting factor");
  const int p = fib.p, q = fib.q, n = p + q;
  if (rf.size() != static_cast<std::size_t>(n) * n * p * p ||
      rp.size() != static_cast<std::size_t>(n) * n * q * q)
    throw std::invalid_argument("curvature_endomorphism: data shape");
  FiberTables tb;
  tb.fib = fib;
  tb.n = n;
  tb.p = p;
  tb.q = q;
  tb.d = fib.dim;
  EndoTable et = build_endo_table(tb, terms);
  std::vector<double> c(et.coeffs.size());
  for (std::size_t k = 0; k < et.coeffs.size(); ++k)
    c[k] = eval_coeff_raw(rf, rp, scal, n, p, q, et.coeffs[k]);
  CMat z = CMat::Zero(fib.dim, fib.dim);
  for (const Term& t : et.terms) accumulate(z, t, c[t.coeff]);
  return z;
}

CMat curvature_endomorphism_at(const GridGeometryCache& cache,
                               const GradedFiber& fib, std::size_t pt,
                               unsigned terms) {
  auto tb = build_tables(cache, fib);
  EndoTable et = build_endo_table(*tb, terms);
  return endo_at(et, cache, pt, fib.dim);
}

LinearOperatorHandle assemble_subdirac(const GridGeometryCache& cache,
                                       const GradedFiber& fib) {
  auto tb = build_tables(cache, fib);
  const int nv = tb->n, N = cache.N, d = tb->d;
  const std::size_t np = cache.npoints;

  // precompute the zeroth-order matrix field when it is small enough
  auto zfield = std::make_shared<std::vector<std::complex<double>>>();
  if (np * static_cast<std::size_t>(d) * d <= kMaterializeEntries) {
    zfield->resize(np * static_cast<std::size_t>(d) * d);
    std::vector<double> fc(static_cast<std::size_t>(nv) * nv * nv);
    CMat z(d, d);
    for (std::size_t pt = 0; pt < np; ++pt) {
      dirac_zero_at(*tb, pt, fc, z);
      std::copy(z.data(), z.data() + d * d,
                zfield->data() + pt * static_cast<std::size_t>(d) * d);
    }
  }

  auto gw = std::make_shared<GradientWork>(nv, N);
  LinearOperatorHandle h;
  h.tag = "subdirac";
  h.nvars = nv;
  h.grid_size = N;
  h.fiber_dim = d;
  h.apply_fn = [tb, gw, zfield](const FiberSectionGrid& u,
                                FiberSectionGrid& out) {
    const GridGeometryCache& cache = *tb->cache;
    const int nv = tb->n, p = tb->p, q = tb->q, d = tb->d;
    const std::size_t np = u.npoints();
    std::vector<FiberSectionGrid> du;
    section_gradient(*gw, u, du);
    std::vector<std::complex<double>> y(d);
    std::vector<double> fc(static_cast<std::size_t>(nv) * nv * nv);
    CMat z(d, d);
    const bool have_z = !zfield->empty();
    for (std::size_t pt = 0; pt < np; ++pt) {
      auto* op = out.at(pt);
      // c(E_a) times the frame-direction derivative
      for (int a = 0; a < nv; ++a) {
        std::fill(y.begin(), y.end(), std::complex<double>(0.0));
        if (a < p) {
          for (int mu = 0; mu < p; ++mu) {
            const double w = cache.frame_f_at(pt, mu, a);
            if (w == 0.0) continue;
            const auto* dp = du[mu].at(pt);
            for (int c = 0; c < d; ++c) y[c] += w * dp[c];
          }
        } else {
          for (int kap = 0; kap < q; ++kap) {
            const double w = cache.frame_p_at(pt, kap, a - p);
            if (w == 0.0) continue;
            const auto* dp = du[p + kap].at(pt);
            for (int c = 0; c < d; ++c) y[c] += w * dp[c];
          }
        }
        sperm_mv_add(tb->cgen[a], y.data(), op, d);
      }
      // zeroth order
      const auto* up = u.at(pt);
      if (have_z) {
        const auto* zm = zfield->data() + pt * static_cast<std::size_t>(d) * d;
        for (int c = 0; c < d; ++c) {
          const auto uc = up[c];
          if (uc == std::complex<double>(0.0)) continue;
          const auto* colz = zm + static_cast<std::size_t>(c) * d;
          for (int r = 0; r < d; ++r) op[r] += colz[r] * uc;
        }
      } else {
        dirac_zero_at(*tb, pt, fc, z);
        for (int c = 0; c < d; ++c)
          for (int r = 0; r < d; ++r) op[r] += z(r, c) * up[c];
      }
    }
  };
  return h;
}

LinearOperatorHandle bochner_laplacian(const GridGeometryCache& cache,
                                       const GradedFiber& fib) {
  auto tb = build_tables(cache, fib);
  const int nv = tb->n, N = cache.N, d = tb->d;
  auto gw = std::make_shared<GradientWork>(nv, N);
  LinearOperatorHandle h;
  h.tag = "bochner";
  h.nvars = nv;
  h.grid_size = N;
  h.fiber_dim = d;
  h.apply_fn = [tb, gw](const FiberSectionGrid& u, FiberSectionGrid& out) {
    const GridGeometryCache& cache = *tb->cache;
    const int nv = tb->n, p = tb->p, q = tb->q, d = tb->d;
    const std::size_t np = u.npoints();
    std::vector<FiberSectionGrid> du, dw;
    section_gradient(*gw, u, du);
    FiberSectionGrid w = FiberSectionGrid::zero(u.nvars, u.grid_size, d);
    std::vector<double> fc(static_cast<std::size_t>(nv) * nv * nv);
    CMat z(d, d);
    // sum over frame directions of the squared corrected derivative
    for (int a = 0; a < nv; ++a) {
      for (std::size_t pt = 0; pt < np; ++pt) {
        auto* wp = w.at(pt);
        std::fill(wp, wp + d, std::complex<double>(0.0));
        for (int mu = 0; mu < nv; ++mu) {
          const double fcf = frame_coeff(cache, pt, mu, a);
          if (fcf == 0.0) continue;
          const auto* dp = du[mu].at(pt);
          for (int c = 0; c < d; ++c) wp[c] += fcf * dp[c];
        }
        fill_frame_conn(cache, pt, fc);
        direction_lift_at(*tb, a, fc, z);
        const auto* up = u.at(pt);
        for (int c = 0; c < d; ++c)
          for (int r = 0; r < d; ++r) wp[r] += z(r, c) * up[c];
      }
      section_gradient(*gw, w, dw);
      for (std::size_t pt = 0; pt < np; ++pt) {
        auto* op = out.at(pt);
        for (int mu = 0; mu < nv; ++mu) {
          const double fcf = frame_coeff(cache, pt, mu, a);
          if (fcf == 0.0) continue;
          const auto* dp = dw[mu].at(pt);
          for (int c = 0; c < d; ++c) op[c] += fcf * dp[c];
        }
        fill_frame_conn(cache, pt, fc);
        direction_lift_at(*tb, a, fc, z);
        const auto* wp = w.at(pt);
        for (int c = 0; c < d; ++c)
          for (int r = 0; r < d; ++r) op[r] += z(r, c) * wp[c];
      }
    }
    // frame-divergence corrections, typed by the block the divergence
    // vector originates from
    std::vector<double> vdiv(nv);
    for (int block = 0; block < 2; ++block) {
      for (std::size_t pt = 0; pt < np; ++pt) {
        fill_frame_conn(cache, pt, fc);
        const int lo = block == 0 ? 0 : p;
        const int hi = block == 0 ? p : nv;
        for (int b = 0; b < nv; ++b) {
          double acc = 0.0;
          for (int a = lo; a < hi; ++a) acc += fc[fc_index(a, a, b, nv)];
          vdiv[b] = acc;
        }
        z.setZero();
        for (int b = 0; b < nv; ++b)
          if (vdiv[b] != 0.0) accumulate_table(z, tb->omega[b], fc, vdiv[b]);
        if (block == 0) {
          for (int j = 0; j < p; ++j)
            for (int s = 0; s < q; ++s) {
              double cmix = 0.0;
              for (int a = 0; a < nv; ++a)
                cmix += vdiv[a] * fc[fc_index(a, j, p + s, nv)];
              if (cmix != 0.0) z += cmix * tb->mix_f[j * q + s];
            }
        } else {
          for (int t = 0; t < q; ++t)
            for (int j = 0; j < p; ++j) {
              double cmix = 0.0;
              for (int a = 0; a < nv; ++a)
                cmix += vdiv[a] * fc[fc_index(a, p + t, j, nv)];
              if (cmix != 0.0) z += cmix * tb->mix_p[t * p + j];
            }
        }
        auto* op = out.at(pt);
        const auto* up = u.at(pt);
        for (int mu = 0; mu < nv; ++mu) {
          double emu = 0.0;
          for (int b = 0; b < nv; ++b)
            if (vdiv[b] != 0.0) emu += vdiv[b] * frame_coeff(cache, pt, mu, b);
          if (emu == 0.0) continue;
          const auto* dp = du[mu].at(pt);
          for (int c = 0; c < d; ++c) op[c] -= emu * dp[c];
        }
        for (int c = 0; c < d; ++c)
          for (int r = 0; r < d; ++r) op[r] -= z(r, c) * up[c];
      }
    }
  };
  return h;
}

LinearOperatorHandle lichnerowicz_rhs(const GridGeometryCache& cache,
                                      const GradedFiber& fib, unsigned terms) {
  LinearOperatorHandle lap = bochner_laplacian(cache, fib);
  auto tb = build_tables(cache, fib);
  auto et = std::make_shared<EndoTable>(build_endo_table(*tb, terms));
  const int d = tb->d;
  const std::size_t np = cache.npoints;

  auto efield = std::make_shared<std::vector<std::complex<double>>>();
  if (np * static_cast<std::size_t>(d) * d <= kMaterializeEntries) {
    efield->resize(np * static_cast<std::size_t>(d) * d);
    for (std::size_t pt = 0; pt < np; ++pt) {
      CMat e = endo_at(*et, cache, pt, d);
      std::copy(e.data(), e.data() + d * d,
                efield->data() + pt * static_cast<std::size_t>(d) * d);
    }
  }

  LinearOperatorHandle h;
  h.tag = "lichnerowicz_rhs";
  h.nvars = lap.nvars;
  h.grid_size = lap.grid_size;
  h.fiber_dim = d;
  auto lap_fn = lap.apply_fn;
  h.apply_fn = [tb, et, efield, lap_fn](const FiberSectionGrid& u,
                                        FiberSectionGrid& out) {
    const int d = tb->d;
    const std::size_t np = u.npoints();
    lap_fn(u, out);
    for (auto& v : out.values) v = -v;
    const bool have_e = !efield->empty();
    for (std::size_t pt = 0; pt < np; ++pt) {
      auto* op = out.at(pt);
      const auto* up = u.at(pt);
      if (have_e) {
        const auto* em = efield->data() + pt * static_cast<std::size_t>(d) * d;
        for (int c = 0; c < d; ++c) {
          const auto uc = up[c];
          if (uc == std::complex<double>(0.0)) continue;
          const auto* cole = em + static_cast<std::size_t>(c) * d;
          for (int r = 0; r < d; ++r) op[r] += cole[r] * uc;
        }
      } else {
        CMat e = endo_at(*et, *tb->cache, pt, d);
        for (int c = 0; c < d; ++c)
          for (int r = 0; r < d; ++r) op[r] += e(r, c) * up[c];
      }
    }
  };
  return h;
}

EpsScaledOperators assemble_eps_scaled(const GridGeometryCache& cache,
                                       const GradedFiber& fib,
                                       unsigned terms) {
  EpsScaledOperators ops;
  ops.epsilon = cache.epsilon;
  ops.dirac = assemble_subdirac(cache, fib);
  ops.rhs = lichnerowicz_rhs(cache, fib, terms);
  ops.dirac.tag = "subdirac[eps]";
  ops.rhs.tag = "lichnerowicz_rhs[eps]";
  return ops;
}

double lichnerowicz_residual(const GridGeometryCache& cache,
                             const GradedFiber& fib, int trials,
                             std::uint64_t seed) {
  if (trials < 1) throw std::invalid_argument("residual: trials < 1");
  LinearOperatorHandle dirac = assemble_subdirac(cache, fib);
  LinearOperatorHandle rhs = lichnerowicz_rhs(cache, fib);
  // a fixed unit bandwidth keeps the section class constant across grid
  // refinement, so the defect measures the discretization alone; products
  // with non-smooth frame coefficients alias back into this band
  const int band = 1;
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    FiberSectionGrid u = random_bandlimited_section(
        cache.n(), cache.N, fib.dim, band, seed + static_cast<std::uint64_t>(t));
    FiberSectionGrid d2u = dirac.apply(dirac.apply(u));
    FiberSectionGrid ru = rhs.apply(u);
    for (std::size_t k = 0; k < d2u.values.size(); ++k)
      d2u.values[k] -= ru.values[k];
    worst = std::max(worst, section_norm(cache, d2u) / section_norm(cache, u));
  }
  return worst;
}

}  // namespace folia
