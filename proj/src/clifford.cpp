#include "folia/clifford.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <stdexcept>

namespace folia {

namespace {

using Cpx = std::complex<double>;

const Cpx kI(0.0, 1.0);

CMat pauli(int which) {
  CMat m(2, 2);
  switch (which) {
    case 1:
      m << 0, 1, 1, 0;
      break;
    case 2:
      m << 0, -kI, kI, 0;
      break;
    default:
      m << 1, 0, 0, -1;
      break;
  }
  return m;
}

// (1/sqrt(-1))^e = (-i)^e
Cpx inv_root_power(int e) {
  switch (((e % 4) + 4) % 4) {
    case 0: return Cpx(1, 0);
    case 1: return Cpx(0, -1);
    case 2: return Cpx(-1, 0);
    default: return Cpx(0, 1);
  }
}

int sign_below(unsigned mask, int s) {
  unsigned below = mask & ((1u << s) - 1u);
  int bits = 0;
  for (unsigned v = below; v; v &= v - 1) ++bits;
  return (bits % 2 == 0) ? 1 : -1;
}

// wedge by generator s on the subset basis, +contract for chat, -contract for c
void ext_generators(int q, std::vector<CMat>& c, std::vector<CMat>& chat) {
  const int dim = 1 << q;
  c.assign(q, CMat::Zero(dim, dim));
  chat.assign(q, CMat::Zero(dim, dim));
  for (int s = 0; s < q; ++s) {
    for (unsigned m = 0; m < (unsigned)dim; ++m) {
      const double sgn = sign_below(m, s);
      if (!(m & (1u << s))) {
        const unsigned up = m | (1u << s);  // wedge
        c[s]((int)up, (int)m) += sgn;
        chat[s]((int)up, (int)m) += sgn;
      } else {
        const unsigned down = m & ~(1u << s);  // contraction
        c[s]((int)down, (int)m) -= sgn;
        chat[s]((int)down, (int)m) += sgn;
      }
    }
  }
}

std::vector<unsigned> masks_with_popcount(int q, int k) {
  std::vector<unsigned> out;
  for (unsigned m = 0; m < (1u << q); ++m) {
    int bits = 0;
    for (unsigned v = m; v; v &= v - 1) ++bits;
    if (bits == k) out.push_back(m);
  }
  return out;
}

// derivation action on the k-th exterior power; a is the standard matrix of
// the endomorphism, a(t,s) = coefficient of h_t in A h_s
CMat ext_power_lift(int q, int k, const CMat& a) {
  const auto basis = masks_with_popcount(q, k);
  std::map<unsigned, int> index;
  for (int i = 0; i < (int)basis.size(); ++i) index[basis[i]] = i;
  CMat out = CMat::Zero((int)basis.size(), (int)basis.size());
  for (int col = 0; col < (int)basis.size(); ++col) {
    const unsigned m = basis[col];
    for (int s = 0; s < q; ++s) {
      if (!(m & (1u << s))) continue;
      const unsigned removed = m & ~(1u << s);
      const int sgn_r = sign_below(m, s);
      for (int t = 0; t < q; ++t) {
        if (removed & (1u << t)) continue;  // wedge collapses
        const unsigned replaced = removed | (1u << t);
        const int sgn_i = sign_below(removed, t);
        out(index[replaced], col) += a(t, s) * double(sgn_r * sgn_i);
      }
    }
  }
  return out;
}

void sym_basis_rec(int q, int k, int start, std::vector<int>& cur,
                   std::vector<std::vector<int>>& out) {
  if ((int)cur.size() == k) {
    out.push_back(cur);
    return;
  }
  for (int i = start; i < q; ++i) {
    cur.push_back(i);
    sym_basis_rec(q, k, i, cur, out);
    cur.pop_back();
  }
}

double multiset_weight(const std::vector<int>& s) {
  double w = 1.0;
  int run = 1;
  for (std::size_t j = 1; j < s.size(); ++j) {
    run = (s[j] == s[j - 1]) ? run + 1 : 1;
    w *= run;
  }
  return std::sqrt(w);  // sqrt of product of multiplicity factorials
}

// derivation action on the k-th symmetric power in the orthonormal basis of
// normalized monomials
CMat sym_power_lift(int q, int k, const CMat& a) {
  std::vector<std::vector<int>> basis;
  std::vector<int> cur;
  sym_basis_rec(q, k, 0, cur, basis);
  std::map<std::vector<int>, int> index;
  for (int i = 0; i < (int)basis.size(); ++i) index[basis[i]] = i;
  CMat mono = CMat::Zero((int)basis.size(), (int)basis.size());
  for (int col = 0; col < (int)basis.size(); ++col) {
    const auto& s = basis[col];
    for (int j = 0; j < k; ++j) {
      for (int t = 0; t < q; ++t) {
        std::vector<int> repl = s;
        repl[j] = t;
        std::sort(repl.begin(), repl.end());
        mono(index[repl], col) += a(t, s[j]);
      }
    }
  }
  CMat out(mono.rows(), mono.cols());
  for (int r = 0; r < (int)basis.size(); ++r)
    for (int col = 0; col < (int)basis.size(); ++col)
      out(r, col) =
          mono(r, col) * multiset_weight(basis[r]) / multiset_weight(basis[col]);
  return out;
}

long long binom(int n, int k) {
  if (k < 0 || k > n) return 0;
  long long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

CMat term_lift(const PhiTerm& t, int q, const CMat& a) {
  return t.symmetric ? sym_power_lift(q, t.k, a) : ext_power_lift(q, t.k, a);
}

// standard matrix of the frame block of the connection in direction mu:
// row index is the target frame vector
CMat frame_matrix(const GridGeometryCache& cache, std::size_t pt, int mu,
                  int lo, int sz) {
  CMat a(sz, sz);
  for (int s = 0; s < sz; ++s)
    for (int t = 0; t < sz; ++t) a(t, s) = cache.conn_at(pt, mu, lo + s, lo + t);
  return a;
}

}  // namespace

CMat kron(const CMat& a, const CMat& b) {
  CMat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

SpinRep build_spin_rep(int p) {
  if (p <= 0 || p % 2 != 0 || p > 8)
    throw std::invalid_argument("spin module: rank must be even and in [2,8]");
  const int m = p / 2;
  SpinRep rep;
  rep.p = p;
  for (int pair = 1; pair <= m; ++pair) {
    for (int which = 1; which <= 2; ++which) {
      CMat g = CMat::Identity(1, 1);
      for (int slot = 1; slot <= m; ++slot) {
        CMat factor;
        if (slot < pair)
          factor = pauli(3);
        else if (slot == pair)
          factor = kI * pauli(which);
        else
          factor = CMat::Identity(2, 2);
        g = kron(g, factor);
      }
      rep.gamma.push_back(g);
    }
  }
  CMat prod = CMat::Identity(rep.dim(), rep.dim());
  for (const auto& g : rep.gamma) prod = prod * g;
  rep.grading = inv_root_power(p * (p + 1) / 2) * prod;
  return rep;
}

ExtRep build_ext_rep(int q) {
  if (q <= 0 || q % 2 != 0 || q > 6)
    throw std::invalid_argument(
        "exterior module: rank must be even and in [2,6]");
  ExtRep rep;
  rep.q = q;
  ext_generators(q, rep.c, rep.chat);
  CMat prod = CMat::Identity(rep.dim(), rep.dim());
  for (const auto& c : rep.c) prod = prod * c;
  rep.tau = inv_root_power(q * (q + 1) / 2) * prod;
  return rep;
}

PhiBundleSpec PhiBundleSpec::trivial() { return exterior(0, 1); }

PhiBundleSpec PhiBundleSpec::exterior(int k, int multiplicity) {
  PhiBundleSpec s;
  s.terms.push_back({false, k, multiplicity});
  return s;
}

PhiBundleSpec PhiBundleSpec::symmetric(int k, int multiplicity) {
  PhiBundleSpec s;
  s.terms.push_back({true, k, multiplicity});
  return s;
}

int PhiBundleSpec::rank(int q) const {
  long long r = 0;
  for (const auto& t : terms) {
    if (t.k < 0 || t.multiplicity < 0)
      throw std::invalid_argument("functor bundle: negative degree or count");
    const long long base =
        t.symmetric ? binom(q + t.k - 1, t.k) : binom(q, t.k);
    r += (long long)t.multiplicity * base;
  }
  if (r <= 0) throw std::invalid_argument("functor bundle: empty rank");
  return (int)r;
}

bool PhiBundleSpec::is_trivial() const {
  int nontrivial = 0, rank1 = 0;
  for (const auto& t : terms) {
    if (t.multiplicity == 0) continue;
    if (t.k == 0 && !t.symmetric && t.multiplicity == 1 && rank1 == 0)
      ++rank1;
    else
      ++nontrivial;
  }
  return nontrivial == 0 && rank1 == 1;
}

CMat phi_derivation_lift(const PhiBundleSpec& phi, int q, const CMat& a) {
  if (a.rows() != q || a.cols() != q)
    throw std::invalid_argument("functor lift: endomorphism shape mismatch");
  const int r = phi.rank(q);
  CMat out = CMat::Zero(r, r);
  int at = 0;
  for (const auto& t : phi.terms) {
    if (t.multiplicity == 0) continue;
    const CMat block = term_lift(t, q, a);
    for (int copy = 0; copy < t.multiplicity; ++copy) {
      out.block(at, at, block.rows(), block.cols()) = block;
      at += (int)block.rows();
    }
  }
  return out;
}

GradedFiber graded_tensor(const SpinRep& sr, const ExtRep& er,
                          const PhiBundleSpec& phi) {
  GradedFiber f;
  f.sr = sr;
  f.er = er;
  f.phi = phi;
  f.p = sr.p;
  f.q = er.q;
  f.phi_rank = phi.rank(er.q);
  const int ds = sr.dim(), dl = er.dim();
  f.dim = ds * dl * f.phi_rank;
  const CMat is = CMat::Identity(ds, ds);
  const CMat il = CMat::Identity(dl, dl);
  const CMat ir = CMat::Identity(f.phi_rank, f.phi_rank);
  for (int i = 0; i < f.p; ++i)
    f.cf.push_back(kron(kron(sr.gamma[i], il), ir));
  // twisting the transverse c action by the leaf chirality makes the two
  // Clifford families anticommute; chat stays untwisted and hence even
  for (int s = 0; s < f.q; ++s) {
    f.ch.push_back(kron(kron(sr.grading, er.c[s]), ir));
    f.chat.push_back(kron(kron(is, er.chat[s]), ir));
  }
  f.grading = kron(kron(sr.grading, er.tau), ir);
  return f;
}

CMat connection_lift_at(const GridGeometryCache& cache, const GradedFiber& fib,
                        std::size_t pt, int mu) {
  if (fib.p != cache.p || fib.q != cache.q)
    throw std::invalid_argument("connection lift: fiber/cache rank mismatch");
  CMat out = CMat::Zero(fib.dim, fib.dim);
  for (int i = 0; i < fib.p; ++i)
    for (int j = 0; j < fib.p; ++j) {
      const double w = cache.conn_at(pt, mu, i, j);
      if (w != 0.0) out += (0.25 * w) * (fib.cf[i] * fib.cf[j]);
    }
  for (int s = 0; s < fib.q; ++s)
    for (int t = 0; t < fib.q; ++t) {
      const double w = cache.conn_at(pt, mu, fib.p + s, fib.p + t);
      if (w != 0.0)
        out += (0.25 * w) *
               (fib.ch[s] * fib.ch[t] - fib.chat[s] * fib.chat[t]);
    }
  if (!fib.phi.is_trivial()) {
    const CMat a = frame_matrix(cache, pt, mu, fib.p, fib.q);
    const CMat lift = phi_derivation_lift(fib.phi, fib.q, a);
    const CMat isl =
        CMat::Identity(fib.dim / fib.phi_rank, fib.dim / fib.phi_rank);
    out += kron(isl, lift);
  }
  return out;
}

CMat phi_curvature_lift_at(const GridGeometryCache& cache,
                           const GradedFiber& fib, std::size_t pt, int mu,
                           int nu) {
  if (fib.p != cache.p || fib.q != cache.q)
    throw std::invalid_argument("curvature lift: fiber/cache rank mismatch");
  if (fib.phi.is_trivial()) return CMat::Zero(fib.dim, fib.dim);
  CMat a(fib.q, fib.q);
  for (int s = 0; s < fib.q; ++s)
    for (int t = 0; t < fib.q; ++t)
      a(t, s) = cache.curv_p_at(pt, mu, nu, s, t);
  const CMat lift = phi_derivation_lift(fib.phi, fib.q, a);
  const CMat isl =
      CMat::Identity(fib.dim / fib.phi_rank, fib.dim / fib.phi_rank);
  return kron(isl, lift);
}

}  // namespace folia
