#include "folia/chern_weil.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

#include "folia/fft_grid.hpp"

namespace folia {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

long long choose(int n, int k) {
  if (k < 0 || k > n) return 0;
  long long r = 1;
  for (int i = 0; i < k; ++i) r = r * (n - i) / (i + 1);
  return r;
}

std::vector<std::vector<int>> k_combos(int n, int k) {
  std::vector<std::vector<int>> out;
  if (k < 0 || k > n) return out;
  std::vector<int> c(k);
  for (int i = 0; i < k; ++i) c[i] = i;
  while (true) {
    out.push_back(c);
    int i = k - 1;
    while (i >= 0 && c[i] == n - k + i) --i;
    if (i < 0) break;
    ++c[i];
    for (int j = i + 1; j < k; ++j) c[j] = c[j - 1] + 1;
  }
  return out;
}

// lexicographic rank of a sorted index tuple among all k-combos of {0..n-1}
int combo_rank(const std::vector<int>& c, int n) {
  int k = static_cast<int>(c.size()), rank = 0, prev = 0;
  for (int i = 0; i < k; ++i) {
    for (int v = prev; v < c[i]; ++v)
      rank += static_cast<int>(choose(n - 1 - v, k - 1 - i));
    prev = c[i] + 1;
  }
  return rank;
}

// merge two sorted disjoint tuples, returning the permutation parity of the
// concatenation relative to the sorted result; -2 flags a shared index
int merge_sign(const std::vector<int>& a, const std::vector<int>& b,
               std::vector<int>& out) {
  out.clear();
  std::size_t i = 0, j = 0;
  long long inversions = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] == b[j]) return -2;
    if (a[i] < b[j]) {
      out.push_back(a[i++]);
    } else {
      out.push_back(b[j++]);
      inversions += static_cast<long long>(a.size() - i);
    }
  }
  while (i < a.size()) out.push_back(a[i++]);
  while (j < b.size()) out.push_back(b[j++]);
  return (inversions % 2 == 0) ? 1 : -1;
}

void require_same_grid(const FormField& a, const FormField& b) {
  if (a.nvars != b.nvars || a.grid_size != b.grid_size)
    throw std::invalid_argument("form fields live on different grids");
}

int pair_rank(int mu, int nu, int n) {
  // lexicographic rank of (mu, nu) with mu < nu; matches degree-2 combos
  return mu * n - mu * (mu + 1) / 2 + (nu - mu - 1);
}

}  // namespace

FormField FormField::zero(int nvars, int degree, int grid_size) {
  FormField f;
  f.nvars = nvars;
  f.degree = degree;
  f.grid_size = grid_size;
  f.npoints = 1;
  for (int i = 0; i < nvars; ++i) f.npoints *= grid_size;
  f.combos = k_combos(nvars, degree);
  f.comps.assign(f.combos.size(), std::vector<double>(f.npoints, 0.0));
  return f;
}

FormField FormField::constant(int nvars, int grid_size, double value) {
  FormField f = zero(nvars, 0, grid_size);
  std::fill(f.comps[0].begin(), f.comps[0].end(), value);
  return f;
}

int FormField::combo_index(const std::vector<int>& idx) const {
  if (static_cast<int>(idx.size()) != degree) return -1;
  return combo_rank(idx, nvars);
}

double FormField::sup_norm() const {
  double m = 0;
  for (const auto& c : comps)
    for (double v : c) m = std::max(m, std::abs(v));
  return m;
}

FormField& FormField::operator+=(const FormField& other) {
  require_same_grid(*this, other);
  if (degree != other.degree)
    throw std::invalid_argument("adding forms of different degree");
  for (std::size_t i = 0; i < comps.size(); ++i)
    for (std::size_t pt = 0; pt < npoints; ++pt)
      comps[i][pt] += other.comps[i][pt];
  return *this;
}

FormField& FormField::operator*=(double s) {
  for (auto& c : comps)
    for (double& v : c) v *= s;
  return *this;
}

FormField wedge(const FormField& a, const FormField& b) {
  require_same_grid(a, b);
  FormField out = FormField::zero(a.nvars, a.degree + b.degree, a.grid_size);
  if (out.empty()) return out;
  std::vector<int> merged;
  for (std::size_t ia = 0; ia < a.comps.size(); ++ia) {
    for (std::size_t ib = 0; ib < b.comps.size(); ++ib) {
      int sign = merge_sign(a.combos[ia], b.combos[ib], merged);
      if (sign == -2) continue;
      auto& dst = out.comps[combo_rank(merged, a.nvars)];
      const auto& fa = a.comps[ia];
      const auto& fb = b.comps[ib];
      if (sign > 0) {
        for (std::size_t pt = 0; pt < out.npoints; ++pt)
          dst[pt] += fa[pt] * fb[pt];
      } else {
        for (std::size_t pt = 0; pt < out.npoints; ++pt)
          dst[pt] -= fa[pt] * fb[pt];
      }
    }
  }
  return out;
}

FormField exterior_derivative(const FormField& a) {
  FormField out = FormField::zero(a.nvars, a.degree + 1, a.grid_size);
  if (out.empty() || a.empty()) return out;
  FftGrid grid(a.nvars, a.grid_size);
  std::vector<double> deriv(a.npoints);
  std::vector<int> target;
  for (std::size_t ic = 0; ic < a.comps.size(); ++ic) {
    const auto& c = a.combos[ic];
    for (int m = 0; m < a.nvars; ++m) {
      if (std::binary_search(c.begin(), c.end(), m)) continue;
      // dx^m wedged past every index of c that is smaller than m
      int below = static_cast<int>(
          std::lower_bound(c.begin(), c.end(), m) - c.begin());
      double sign = (below % 2 == 0) ? 1.0 : -1.0;
      target = c;
      target.insert(target.begin() + below, m);
      grid.derivative_real(m, a.comps[ic].data(), deriv.data());
      auto& dst = out.comps[combo_rank(target, a.nvars)];
      for (std::size_t pt = 0; pt < a.npoints; ++pt)
        dst[pt] += sign * deriv[pt];
    }
  }
  return out;
}

double integrate_top(const FormField& a) {
  if (a.degree != a.nvars)
    throw std::invalid_argument("integrate_top needs a top-degree form");
  double s = 0;
  for (double v : a.comps[0]) s += v;
  return s / static_cast<double>(a.npoints);
}

double closure_residual(const FormField& a) {
  if (a.degree >= a.nvars) return 0.0;
  return exterior_derivative(a).sup_norm();
}

const FormField* MixedForm::part_of_degree(int k) const {
  for (const auto& p : parts)
    if (p.degree == k) return &p;
  return nullptr;
}

MixedForm& MixedForm::add(FormField f) {
  if (parts.empty()) {
    nvars = f.nvars;
    grid_size = f.grid_size;
  }
  for (auto& p : parts) {
    if (p.degree == f.degree) {
      p += f;
      return *this;
    }
  }
  parts.push_back(std::move(f));
  std::sort(parts.begin(), parts.end(),
            [](const FormField& x, const FormField& y) {
              return x.degree < y.degree;
            });
  return *this;
}

MixedForm& MixedForm::operator*=(double s) {
  for (auto& p : parts) p *= s;
  return *this;
}

MixedForm mixed_wedge(const MixedForm& a, const MixedForm& b) {
  MixedForm out;
  for (const auto& pa : a.parts) {
    for (const auto& pb : b.parts) {
      if (pa.degree + pb.degree > pa.nvars) continue;
      out.add(wedge(pa, pb));
    }
  }
  return out;
}

double integrate_top(const MixedForm& a) {
  const FormField* top = a.part_of_degree(a.nvars);
  return top ? integrate_top(*top) : 0.0;
}

double closure_residual(const MixedForm& a) {
  double m = 0;
  for (const auto& p : a.parts) m = std::max(m, closure_residual(p));
  return m;
}

CurvatureForm CurvatureForm::zero(int nvars, int grid_size, int rank) {
  CurvatureForm R;
  R.nvars = nvars;
  R.grid_size = grid_size;
  R.rank = rank;
  R.npoints = 1;
  for (int i = 0; i < nvars; ++i) R.npoints *= grid_size;
  R.vals.assign(R.npoints * R.npairs() * rank * rank, 0.0);
  return R;
}

FormField CurvatureForm::entry_form(int a, int b) const {
  FormField f = FormField::zero(nvars, 2, grid_size);
  for (int pair = 0; pair < npairs(); ++pair)
    for (std::size_t pt = 0; pt < npoints; ++pt)
      f.comps[pair][pt] = entry(pt, pair, a, b);
  return f;
}

double CurvatureForm::max_skew_defect() const {
  double m = 0;
  for (std::size_t pt = 0; pt < npoints; ++pt)
    for (int pair = 0; pair < npairs(); ++pair)
      for (int a = 0; a < rank; ++a)
        for (int b = a; b < rank; ++b)
          m = std::max(m, std::abs(entry(pt, pair, a, b) +
                                   entry(pt, pair, b, a)));
  return m;
}

CurvatureForm leaf_bundle_curvature(const GridGeometryCache& cache) {
  CurvatureForm R = CurvatureForm::zero(cache.n(), cache.N, cache.p);
  for (std::size_t pt = 0; pt < cache.npoints; ++pt) {
    int pair = 0;
    for (int mu = 0; mu < cache.n(); ++mu)
      for (int nu = mu + 1; nu < cache.n(); ++nu, ++pair)
        for (int i = 0; i < cache.p; ++i)
          for (int j = 0; j < cache.p; ++j)
            R.entry(pt, pair, i, j) = cache.curv_f_at(pt, mu, nu, i, j);
  }
  return R;
}

CurvatureForm normal_bundle_curvature(const GridGeometryCache& cache) {
  CurvatureForm R = CurvatureForm::zero(cache.n(), cache.N, cache.q);
  for (std::size_t pt = 0; pt < cache.npoints; ++pt) {
    int pair = 0;
    for (int mu = 0; mu < cache.n(); ++mu)
      for (int nu = mu + 1; nu < cache.n(); ++nu, ++pair)
        for (int s = 0; s < cache.q; ++s)
          for (int t = 0; t < cache.q; ++t)
            R.entry(pt, pair, s, t) = cache.curv_p_at(pt, mu, nu, s, t);
  }
  return R;
}

CurvatureForm phi_bundle_curvature(const GridGeometryCache& cache,
                                   const PhiBundleSpec& phi) {
  const int q = cache.q;
  const int r = phi.rank(q);
  CurvatureForm R = CurvatureForm::zero(cache.n(), cache.N, r);
  if (phi.is_trivial()) return R;
  CMat base(q, q);
  for (std::size_t pt = 0; pt < cache.npoints; ++pt) {
    int pair = 0;
    for (int mu = 0; mu < cache.n(); ++mu) {
      for (int nu = mu + 1; nu < cache.n(); ++nu, ++pair) {
        for (int s = 0; s < q; ++s)
          for (int t = 0; t < q; ++t)
            base(t, s) = cache.curv_p_at(pt, mu, nu, s, t);
        CMat lift = phi_derivation_lift(phi, q, base);
        for (int a = 0; a < r; ++a)
          for (int b = 0; b < r; ++b)
            R.entry(pt, pair, a, b) = lift(b, a).real();
      }
    }
  }
  return R;
}

CurvatureForm tangent_bundle_curvature(const GridGeometryCache& cache) {
  const int n = cache.n();
  const std::size_t np = cache.npoints;
  CurvatureForm R = CurvatureForm::zero(n, cache.N, n);
  FftGrid grid(n, cache.N);

  // derivative terms: d_mu conn(nu, a, b) - d_nu conn(mu, a, b)
  std::vector<std::complex<double>> in(np);
  std::vector<std::vector<std::complex<double>>> grads(
      n, std::vector<std::complex<double>>(np));
  std::vector<std::complex<double>*> outs(n);
  for (int m = 0; m < n; ++m) outs[m] = grads[m].data();
  for (int src = 0; src < n; ++src) {
    for (int a = 0; a < n; ++a) {
      for (int b = 0; b < n; ++b) {
        for (std::size_t pt = 0; pt < np; ++pt)
          in[pt] = cache.conn_at(pt, src, a, b);
        grid.gradient(in.data(), outs);
        for (int mu = 0; mu < n; ++mu) {
          if (mu == src) continue;
          if (mu < src) {
            int pair = pair_rank(mu, src, n);
            for (std::size_t pt = 0; pt < np; ++pt)
              R.entry(pt, pair, a, b) += grads[mu][pt].real();
          } else {
            int pair = pair_rank(src, mu, n);
            for (std::size_t pt = 0; pt < np; ++pt)
              R.entry(pt, pair, a, b) -= grads[mu][pt].real();
          }
        }
      }
    }
  }

  // commutator of the connection matrices
  for (std::size_t pt = 0; pt < np; ++pt) {
    int pair = 0;
    for (int mu = 0; mu < n; ++mu) {
      for (int nu = mu + 1; nu < n; ++nu, ++pair) {
        for (int a = 0; a < n; ++a) {
          for (int b = 0; b < n; ++b) {
            double s = 0;
            for (int c = 0; c < n; ++c)
              s += cache.conn_at(pt, nu, a, c) * cache.conn_at(pt, mu, c, b) -
                   cache.conn_at(pt, mu, a, c) * cache.conn_at(pt, nu, c, b);
            R.entry(pt, pair, a, b) += s;
          }
        }
      }
    }
  }
  return R;
}

namespace {

double trace_product(const CurvatureForm& R, std::size_t pt, int pair1,
                     int pair2) {
  double s = 0;
  for (int a = 0; a < R.rank; ++a)
    for (int b = 0; b < R.rank; ++b)
      s += R.entry(pt, pair1, a, b) * R.entry(pt, pair2, b, a);
  return s;
}

// perfect matchings of a sorted index tuple with the permutation sign of
// the concatenated pair list relative to the tuple
void enumerate_matchings(std::vector<int> rest, std::vector<int>& pairs,
                         int sign,
                         std::vector<std::pair<std::vector<int>, int>>& out) {
  if (rest.empty()) {
    out.emplace_back(pairs, sign);
    return;
  }
  int first = rest[0];
  for (std::size_t j = 1; j < rest.size(); ++j) {
    // removing position j from behind position 0 crosses j-1 elements
    int s = (j % 2 == 1) ? sign : -sign;
    pairs.push_back(first);
    pairs.push_back(rest[j]);
    std::vector<int> next;
    for (std::size_t t = 1; t < rest.size(); ++t)
      if (t != j) next.push_back(rest[t]);
    enumerate_matchings(std::move(next), pairs, s, out);
    pairs.pop_back();
    pairs.pop_back();
  }
}

}  // namespace

FormField trace_power(const CurvatureForm& R, int k) {
  FormField out = FormField::zero(R.nvars, 2 * k, R.grid_size);
  if (out.empty()) return out;

  if (k == 1) {
    for (int pair = 0; pair < R.npairs(); ++pair)
      for (std::size_t pt = 0; pt < R.npoints; ++pt) {
        double s = 0;
        for (int a = 0; a < R.rank; ++a) s += R.entry(pt, pair, a, a);
        out.comps[pair][pt] = s;
      }
    return out;
  }

  for (std::size_t ic = 0; ic < out.combos.size(); ++ic) {
    const auto& J = out.combos[ic];
    std::vector<std::pair<std::vector<int>, int>> matchings;
    std::vector<int> scratch;
    enumerate_matchings(J, scratch, 1, matchings);
    auto& dst = out.comps[ic];

    if (k == 2) {
      for (const auto& [pairs, sign] : matchings) {
        int p1 = pair_rank(pairs[0], pairs[1], R.nvars);
        int p2 = pair_rank(pairs[2], pairs[3], R.nvars);
        // both orderings of the two factors share one trace
        double w = 2.0 * sign;
        for (std::size_t pt = 0; pt < R.npoints; ++pt)
          dst[pt] += w * trace_product(R, pt, p1, p2);
      }
      continue;
    }

    for (const auto& [pairs, sign] : matchings) {
      std::vector<int> ranks(k);
      for (int t = 0; t < k; ++t)
        ranks[t] = pair_rank(pairs[2 * t], pairs[2 * t + 1], R.nvars);
      std::sort(ranks.begin(), ranks.end());
      do {
        for (std::size_t pt = 0; pt < R.npoints; ++pt) {
          Eigen::MatrixXd prod =
              Eigen::MatrixXd::Identity(R.rank, R.rank);
          for (int t = 0; t < k; ++t) {
            Eigen::MatrixXd m(R.rank, R.rank);
            for (int a = 0; a < R.rank; ++a)
              for (int b = 0; b < R.rank; ++b)
                m(b, a) = R.entry(pt, ranks[t], a, b);
            prod = prod * m;
          }
          dst[pt] += sign * prod.trace();
        }
      } while (std::next_permutation(ranks.begin(), ranks.end()));
    }
  }
  return out;
}

std::vector<FormField> pontryagin_forms(const CurvatureForm& R) {
  if (R.max_skew_defect() > 1e-9)
    throw std::invalid_argument(
        "curvature is not skew in its endomorphism indices");
  const double pi2 = std::numbers::pi * std::numbers::pi;
  FormField t2 = trace_power(R, 2);
  FormField p1 = t2;
  p1 *= -1.0 / (8.0 * pi2);

  FormField p2 = FormField::zero(R.nvars, 8, R.grid_size);
  if (!p2.empty()) {
    FormField t4 = trace_power(R, 4);
    p2 = wedge(t2, t2);
    t4 *= -2.0;
    p2 += t4;
    p2 *= 1.0 / (128.0 * pi2 * pi2);
  }
  return {p1, p2};
}

MixedForm a_hat_form(const CurvatureForm& R) {
  auto p = pontryagin_forms(R);
  MixedForm out;
  out.add(FormField::constant(R.nvars, R.grid_size, 1.0));
  if (!p[0].empty() && p[0].degree <= R.nvars) {
    FormField d4 = p[0];
    d4 *= -1.0 / 24.0;
    out.add(d4);
  }
  if (R.nvars >= 8) {
    FormField d8 = wedge(p[0], p[0]);
    d8 *= 7.0;
    FormField q2 = p[1];
    q2 *= -4.0;
    d8 += q2;
    d8 *= 1.0 / 5760.0;
    out.add(d8);
  }
  return out;
}

MixedForm l_form(const CurvatureForm& R) {
  auto p = pontryagin_forms(R);
  MixedForm out;
  out.add(FormField::constant(R.nvars, R.grid_size, 1.0));
  if (!p[0].empty() && p[0].degree <= R.nvars) {
    FormField d4 = p[0];
    d4 *= 1.0 / 3.0;
    out.add(d4);
  }
  if (R.nvars >= 8) {
    FormField d8 = p[1];
    d8 *= 7.0;
    FormField sq = wedge(p[0], p[0]);
    sq *= -1.0;
    d8 += sq;
    d8 *= 1.0 / 45.0;
    out.add(d8);
  }
  return out;
}

MixedForm ch_form(const CurvatureForm& R) {
  if (R.max_skew_defect() > 1e-9)
    throw std::invalid_argument(
        "curvature is not skew in its endomorphism indices");
  const double pi2 = std::numbers::pi * std::numbers::pi;
  MixedForm out;
  out.add(FormField::constant(R.nvars, R.grid_size,
                              static_cast<double>(R.rank)));
  if (R.nvars >= 4) {
    FormField d4 = trace_power(R, 2);
    d4 *= -1.0 / (8.0 * pi2);
    out.add(d4);
  }
  if (R.nvars >= 8) {
    FormField d8 = trace_power(R, 4);
    d8 *= 1.0 / (384.0 * pi2 * pi2);
    out.add(d8);
  }
  return out;
}

namespace {

// Pfaffian over the index list by expansion along its first row; entries
// are commuting 2-forms, so the classical signs carry over verbatim
FormField pfaffian_of(const CurvatureForm& R, const std::vector<int>& idx) {
  if (idx.empty()) return FormField::constant(R.nvars, R.grid_size, 1.0);
  FormField out =
      FormField::zero(R.nvars, static_cast<int>(idx.size()), R.grid_size);
  for (std::size_t j = 1; j < idx.size(); ++j) {
    std::vector<int> rest;
    for (std::size_t t = 1; t < idx.size(); ++t)
      if (t != j) rest.push_back(idx[t]);
    FormField term = wedge(R.entry_form(idx[0], idx[j]), pfaffian_of(R, rest));
    if (j % 2 == 0) term *= -1.0;
    out += term;
  }
  return out;
}

}  // namespace

FormField euler_form(const CurvatureForm& R) {
  if (R.rank % 2 != 0)
    throw std::invalid_argument("Pfaffian of an odd-rank bundle");
  std::vector<int> idx(R.rank);
  for (int i = 0; i < R.rank; ++i) idx[i] = i;
  FormField e = pfaffian_of(R, idx);
  e *= std::pow(kTwoPi, -R.rank / 2);
  return e;
}

double CharClassReport::max_abs_pairing() const {
  double m = std::max({std::abs(ahat_l_ch), std::abs(ahat_p1_perp),
                       std::abs(ahat_only), std::abs(ahat_tm)});
  if (euler_defined) m = std::max(m, std::abs(ahat_euler));
  return m;
}

CharClassReport vanishing_pairings(const GridGeometryCache& cache,
                                   const PhiBundleSpec& phi,
                                   const std::string& model_name) {
  CharClassReport rep;
  rep.model = model_name;
  rep.N = cache.N;
  rep.epsilon = cache.epsilon;

  CurvatureForm rf = leaf_bundle_curvature(cache);
  CurvatureForm rp = normal_bundle_curvature(cache);
  MixedForm ahat_f = a_hat_form(rf);
  MixedForm l_perp = l_form(rp);

  MixedForm chp = ch_form(phi_bundle_curvature(cache, phi));
  rep.ahat_l_ch = integrate_top(mixed_wedge(mixed_wedge(ahat_f, l_perp), chp));

  MixedForm p1_wrap;
  p1_wrap.add(pontryagin_forms(rp)[0]);
  rep.ahat_p1_perp = integrate_top(mixed_wedge(ahat_f, p1_wrap));
  rep.ahat_only = integrate_top(ahat_f);

  if (cache.q % 2 == 0) {
    MixedForm e_wrap;
    e_wrap.add(euler_form(rp));
    rep.ahat_euler = integrate_top(mixed_wedge(ahat_f, e_wrap));
    rep.euler_defined = true;
  }

  rep.ahat_tm = integrate_top(a_hat_form(tangent_bundle_curvature(cache)));
  return rep;
}

std::vector<std::pair<std::string, double>> integrand_closure_residuals(
    const GridGeometryCache& cache, const PhiBundleSpec& phi) {
  std::vector<std::pair<std::string, double>> out;
  CurvatureForm rf = leaf_bundle_curvature(cache);
  CurvatureForm rp = normal_bundle_curvature(cache);

  out.emplace_back("p1_leaf", closure_residual(pontryagin_forms(rf)[0]));
  out.emplace_back("p1_perp", closure_residual(pontryagin_forms(rp)[0]));
  if (cache.q % 2 == 0)
    out.emplace_back("euler_perp", closure_residual(euler_form(rp)));

  MixedForm chp = ch_form(phi_bundle_curvature(cache, phi));
  out.emplace_back("ch_phi", closure_residual(chp));

  MixedForm total = mixed_wedge(mixed_wedge(a_hat_form(rf), l_form(rp)), chp);
  out.emplace_back("ahat_l_ch", closure_residual(total));

  out.emplace_back(
      "p1_tangent",
      closure_residual(pontryagin_forms(tangent_bundle_curvature(cache))[0]));
  return out;
}

}  // namespace folia
