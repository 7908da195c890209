#include "folia/almost.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace folia {

namespace {

std::string triple(int a, int b, int k) {
  std::ostringstream os;
  os << "(" << a << "," << b << "," << k << ")";
  return os.str();
}

std::string rat_str(const Rational& r) {
  std::ostringstream os;
  os << r;
  return os.str();
}

std::string index_list(const std::vector<int>& v) {
  std::string s = "{";
  for (size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s + "}";
}

std::string model_label(const SplitFrameModel& m) {
  return m.model.name + "/F1=" + index_list(m.first) + "/F2=" + index_list(m.second);
}

// aggregate a law over many components, remembering the first failure
struct LawAccum {
  std::string law;
  explicit LawAccum(std::string l) : law(std::move(l)) {}
  long checked = 0;
  bool pass = true;
  std::string subject, detail;
  void check(bool ok, const std::string& subj, const std::string& det) {
    ++checked;
    if (ok || !pass) return;
    pass = false;
    subject = subj;
    detail = det;
  }
  void push(CheckReport& rep) const {
    rep.add(law, pass ? "all" : subject, pass,
            pass ? std::to_string(checked) + " components" : detail);
  }
};

// sqrt of a nonnegative rational when it is again rational
bool rational_sqrt(const Rational& g, Rational* out) {
  if (g < 0) return false;
  BigInt num = boost::multiprecision::numerator(g);
  BigInt den = boost::multiprecision::denominator(g);
  BigInt rn = boost::multiprecision::sqrt(num);
  BigInt rd = boost::multiprecision::sqrt(den);
  if (rn * rn != num || rd * rd != den) return false;
  *out = Rational(rn, rd);
  return true;
}

void require_almost_isometric(const SplitFrameModel& m, const char* op) {
  CheckReport rep = almost_isometric_check(m);
  if (rep.all_pass()) return;
  for (const auto& row : rep.rows)
    if (!row.pass)
      throw std::invalid_argument(std::string(op) + ": split is not almost isometric: " +
                                  row.law + " fails at " + row.subject + " (" + row.detail +
                                  ")");
  throw std::invalid_argument(std::string(op) + ": split is not almost isometric");
}

// least-squares slope of log(value) against log(param) over positive rows
double loglog_slope(const std::vector<std::pair<double, double>>& rows, bool* defined) {
  std::vector<double> lx, ly;
  for (const auto& [p, v] : rows)
    if (v > 1e-14) {
      lx.push_back(std::log(p));
      ly.push_back(std::log(v));
    }
  double mx = 0, my = 0;
  for (size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  if (!lx.empty()) {
    mx /= static_cast<double>(lx.size());
    my /= static_cast<double>(lx.size());
  }
  double sxx = 0, sxy = 0;
  for (size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  *defined = lx.size() >= 2 && sxx > 1e-12;
  return *defined ? sxy / sxx : 0.0;
}

// monic characteristic polynomial coefficients (ascending order, rational and
// therefore exact) via the Faddeev-LeVerrier trace recurrence
std::vector<Rational> charpoly_coeffs(const RatMat& w) {
  const int q = w.rows();
  auto trace = [&](const RatMat& m) {
    Rational t = 0;
    for (int i = 0; i < q; ++i) t += m(i, i);
    return t;
  };
  std::vector<Rational> c(static_cast<size_t>(q) + 1);
  c[q] = 1;
  RatMat m = w;
  c[q - 1] = -trace(m);
  for (int k = 2; k <= q; ++k) {
    RatMat shift = m;
    for (int i = 0; i < q; ++i) shift(i, i) += c[q - k + 1];
    m = w * shift;
    c[q - k] = -trace(m) / Rational(k);
  }
  return c;
}

double poly_eval(const std::vector<double>& c, double x) {
  double v = 0;
  for (size_t k = c.size(); k-- > 0;) v = v * x + c[k];
  return v;
}

double poly_deriv_eval(const std::vector<double>& c, double x) {
  double v = 0;
  for (size_t k = c.size(); k-- > 1;) v = v * x + static_cast<double>(k) * c[k];
  return v;
}

double newton_polish(const std::vector<double>& c, double x0) {
  double x = x0;
  for (int it = 0; it < 50; ++it) {
    double f = poly_eval(c, x);
    double fp = poly_deriv_eval(c, x);
    if (std::abs(fp) < 1e-300) break;
    double dx = f / fp;
    x -= dx;
    if (std::abs(dx) <= 1e-16 * (1.0 + std::abs(x))) break;
  }
  return std::abs(poly_eval(c, x)) <= std::abs(poly_eval(c, x0)) ? x : x0;
}

// omega of a frame model reduced to structure constants: in an orthonormal
// frame the Koszul formula collapses the metric derivative to
// omega(x)(u,v) = -(c(x,v,u) + c(x,u,v))
double scaled_omega_entry(const Tensor3<Rational>& c, int x, int u, int v, double su,
                          double sv) {
  return -(to_double(Rational(c(x, v, u))) * sv / su +
           to_double(Rational(c(x, u, v))) * su / sv);
}

double norm_from_omega(const Tensor3<Rational>& w, int n, int p) {
  double best = 0;
  const int q = n - p;
  for (int x = 0; x < p; ++x) {
    RatMat wx(q, q);
    for (int u = 0; u < q; ++u)
      for (int v = 0; v < q; ++v) wx(u, v) = w(x, p + u, p + v);
    best = std::max(best, symmetric_opnorm(wx));
  }
  return best;
}

}  // namespace

SplitFrameModel SplitFrameModel::make(LieFrameModel m, std::vector<int> first,
                                      std::vector<int> second) {
  if (first.empty() || second.empty())
    throw std::invalid_argument("split model: both transverse blocks must be nonempty");
  std::vector<int> all = first;
  all.insert(all.end(), second.begin(), second.end());
  std::sort(all.begin(), all.end());
  if (static_cast<int>(all.size()) != m.q())
    throw std::invalid_argument("split model: blocks must partition the transverse indices");
  for (int i = 0; i < m.q(); ++i)
    if (all[static_cast<size_t>(i)] != m.p + i)
      throw std::invalid_argument("split model: blocks must partition the transverse indices");
  SplitFrameModel out;
  out.model = std::move(m);
  out.first = std::move(first);
  out.second = std::move(second);
  return out;
}

CheckReport almost_isometric_check(const SplitFrameModel& m) {
  CheckReport rep{"almost_isometric", model_label(m), {}};
  const auto& c = m.model.c;
  const int p = m.model.p;

  // bracket form of the conditions: within each block the leafwise Lie
  // derivative of the metric vanishes; across the blocks transport never
  // maps the first block into the second
  LawAccum metric_law("block_metric_invariance");
  LawAccum tri_law("block_triangularity");
  for (int x = 0; x < p; ++x) {
    for (const auto* block : {&m.first, &m.second})
      for (int u : *block)
        for (int v : *block) {
          Rational s = c(x, u, v) + c(x, v, u);
          metric_law.check(s == 0, triple(x, u, v), "symmetric part " + rat_str(s));
        }
    for (int u : m.first)
      for (int v : m.second)
        tri_law.check(c(x, u, v) == 0, triple(x, u, v),
                      "bracket component " + rat_str(c(x, u, v)));
  }
  metric_law.push(rep);
  tri_law.push(rep);

  // equivalent covariant forms through the Levi-Civita connection
  FrameConnection fc = frame_connection(m.model);
  LawAccum sym_law("block_connection_symmetrization");
  LawAccum cross_law("cross_connection_exchange");
  for (int x = 0; x < p; ++x) {
    for (const auto* block : {&m.first, &m.second})
      for (int u : *block)
        for (int v : *block) {
          Rational s = fc.base(u, v, x) + fc.base(v, u, x);
          sym_law.check(s == 0, triple(x, u, v), "symmetrized coefficient " + rat_str(s));
        }
    for (int u : m.first)
      for (int v : m.second) {
        Rational s = fc.base(x, u, v) + fc.base(u, v, x);
        cross_law.check(s == 0, triple(x, u, v), "exchange defect " + rat_str(s));
      }
  }
  sym_law.push(rep);
  cross_law.push(rep);
  return rep;
}

Tensor3<Rational> split_omega(const SplitFrameModel& m) {
  require_almost_isometric(m, "split omega");
  const auto& c = m.model.c;
  Tensor3<Rational> w(m.model.n);
  // only the cross block survives; the metric-derivative normalization of
  // omega carries the bracket pairing with weight 1 per index order
  for (int x = 0; x < m.model.p; ++x)
    for (int u : m.first)
      for (int v : m.second) {
        w(x, u, v) = -c(x, v, u);
        w(x, v, u) = w(x, u, v);
      }
  return w;
}

CheckReport split_omega_check(const SplitFrameModel& m, int vector_trials, unsigned seed) {
  CheckReport rep{"split_omega", model_label(m), {}};
  Tensor3<Rational> ws = split_omega(m);
  Tensor3<Rational> wm = omega_tensor(m.model);
  const int n = m.model.n, p = m.model.p;

  LawAccum red("split_omega_reduction");
  for (int x = 0; x < p; ++x)
    for (int u = p; u < n; ++u)
      for (int v = p; v < n; ++v)
        red.check(ws(x, u, v) == wm(x, u, v), triple(x, u, v),
                  "split " + rat_str(ws(x, u, v)) + " metric " + rat_str(wm(x, u, v)));
  red.push(rep);

  // the quadratic form on random (dyadic, so exact) vectors equals twice the
  // bracket pairing of the block components
  LawAccum quad("split_omega_quadratic");
  std::mt19937_64 rng(seed);
  auto dyadic = [&]() { return Rational(static_cast<int>(rng() % 33) - 16, 16); };
  for (int trial = 0; trial < vector_trials; ++trial) {
    std::vector<Rational> xv(static_cast<size_t>(p));
    std::vector<Rational> uv(static_cast<size_t>(n));
    for (int i = 0; i < p; ++i) xv[static_cast<size_t>(i)] = dyadic();
    for (int u = p; u < n; ++u) uv[static_cast<size_t>(u)] = dyadic();
    Rational lhs = 0;
    for (int x = 0; x < p; ++x)
      for (int u = p; u < n; ++u)
        for (int v = p; v < n; ++v)
          lhs += xv[static_cast<size_t>(x)] * uv[static_cast<size_t>(u)] *
                 uv[static_cast<size_t>(v)] * wm(x, u, v);
    Rational rhs = 0;
    for (int x = 0; x < p; ++x)
      for (int v : m.second)
        for (int u : m.first)
          rhs += xv[static_cast<size_t>(x)] * uv[static_cast<size_t>(v)] *
                 uv[static_cast<size_t>(u)] * m.model.c(x, v, u);
    rhs *= Rational(-2);
    quad.check(lhs == rhs, "trial " + std::to_string(trial),
               "quadratic " + rat_str(lhs) + " bracket form " + rat_str(rhs));
  }
  quad.push(rep);
  return rep;
}

SplitFrameModel gamma_rescaled_model(const SplitFrameModel& m, const Rational& rho) {
  if (rho <= 0)
    throw std::invalid_argument("gamma rescale: scale factor must be positive");
  const int n = m.model.n;
  std::vector<char> shrink(static_cast<size_t>(n), 0);
  for (int i : m.second) shrink[static_cast<size_t>(i)] = 1;
  Tensor3<Rational> cg(n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int k = 0; k < n; ++k) {
        Rational v = m.model.c(a, b, k);
        if (v == 0) continue;
        if (shrink[static_cast<size_t>(a)]) v *= rho;
        if (shrink[static_cast<size_t>(b)]) v *= rho;
        if (shrink[static_cast<size_t>(k)]) v /= rho;
        cg(a, b, k) = v;
      }
  LieFrameModel mg =
      LieFrameModel::make(n, m.model.p, std::move(cg), m.model.name + "_gamma");
  return SplitFrameModel::make(std::move(mg), m.first, m.second);
}

double symmetric_opnorm(const RatMat& w) {
  const int q = w.rows();
  if (q != w.cols()) throw std::invalid_argument("opnorm: matrix must be square");
  for (int i = 0; i < q; ++i)
    for (int j = i + 1; j < q; ++j)
      if (!(w(i, j) == w(j, i)))
        throw std::invalid_argument("opnorm: matrix must be symmetric");
  if (q == 0) return 0.0;

  Eigen::MatrixXd wd(q, q);
  for (int i = 0; i < q; ++i)
    for (int j = 0; j < q; ++j) wd(i, j) = to_double(w(i, j));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(wd);

  if (q <= 4) {
    // roots of the exact characteristic polynomial, seeded by the numeric
    // eigenvalues and polished on the exact coefficients
    std::vector<Rational> cr = charpoly_coeffs(w);
    std::vector<double> cd(cr.size());
    for (size_t k = 0; k < cr.size(); ++k) cd[k] = to_double(cr[k]);
    double best = 0;
    for (int i = 0; i < q; ++i)
      best = std::max(best, std::abs(newton_polish(cd, es.eigenvalues()[i])));
    return best;
  }

  int arg = 0;
  for (int i = 1; i < q; ++i)
    if (std::abs(es.eigenvalues()[i]) > std::abs(es.eigenvalues()[arg])) arg = i;
  double lambda = es.eigenvalues()[arg];
  Eigen::VectorXd v = es.eigenvectors().col(arg);
  double residual = (wd * v - lambda * v).norm();
  if (residual > 1e-10 * std::max(1.0, wd.norm()))
    throw std::runtime_error("opnorm: eigensolve residual not certified");
  return std::abs(lambda);
}

double omega_frame_norm(const LieFrameModel& m) {
  return norm_from_omega(omega_tensor(m), m.n, m.p);
}

GammaLawReport gamma_rescale_scaling_law(const SplitFrameModel& m,
                                         const std::vector<Rational>& gammas) {
  require_almost_isometric(m, "gamma scaling law");
  const int n = m.model.n, p = m.model.p;
  Tensor3<Rational> w = omega_tensor(m.model);

  GammaLawReport rep;
  rep.model = model_label(m);
  rep.base_norm = norm_from_omega(w, n, p);

  for (const Rational& gamma : gammas) {
    if (gamma <= 0)
      throw std::invalid_argument("gamma scaling law: gamma must be positive");
    GammaLawRow row;
    row.gamma = gamma;
    Rational rho;
    if (rational_sqrt(gamma, &rho)) {
      SplitFrameModel mg = gamma_rescaled_model(m, rho);
      Tensor3<Rational> wg = omega_tensor(mg.model);
      row.exact = true;
      for (int x = 0; x < p && row.exact; ++x)
        for (int u = p; u < n && row.exact; ++u)
          for (int v = p; v < n; ++v)
            if (!(wg(x, u, v) == rho * w(x, u, v))) {
              row.exact = false;
              break;
            }
      if (!row.exact) {
        rep.all_square_exact = false;
        for (int x = 0; x < p; ++x)
          for (int u = p; u < n; ++u)
            for (int v = p; v < n; ++v)
              row.matrix_residual =
                  std::max(row.matrix_residual,
                           std::abs(to_double(Rational(wg(x, u, v) - rho * w(x, u, v)))));
      }
      row.omega_norm = norm_from_omega(wg, n, p);
      row.predicted = to_double(rho) * rep.base_norm;
    } else {
      // irrational sqrt: evaluate omega of the rescaled frame numerically
      double rho_d = std::sqrt(to_double(gamma));
      std::vector<char> shrink(static_cast<size_t>(n), 0);
      for (int i : m.second) shrink[static_cast<size_t>(i)] = 1;
      auto scale = [&](int idx) { return shrink[static_cast<size_t>(idx)] ? rho_d : 1.0; };
      double norm = 0;
      for (int x = 0; x < p; ++x) {
        const int q = n - p;
        RatMat wx(q, q);
        for (int u = p; u < n; ++u)
          for (int v = p; v < n; ++v) {
            double entry = scaled_omega_entry(m.model.c, x, u, v, scale(u), scale(v));
            row.matrix_residual =
                std::max(row.matrix_residual,
                         std::abs(entry - rho_d * to_double(Rational(w(x, u, v)))));
            wx(u - p, v - p) = Rational(entry);
          }
        norm = std::max(norm, symmetric_opnorm(wx));
      }
      row.omega_norm = norm;
      row.predicted = rho_d * rep.base_norm;
    }
    rep.max_matrix_residual = std::max(rep.max_matrix_residual, row.matrix_residual);
    rep.rows.push_back(row);
  }

  std::vector<std::pair<double, double>> pts;
  for (const auto& row : rep.rows) pts.emplace_back(to_double(row.gamma), row.omega_norm);
  rep.fitted_slope = loglog_slope(pts, &rep.slope_defined);

  rep.passed = true;
  for (const auto& row : rep.rows) {
    if (!row.exact && row.matrix_residual >= 1e-12) rep.passed = false;
    if (std::abs(row.omega_norm - row.predicted) > 1e-12 * std::max(1.0, rep.base_norm))
      rep.passed = false;
  }
  if (!rep.all_square_exact) rep.passed = false;
  if (rep.slope_defined && std::abs(rep.fitted_slope - 0.5) >= 1e-10) rep.passed = false;
  return rep;
}

ArReport almost_riemannian_check(const MetricFamily& fam, double threshold) {
  if (fam.schedule.empty())
    throw std::invalid_argument("metric family: schedule must be nonempty");
  for (size_t i = 0; i < fam.schedule.size(); ++i) {
    if (fam.schedule[i] <= 0)
      throw std::invalid_argument("metric family: schedule entries must be positive");
    if (i && fam.schedule[i] >= fam.schedule[i - 1])
      throw std::invalid_argument("metric family: schedule must decrease strictly");
  }
  const bool has_lie = static_cast<bool>(fam.lie_map);
  const bool has_grid = static_cast<bool>(fam.grid_map);
  if (has_lie == has_grid)
    throw std::invalid_argument("metric family: exactly one model map is required");

  ArReport rep;
  rep.family = fam.name;
  rep.threshold = threshold;

  if (has_lie) {
    LieFrameModel base = fam.lie_map(fam.schedule.front());
    for (double sigma : fam.schedule) {
      LieFrameModel mm = fam.lie_map(sigma);
      if (mm.n != base.n || mm.p != base.p)
        throw std::invalid_argument("metric family: model shape varies along the schedule");
      for (int i = 0; i < base.p; ++i)
        for (int j = 0; j < base.p; ++j)
          for (int k = 0; k < base.p; ++k)
            if (!(mm.c(i, j, k) == base.c(i, j, k)))
              throw std::invalid_argument(
                  "metric family: leaf geometry varies along the schedule");
      rep.rows.push_back({sigma, omega_frame_norm(mm)});
    }
  } else {
    CoordFoliatedTorus base = fam.grid_map(fam.schedule.front());
    for (double sigma : fam.schedule) {
      CoordFoliatedTorus mm = fam.grid_map(sigma);
      if (mm.p != base.p || mm.q != base.q)
        throw std::invalid_argument("metric family: model shape varies along the schedule");
      int N = std::max(fam.grid_resolution, min_grid_size(mm));
      GridGeometryCache cache = build_cache(mm, N);
      std::size_t stride = std::max<std::size_t>(1, cache.npoints / 256);
      for (std::size_t pt = 0; pt < cache.npoints; pt += stride) {
        std::vector<double> x = cache.grid_coords(pt);
        for (int i = 0; i < base.p; ++i)
          for (int j = 0; j < base.p; ++j)
            if (std::abs(mm.gf_at(i, j).eval(x) - base.gf_at(i, j).eval(x)) > 1e-14)
              throw std::invalid_argument(
                  "metric family: leaf metric varies along the schedule");
      }
      rep.rows.push_back({sigma, omega_sup_norm(cache)});
    }
  }

  rep.trivially_riemannian = true;
  for (const auto& row : rep.rows)
    if (row.omega_norm > 1e-14) rep.trivially_riemannian = false;
  if (rep.trivially_riemannian) {
    rep.below_threshold = true;
    rep.passed = true;
    return rep;
  }

  rep.decreasing = true;
  for (size_t i = 1; i < rep.rows.size(); ++i)
    if (rep.rows[i].omega_norm >= rep.rows[i - 1].omega_norm) rep.decreasing = false;
  rep.below_threshold = rep.rows.back().omega_norm < threshold;
  std::vector<std::pair<double, double>> pts;
  for (const auto& row : rep.rows) pts.emplace_back(row.sigma, row.omega_norm);
  bool defined = false;
  rep.fitted_exponent = loglog_slope(pts, &defined);
  rep.passed = rep.decreasing && rep.below_threshold;
  return rep;
}

MetricFamily construct_ar_structure(const SplitFrameModel& m) {
  require_almost_isometric(m, "ar structure");
  MetricFamily fam;
  fam.name = m.model.name + "_gamma_family";
  fam.schedule = {1.0, 0.25, 0.0625, 0.015625, 0.00390625};
  fam.lie_map = [m](double gamma) {
    Rational g(gamma), rho;
    if (!rational_sqrt(g, &rho))
      throw std::domain_error("gamma family: gamma must be a rational square");
    return gamma_rescaled_model(m, rho).model;
  };
  return fam;
}

SplitFrameModel random_almost_isometric_model(std::mt19937_64& rng, int p, int q1,
                                              int q2) {
  if (p < 1 || q1 < 1 || q2 < 1)
    throw std::invalid_argument("random split model: need p, q1, q2 >= 1");
  const int q = q1 + q2;
  const int n = p + q;
  auto coeff = [&]() { return Rational(static_cast<int>(rng() % 9) - 4, 4); };

  // block-triangular derivation with skew diagonal blocks, resampled until
  // the coupling block is nonzero so omega has content
  std::vector<Rational> a(static_cast<size_t>(q) * q);
  auto at = [&](int i, int j) -> Rational& { return a[static_cast<size_t>(i) * q + j]; };
  for (int i = 0; i < q1; ++i)
    for (int j = i + 1; j < q1; ++j) {
      Rational r = coeff();
      at(i, j) = r;
      at(j, i) = -r;
    }
  for (int i = q1; i < q; ++i)
    for (int j = i + 1; j < q; ++j) {
      Rational r = coeff();
      at(i, j) = r;
      at(j, i) = -r;
    }
  bool coupled = false;
  while (!coupled)
    for (int i = 0; i < q1; ++i)
      for (int j = q1; j < q; ++j) {
        at(i, j) = coeff();
        if (at(i, j) != 0) coupled = true;
      }

  // either several leaf directions act by proportional derivations, or a
  // single direction acts and also twists into the central leaf directions;
  // both choices keep the bracket a Lie bracket
  bool leaf_twist = p >= 2 && (rng() & 1u);
  std::vector<Rational> alpha(static_cast<size_t>(p));
  alpha[0] = 1;
  if (!leaf_twist) {
    for (int i = 1; i < p; ++i) alpha[static_cast<size_t>(i)] = Rational(static_cast<int>(rng() % 5) - 2, 2);
  }

  Tensor3<Rational> c(n);
  for (int x = 0; x < p; ++x) {
    if (alpha[static_cast<size_t>(x)] == 0) continue;
    for (int u = 0; u < q; ++u)
      for (int v = 0; v < q; ++v) {
        Rational entry = alpha[static_cast<size_t>(x)] * at(v, u);
        if (entry == 0) continue;
        c(x, p + u, p + v) = entry;
        c(p + u, x, p + v) = -entry;
      }
  }
  if (leaf_twist) {
    for (int j = 1; j < p; ++j)
      for (int u = 0; u < q; ++u) {
        Rational entry = coeff();
        if (entry == 0) continue;
        c(0, p + u, j) = entry;
        c(p + u, 0, j) = -entry;
      }
  }

  LieFrameModel m = LieFrameModel::make(n, p, std::move(c), "random_almost_isometric");
  std::vector<int> first, second;
  for (int i = 0; i < q1; ++i) first.push_back(p + i);
  for (int i = q1; i < q; ++i) second.push_back(p + i);
  return SplitFrameModel::make(std::move(m), std::move(first), std::move(second));
}

CheckReport verify_almost_suite(const SplitFrameModel& m,
                                const std::vector<Rational>& gammas) {
  CheckReport rep = almost_isometric_check(m);
  rep.suite = "almost_structures";
  if (!rep.all_pass()) {
    rep.add("split_omega_reduction", "skipped", false, "split is not almost isometric");
    rep.add("sqrt_gamma_scaling", "skipped", false, "split is not almost isometric");
    rep.add("ar_family_certified", "skipped", false, "split is not almost isometric");
    return rep;
  }
  rep.merge(split_omega_check(m));

  GammaLawReport law = gamma_rescale_scaling_law(m, gammas);
  bool rows_ok = law.all_square_exact;
  for (const auto& row : law.rows) {
    if (!row.exact && row.matrix_residual >= 1e-12) rows_ok = false;
    if (std::abs(row.omega_norm - row.predicted) > 1e-12 * std::max(1.0, law.base_norm))
      rows_ok = false;
  }
  rep.add("sqrt_gamma_scaling", "all", rows_ok,
          "base=" + format_double(law.base_norm) +
              " max_residual=" + format_double(law.max_matrix_residual));
  bool slope_ok = !law.slope_defined || std::abs(law.fitted_slope - 0.5) < 1e-10;
  rep.add("sqrt_gamma_slope", "all", slope_ok,
          law.slope_defined ? "slope=" + format_double(law.fitted_slope)
                            : "degenerate (omega = 0)");

  MetricFamily fam = construct_ar_structure(m);
  double threshold = law.base_norm > 0 ? law.base_norm / 10 : 0.1;
  ArReport ar = almost_riemannian_check(fam, threshold);
  rep.add("ar_family_certified", fam.name, ar.passed,
          "exponent=" + format_double(ar.fitted_exponent) +
              " final=" + format_double(ar.rows.empty() ? 0.0 : ar.rows.back().omega_norm));
  return rep;
}

}  // namespace folia
