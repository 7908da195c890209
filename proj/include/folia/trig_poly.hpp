#pragma once

#include <map>
#include <string>
#include <vector>

// Real trigonometric polynomials on the n-torus with unit periods:
//   f(x) = sum_k  a_k cos(2 pi k.x) + b_k sin(2 pi k.x)
// Frequencies are canonicalized so the first nonzero component is positive;
// partial derivatives are exact (frequency-wise), so sampled geometry built
// from these fields has exact derivative values at grid points.

namespace folia {

class TrigPolyField {
public:
  TrigPolyField() = default;
  explicit TrigPolyField(int nvars) : nvars_(nvars) {}
  static TrigPolyField constant(int nvars, double value);

  int nvars() const { return nvars_; }
  bool is_zero() const { return terms_.empty(); }
  int bandwidth() const;  // max infinity-norm of contributing frequencies

  void add_cos(const std::vector<int>& freq, double coeff);
  void add_sin(const std::vector<int>& freq, double coeff);

  double eval(const std::vector<double>& x) const;
  TrigPolyField derivative(int axis) const;

  TrigPolyField operator+(const TrigPolyField& o) const;
  TrigPolyField operator-(const TrigPolyField& o) const;
  TrigPolyField operator*(double s) const;

  // terms as (frequency, cos coeff, sin coeff), deterministic order
  struct Term {
    std::vector<int> freq;
    double cos_coeff = 0, sin_coeff = 0;
  };
  std::vector<Term> terms() const;

private:
  void add_term(std::vector<int> freq, double cos_coeff, double sin_coeff);
  void prune();
  int nvars_ = 0;
  std::map<std::vector<int>, std::pair<double, double>> terms_;  // (cos, sin)
};

}  // namespace folia
