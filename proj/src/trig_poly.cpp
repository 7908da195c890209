#include "folia/trig_poly.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace folia {

namespace {
constexpr double two_pi = 2.0 * std::numbers::pi;
}

TrigPolyField TrigPolyField::constant(int nvars, double value) {
  TrigPolyField f(nvars);
  f.add_cos(std::vector<int>(nvars, 0), value);
  return f;
}

int TrigPolyField::bandwidth() const {
  int bw = 0;
  for (const auto& [k, c] : terms_)
    for (int ki : k) bw = std::max(bw, std::abs(ki));
  return bw;
}

void TrigPolyField::add_term(std::vector<int> freq, double cos_coeff,
                             double sin_coeff) {
  if (static_cast<int>(freq.size()) != nvars_)
    throw std::invalid_argument("trig poly: frequency arity mismatch");
  // canonical sign: first nonzero frequency component positive
  for (int ki : freq) {
    if (ki > 0) break;
    if (ki < 0) {
      for (int& kj : freq) kj = -kj;
      sin_coeff = -sin_coeff;
      break;
    }
  }
  bool zero_freq = std::all_of(freq.begin(), freq.end(),
                               [](int ki) { return ki == 0; });
  if (zero_freq) sin_coeff = 0;  // sin(0) contributes nothing
  auto& slot = terms_[freq];
  slot.first += cos_coeff;
  slot.second += sin_coeff;
  if (slot.first == 0 && slot.second == 0) terms_.erase(freq);
}

void TrigPolyField::prune() {
  for (auto it = terms_.begin(); it != terms_.end();)
    it = (it->second.first == 0 && it->second.second == 0) ? terms_.erase(it)
                                                           : std::next(it);
}

void TrigPolyField::add_cos(const std::vector<int>& freq, double coeff) {
  add_term(freq, coeff, 0);
}

void TrigPolyField::add_sin(const std::vector<int>& freq, double coeff) {
  add_term(freq, 0, coeff);
}

double TrigPolyField::eval(const std::vector<double>& x) const {
  if (static_cast<int>(x.size()) != nvars_)
    throw std::invalid_argument("trig poly: evaluation arity mismatch");
  double acc = 0;
  for (const auto& [k, c] : terms_) {
    double phase = 0;
    for (int i = 0; i < nvars_; ++i) phase += k[i] * x[i];
    phase *= two_pi;
    acc += c.first * std::cos(phase) + c.second * std::sin(phase);
  }
  return acc;
}

TrigPolyField TrigPolyField::derivative(int axis) const {
  if (axis < 0 || axis >= nvars_)
    throw std::invalid_argument("trig poly: derivative axis out of range");
  // d/dx [a cos(2pi k.x) + b sin(2pi k.x)]
  //   = 2 pi k_axis (b cos(2pi k.x) - a sin(2pi k.x))
  TrigPolyField out(nvars_);
  for (const auto& [k, c] : terms_) {
    double w = two_pi * k[axis];
    if (w == 0) continue;
    out.add_term(k, w * c.second, -w * c.first);
  }
  return out;
}

TrigPolyField TrigPolyField::operator+(const TrigPolyField& o) const {
  if (nvars_ != o.nvars_)
    throw std::invalid_argument("trig poly: arity mismatch in sum");
  TrigPolyField out = *this;
  for (const auto& [k, c] : o.terms_) out.add_term(k, c.first, c.second);
  return out;
}

TrigPolyField TrigPolyField::operator-(const TrigPolyField& o) const {
  return *this + o * -1.0;
}

TrigPolyField TrigPolyField::operator*(double s) const {
  TrigPolyField out(nvars_);
  if (s == 0) return out;
  for (const auto& [k, c] : terms_)
    out.add_term(k, s * c.first, s * c.second);
  return out;
}

std::vector<TrigPolyField::Term> TrigPolyField::terms() const {
  std::vector<Term> out;
  out.reserve(terms_.size());
  for (const auto& [k, c] : terms_) out.push_back({k, c.first, c.second});
  return out;
}

}  // namespace folia
