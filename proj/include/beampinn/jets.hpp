#pragma once

// Truncated Taylor jets in one input coordinate, carried to fourth order.
//
// A Jet4 holds a value and its first four derivatives with respect to the
// network input xi. The arithmetic below propagates all five coefficients
// exactly (Leibniz for products, Faa di Bruno for tanh). The *_partials
// helpers return the local Jacobian of an operation's output coefficients
// with respect to its input coefficients; the Tape uses them for the
// reverse sweep over network parameters.

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>

namespace beampinn {

/// Raised when a caller breaks a documented precondition.
class contract_violation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

inline void expects(bool condition, const char* what) {
  if (!condition) throw contract_violation(what);
}

inline constexpr std::size_t kJetOrder = 4;
inline constexpr std::size_t kJetSize = kJetOrder + 1;

template <class T>
struct BasicJet4 {
  std::array<T, kJetSize> d{};

  static constexpr BasicJet4 constant(T value) { return BasicJet4{{value, T{0}, T{0}, T{0}, T{0}}}; }
  static constexpr BasicJet4 seed(T xi) { return BasicJet4{{xi, T{1}, T{0}, T{0}, T{0}}}; }

  constexpr T& operator[](std::size_t k) { return d[k]; }
  constexpr const T& operator[](std::size_t k) const { return d[k]; }

  constexpr T value() const { return d[0]; }

  friend constexpr bool operator==(const BasicJet4&, const BasicJet4&) = default;
};

using Jet4 = BasicJet4<double>;

/// 5x5 lower-triangular local Jacobian: entry [k][j] = d(out_k)/d(in_j).
template <class T>
using JetPartials = std::array<std::array<T, kJetSize>, kJetSize>;

// Binomial coefficients C(k, j) for k <= 4.
inline constexpr std::array<std::array<int, kJetSize>, kJetSize> kBinomial{{
    {1, 0, 0, 0, 0},
    {1, 1, 0, 0, 0},
    {1, 2, 1, 0, 0},
    {1, 3, 3, 1, 0},
    {1, 4, 6, 4, 1},
}};

template <class T>
constexpr BasicJet4<T> jet_add(const BasicJet4<T>& a, const BasicJet4<T>& b) {
  BasicJet4<T> r;
  for (std::size_t k = 0; k < kJetSize; ++k) r.d[k] = a.d[k] + b.d[k];
  return r;
}

template <class T>
constexpr BasicJet4<T> jet_sub(const BasicJet4<T>& a, const BasicJet4<T>& b) {
  BasicJet4<T> r;
  for (std::size_t k = 0; k < kJetSize; ++k) r.d[k] = a.d[k] - b.d[k];
  return r;
}

template <class T>
constexpr BasicJet4<T> jet_scale(const BasicJet4<T>& a, T s) {
  BasicJet4<T> r;
  for (std::size_t k = 0; k < kJetSize; ++k) r.d[k] = s * a.d[k];
  return r;
}

/// Leibniz rule: (ab)^(k) = sum_j C(k,j) a^(j) b^(k-j).
template <class T>
constexpr BasicJet4<T> jet_mul(const BasicJet4<T>& a, const BasicJet4<T>& b) {
  BasicJet4<T> r;
  for (std::size_t k = 0; k < kJetSize; ++k) {
    T acc{0};
    for (std::size_t j = 0; j <= k; ++j) acc += T(kBinomial[k][j]) * a.d[j] * b.d[k - j];
    r.d[k] = acc;
  }
  return r;
}

/// d(ab)_k / d(b_j) with `a` held fixed.
template <class T>
constexpr JetPartials<T> jet_mul_partials(const BasicJet4<T>& a) {
  JetPartials<T> p{};
  for (std::size_t k = 0; k < kJetSize; ++k)
    for (std::size_t j = 0; j <= k; ++j) p[k][j] = T(kBinomial[k][j]) * a.d[k - j];
  return p;
}

/// Derivatives of tanh with respect to its argument, orders 1..5, expressed
/// through s = tanh(u).
template <class T>
constexpr std::array<T, 6> tanh_derivatives(T s) {
  const T t1 = T(1) - s * s;
  const T s2 = s * s;
  return {s,
          t1,
          T(-2) * s * t1,
          t1 * (T(6) * s2 - T(2)),
          t1 * (T(16) * s - T(24) * s2 * s),
          t1 * (T(16) - T(120) * s2 + T(120) * s2 * s2)};
}

template <class T>
BasicJet4<T> jet_tanh(const BasicJet4<T>& u) {
  using std::tanh;
  const auto t = tanh_derivatives<T>(tanh(u.d[0]));
  const T u1 = u.d[1], u2 = u.d[2], u3 = u.d[3], u4 = u.d[4];
  const T u1s = u1 * u1;
  BasicJet4<T> y;
  y.d[0] = t[0];
  y.d[1] = t[1] * u1;
  y.d[2] = t[2] * u1s + t[1] * u2;
  y.d[3] = t[3] * u1s * u1 + T(3) * t[2] * u1 * u2 + t[1] * u3;
  y.d[4] = t[4] * u1s * u1s + T(6) * t[3] * u1s * u2 + t[2] * (T(4) * u1 * u3 + T(3) * u2 * u2) + t[1] * u4;
  return y;
}

/// Local Jacobian of jet_tanh at input jet u.
template <class T>
JetPartials<T> jet_tanh_partials(const BasicJet4<T>& u) {
  using std::tanh;
  const auto t = tanh_derivatives<T>(tanh(u.d[0]));
  const T u1 = u.d[1], u2 = u.d[2], u3 = u.d[3], u4 = u.d[4];
  const T u1s = u1 * u1;
  JetPartials<T> p{};
  p[0][0] = t[1];

  p[1][0] = t[2] * u1;
  p[1][1] = t[1];

  p[2][0] = t[3] * u1s + t[2] * u2;
  p[2][1] = T(2) * t[2] * u1;
  p[2][2] = t[1];

  p[3][0] = t[4] * u1s * u1 + T(3) * t[3] * u1 * u2 + t[2] * u3;
  p[3][1] = T(3) * t[3] * u1s + T(3) * t[2] * u2;
  p[3][2] = T(3) * t[2] * u1;
  p[3][3] = t[1];

  p[4][0] = t[5] * u1s * u1s + T(6) * t[4] * u1s * u2 + t[3] * (T(4) * u1 * u3 + T(3) * u2 * u2) + t[2] * u4;
  p[4][1] = T(4) * t[4] * u1s * u1 + T(12) * t[3] * u1 * u2 + T(4) * t[2] * u3;
  p[4][2] = T(6) * t[3] * u1s + T(6) * t[2] * u2;
  p[4][3] = T(4) * t[2] * u1;
  p[4][4] = t[1];
  return p;
}

template <class T>
constexpr BasicJet4<T> operator+(const BasicJet4<T>& a, const BasicJet4<T>& b) { return jet_add(a, b); }
template <class T>
constexpr BasicJet4<T> operator-(const BasicJet4<T>& a, const BasicJet4<T>& b) { return jet_sub(a, b); }
template <class T>
constexpr BasicJet4<T> operator*(const BasicJet4<T>& a, const BasicJet4<T>& b) { return jet_mul(a, b); }
template <class T>
constexpr BasicJet4<T> operator*(T s, const BasicJet4<T>& a) { return jet_scale(a, s); }

template <class T>
bool is_finite(const BasicJet4<T>& a) {
  for (const auto& c : a.d)
    if (!std::isfinite(static_cast<double>(c))) return false;
  return true;
}

}  // namespace beampinn
