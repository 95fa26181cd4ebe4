#pragma once

// Nondimensional Euler-Bernoulli beam, y'''' = q on [0, 1], under the
// cantilever (CV), simply-supported (SS) and doubly-clamped (CC) supports.

#include <array>
#include <cstddef>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "beampinn/io.hpp"
#include "beampinn/jets.hpp"

namespace beampinn {

enum class CaseKind { CV, SS, CC };

inline constexpr std::array<CaseKind, 3> kAllCases{CaseKind::CV, CaseKind::SS, CaseKind::CC};

inline std::string_view to_string(CaseKind k) {
  switch (k) {
    case CaseKind::CV: return "CV";
    case CaseKind::SS: return "SS";
    case CaseKind::CC: return "CC";
  }
  return "?";
}

inline std::optional<CaseKind> parse_case(std::string_view s) {
  if (s == "CV" || s == "cv") return CaseKind::CV;
  if (s == "SS" || s == "ss") return CaseKind::SS;
  if (s == "CC" || s == "cc") return CaseKind::CC;
  return std::nullopt;
}

/// Gamma[y] = y^(order)(location).
struct BoundaryOperator {
  double location = 0.0;  // 0 or 1
  std::size_t order = 0;  // 0..3

  /// Kinematic (deflection/slope) condition, as opposed to a moment/shear one.
  bool is_dirichlet() const { return order <= 1; }
  friend bool operator==(const BoundaryOperator&, const BoundaryOperator&) = default;
};

struct BeamCase {
  CaseKind kind = CaseKind::CC;
  double q_hat = 1.0;
  std::array<BoundaryOperator, 4> operators{};
};

inline BeamCase make_case(CaseKind kind, double q_hat = 1.0) {
  BeamCase c{kind, q_hat, {}};
  switch (kind) {
    case CaseKind::CV: c.operators = {{{0, 0}, {0, 1}, {1, 2}, {1, 3}}}; break;
    case CaseKind::SS: c.operators = {{{0, 0}, {0, 2}, {1, 0}, {1, 2}}}; break;
    case CaseKind::CC: c.operators = {{{0, 0}, {0, 1}, {1, 0}, {1, 1}}}; break;
  }
  return c;
}

/// Jet of sum_i c[i] xi^i, exact for degree <= 4.
inline Jet4 polynomial_jet(const std::array<double, 5>& c, double xi) {
  Jet4 j;
  for (std::size_t k = 0; k < kJetSize; ++k) {
    // k-th derivative: sum_{i>=k} c[i] * i!/(i-k)! * xi^(i-k)
    double acc = 0.0;
    for (std::size_t i = 4 + 1; i-- > k;) {
      double falling = 1.0;
      for (std::size_t m = 0; m < k; ++m) falling *= static_cast<double>(i - m);
      acc = acc * xi + c[i] * falling;
    }
    j.d[k] = acc;
  }
  return j;
}

/// Monomial coefficients of the closed-form deflection.
inline std::array<double, 5> analytical_coefficients(const BeamCase& c) {
  const double s = c.q_hat / 24.0;
  switch (c.kind) {
    case CaseKind::CV: return {0.0, 0.0, 6.0 * s, -4.0 * s, s};
    case CaseKind::SS: return {0.0, s, 0.0, -2.0 * s, s};
    case CaseKind::CC: return {0.0, 0.0, s, -2.0 * s, s};
  }
  return {};
}

inline Jet4 analytical_jet(const BeamCase& c, double xi) { return polynomial_jet(analytical_coefficients(c), xi); }
inline double analytical_deflection(const BeamCase& c, double xi) { return analytical_jet(c, xi).d[0]; }
inline double analytical_curvature(const BeamCase& c, double xi) { return analytical_jet(c, xi).d[2]; }

inline double apply_boundary_operator(const BoundaryOperator& op, const Jet4& jet_at_location) {
  expects(op.order <= kJetOrder, "boundary operator order must be <= 4");
  return jet_at_location.d[op.order];
}

/// f(xi) vanishing to the required order at every Dirichlet end:
/// CC xi^2 (1-xi)^2, SS xi (1-xi), CV xi^2. Built as products of the jets of
/// xi and 1-xi so that the constrained values come out as exact zeros.
inline Jet4 ansatz(const BeamCase& c, double xi) {
  const Jet4 s = Jet4::seed(xi);
  const Jet4 t{{1.0 - xi, -1.0, 0.0, 0.0, 0.0}};
  switch (c.kind) {
    case CaseKind::CV: return s * s;
    case CaseKind::SS: return s * t;
    case CaseKind::CC: return (s * s) * (t * t);
  }
  return {};
}

struct StrainField {
  std::vector<double> xi_grid;
  std::vector<double> zeta_grid;
  std::vector<std::vector<double>> strain;     // [xi][zeta]
  std::vector<std::vector<double>> abs_error;  // [xi][zeta]

  double max_abs_error() const {
    double m = 0.0;
    for (const auto& row : abs_error)
      for (double v : row) m = std::max(m, v);
    return m;
  }
};

inline std::vector<double> uniform_grid(double lo, double hi, std::size_t n) {
  expects(n >= 1, "grid needs at least one point");
  std::vector<double> g(n);
  if (n == 1) {
    g[0] = lo;
    return g;
  }
  const double m = static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i)
    g[i] = lo * (static_cast<double>(n - 1 - i) / m) + hi * (static_cast<double>(i) / m);
  g.back() = hi;
  return g;
}

inline std::vector<double> default_xi_grid() { return uniform_grid(0.0, 1.0, 201); }
inline std::vector<double> default_zeta_grid() { return uniform_grid(-0.05, 0.05, 41); }

/// strain(xi, zeta) = -zeta * curvature(xi); error against the closed form of `reference`.
inline StrainField strain_field(const std::function<double(double)>& curvature_fn, const BeamCase& reference,
                                std::vector<double> xi_grid, std::vector<double> zeta_grid) {
  expects(!xi_grid.empty() && !zeta_grid.empty(), "strain_field: grids must be nonempty");
  StrainField f{std::move(xi_grid), std::move(zeta_grid), {}, {}};
  f.strain.resize(f.xi_grid.size());
  f.abs_error.resize(f.xi_grid.size());
  for (std::size_t i = 0; i < f.xi_grid.size(); ++i) {
    const double kappa = curvature_fn(f.xi_grid[i]);
    const double exact = analytical_curvature(reference, f.xi_grid[i]);
    f.strain[i].resize(f.zeta_grid.size());
    f.abs_error[i].resize(f.zeta_grid.size());
    for (std::size_t j = 0; j < f.zeta_grid.size(); ++j) {
      const double z = f.zeta_grid[j];
      f.strain[i][j] = -z * kappa;
      f.abs_error[i][j] = std::abs(f.strain[i][j] - (-z * exact));
    }
  }
  return f;
}

/// CSV with a header row of zeta values and xi in the first column.
inline std::string strain_csv(const StrainField& f, bool error_values, std::string_view run_name) {
  std::ostringstream os;
  os << manifest_line(run_name) << "xi";
  for (double z : f.zeta_grid) os << ',' << format_real(z);
  os << '\n';
  const auto& cells = error_values ? f.abs_error : f.strain;
  for (std::size_t i = 0; i < f.xi_grid.size(); ++i) {
    os << format_real(f.xi_grid[i]);
    for (double v : cells[i]) os << ',' << format_real(v);
    os << '\n';
  }
  return os.str();
}

}  // namespace beampinn
