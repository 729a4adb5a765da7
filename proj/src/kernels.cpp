#include "catekrr/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <vector>

namespace catekrr {

namespace {

constexpr int kMaxBernoulli = 20;

// Bernoulli numbers B_0..B_k (B_1 = -1/2 convention) via the defining
// recurrence sum_{j<=m} C(m+1,j) B_j = 0.
std::vector<double> bernoulli_numbers(int k) {
  std::vector<double> b(static_cast<std::size_t>(k) + 1, 0.0);
  b[0] = 1.0;
  for (int m = 1; m <= k; ++m) {
    double acc = 0.0;
    double binom = 1.0;  // C(m+1, j), starts at j = 0
    for (int j = 0; j < m; ++j) {
      acc += binom * b[static_cast<std::size_t>(j)];
      binom = binom * static_cast<double>(m + 1 - j) / static_cast<double>(j + 1);
    }
    // binom now holds C(m+1, m) = m+1
    b[static_cast<std::size_t>(m)] = -acc / binom;
  }
  return b;
}

// Coefficient table for B_n(x) = sum_j C(n,j) B_{n-j} x^j, ascending powers.
const std::vector<std::vector<double>>& bernoulli_coeff_table() {
  static const std::vector<std::vector<double>> table = [] {
    const std::vector<double> nums = bernoulli_numbers(kMaxBernoulli);
    std::vector<std::vector<double>> t(kMaxBernoulli + 1);
    for (int n = 0; n <= kMaxBernoulli; ++n) {
      std::vector<double> c(static_cast<std::size_t>(n) + 1, 0.0);
      double binom = 1.0;  // C(n, j)
      for (int j = 0; j <= n; ++j) {
        c[static_cast<std::size_t>(j)] = binom * nums[static_cast<std::size_t>(n - j)];
        binom = binom * static_cast<double>(n - j) / static_cast<double>(j + 1);
      }
      t[static_cast<std::size_t>(n)] = std::move(c);
    }
    return t;
  }();
  return table;
}

double factorial(int n) {
  double f = 1.0;
  for (int k = 2; k <= n; ++k) f *= static_cast<double>(k);
  return f;
}

bool is_positive_integer(double v) {
  return std::isfinite(v) && v >= 1.0 && v == std::floor(v);
}

// Squared Euclidean distance restricted to the active coordinates (empty =
// all coordinates). Callers have validated the coordinate range.
double restricted_sq_dist(VectorRef x, VectorRef y, const std::vector<Index>& active) {
  double s = 0.0;
  if (active.empty()) {
    for (Index j = 0; j < x.size(); ++j) {
      const double d = x[j] - y[j];
      s += d * d;
    }
  } else {
    for (Index j : active) {
      const double d = x[j] - y[j];
      s += d * d;
    }
  }
  return s;
}

double matern_profile(double nu, double r, double ell) {
  if (nu == 1.5) {
    const double u = std::sqrt(3.0) * r / ell;
    return (1.0 + u) * std::exp(-u);
  }
  const double u = std::sqrt(5.0) * r / ell;
  return (1.0 + u + u * u / 3.0) * std::exp(-u);
}

// Order-m Sobolev kernel on [0,1]. B_{2m}({s-t}) is evaluated as
// B_{2m}(|s-t|): for s < t the fractional part is 1-|s-t| and the even
// Bernoulli polynomials satisfy B_{2m}(1-u) = B_{2m}(u), so the two agree and
// the expression is exactly symmetric in (s,t).
double sobolev_1d(int m, double s, double t) {
  double v = 1.0;
  double fact = 1.0;
  for (int k = 1; k <= m; ++k) {
    fact *= static_cast<double>(k);
    v += bernoulli_poly(k, s) * bernoulli_poly(k, t) / (fact * fact);
  }
  const double sign = (m % 2 == 1) ? 1.0 : -1.0;
  v += sign * bernoulli_poly(2 * m, std::abs(s - t)) / factorial(2 * m);
  return v;
}

double eval_unchecked(const KernelSpec& spec, VectorRef x, VectorRef y) {
  switch (spec.family) {
    case KernelFamily::SobolevBernoulli: {
      const int m = static_cast<int>(spec.order_or_nu);
      double v = 1.0;
      if (spec.active_coords.empty()) {
        for (Index j = 0; j < x.size(); ++j) v *= sobolev_1d(m, x[j], y[j]);
      } else {
        for (Index j : spec.active_coords) v *= sobolev_1d(m, x[j], y[j]);
      }
      return v;
    }
    case KernelFamily::Matern: {
      const double r = std::sqrt(restricted_sq_dist(x, y, spec.active_coords));
      return matern_profile(spec.order_or_nu, r, *spec.length_scale);
    }
    case KernelFamily::Rbf: {
      const double r2 = restricted_sq_dist(x, y, spec.active_coords);
      const double ell = *spec.length_scale;
      return std::exp(-r2 / (2.0 * ell * ell));
    }
  }
  throw std::invalid_argument("kernel_eval: unknown kernel family");
}

void check_domain(const KernelSpec& spec, MatrixRef X, const char* who) {
  if (!X.allFinite()) throw std::invalid_argument(std::string(who) + ": non-finite input");
  if (spec.family != KernelFamily::SobolevBernoulli) return;
  auto coord_ok = [&](Index j) {
    return X.col(j).minCoeff() >= 0.0 && X.col(j).maxCoeff() <= 1.0;
  };
  if (spec.active_coords.empty()) {
    for (Index j = 0; j < X.cols(); ++j)
      if (!coord_ok(j))
        throw std::invalid_argument(std::string(who) +
                                    ": sobolev kernel inputs must lie in [0,1]");
  } else {
    for (Index j : spec.active_coords)
      if (!coord_ok(j))
        throw std::invalid_argument(std::string(who) +
                                    ": sobolev kernel inputs must lie in [0,1]");
  }
}

}  // namespace

KernelSpec sobolev_kernel(int order, std::vector<Index> active_coords) {
  KernelSpec spec;
  spec.family = KernelFamily::SobolevBernoulli;
  spec.order_or_nu = static_cast<double>(order);
  spec.active_coords = std::move(active_coords);
  validate(spec);
  return spec;
}

KernelSpec matern_kernel(double nu, std::optional<double> length_scale,
                         std::vector<Index> active_coords) {
  KernelSpec spec;
  spec.family = KernelFamily::Matern;
  spec.order_or_nu = nu;
  spec.length_scale = length_scale;
  spec.active_coords = std::move(active_coords);
  validate(spec);
  return spec;
}

KernelSpec rbf_kernel(std::optional<double> length_scale, std::vector<Index> active_coords) {
  KernelSpec spec;
  spec.family = KernelFamily::Rbf;
  spec.order_or_nu = 0.0;
  spec.length_scale = length_scale;
  spec.active_coords = std::move(active_coords);
  validate(spec);
  return spec;
}

void validate(const KernelSpec& spec, Index dim) {
  switch (spec.family) {
    case KernelFamily::SobolevBernoulli:
      if (!is_positive_integer(spec.order_or_nu) || spec.order_or_nu > kMaxBernoulli / 2)
        throw std::invalid_argument("kernel: sobolev order must be an integer in [1, 10]");
      if (spec.length_scale)
        throw std::invalid_argument("kernel: sobolev kernel has no length scale");
      break;
    case KernelFamily::Matern:
      if (spec.order_or_nu != 1.5 && spec.order_or_nu != 2.5)
        throw std::invalid_argument("kernel: matern smoothness must be 1.5 or 2.5");
      break;
    case KernelFamily::Rbf:
      break;
    default:
      throw std::invalid_argument("kernel: unknown family");
  }
  if (spec.length_scale &&
      !(std::isfinite(*spec.length_scale) && *spec.length_scale > 0.0))
    throw std::invalid_argument("kernel: length scale must be positive and finite");
  std::vector<Index> coords = spec.active_coords;
  std::sort(coords.begin(), coords.end());
  if (std::adjacent_find(coords.begin(), coords.end()) != coords.end())
    throw std::invalid_argument("kernel: active coordinates must be distinct");
  for (Index j : coords) {
    if (j < 0) throw std::invalid_argument("kernel: active coordinates must be non-negative");
    if (dim >= 0 && j >= dim)
      throw std::invalid_argument("kernel: active coordinate out of range for dimension " +
                                  std::to_string(dim));
  }
}

bool needs_length_scale(const KernelSpec& spec) {
  return spec.family != KernelFamily::SobolevBernoulli;
}

bool is_resolved(const KernelSpec& spec) {
  return !needs_length_scale(spec) || spec.length_scale.has_value();
}

bool same_kernel(const KernelSpec& a, const KernelSpec& b) {
  return a.family == b.family && a.order_or_nu == b.order_or_nu &&
         a.length_scale == b.length_scale && a.active_coords == b.active_coords;
}

std::string describe(const KernelSpec& spec) {
  char buf[64];
  std::string s;
  switch (spec.family) {
    case KernelFamily::SobolevBernoulli:
      std::snprintf(buf, sizeof(buf), "sobolev(m=%d)", static_cast<int>(spec.order_or_nu));
      s = buf;
      break;
    case KernelFamily::Matern:
      if (spec.length_scale)
        std::snprintf(buf, sizeof(buf), "matern(nu=%g, ls=%g)", spec.order_or_nu,
                      *spec.length_scale);
      else
        std::snprintf(buf, sizeof(buf), "matern(nu=%g, ls=median)", spec.order_or_nu);
      s = buf;
      break;
    case KernelFamily::Rbf:
      if (spec.length_scale)
        std::snprintf(buf, sizeof(buf), "rbf(ls=%g)", *spec.length_scale);
      else
        std::snprintf(buf, sizeof(buf), "rbf(ls=median)");
      s = buf;
      break;
  }
  if (!spec.active_coords.empty()) {
    s += "[";
    for (std::size_t i = 0; i < spec.active_coords.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(spec.active_coords[i]);
    }
    s += "]";
  }
  return s;
}

double bernoulli_poly(int n, double x) {
  if (n < 0 || n > kMaxBernoulli)
    throw std::invalid_argument("bernoulli_poly: degree out of range");
  const std::vector<double>& c = bernoulli_coeff_table()[static_cast<std::size_t>(n)];
  double v = 0.0;
  for (std::size_t j = c.size(); j-- > 0;) v = v * x + c[j];
  return v;
}

double kernel_eval(const KernelSpec& spec, VectorRef x, VectorRef y) {
  validate(spec, x.size());
  if (!is_resolved(spec))
    throw std::invalid_argument("kernel_eval: length scale unresolved");
  if (x.size() != y.size())
    throw std::invalid_argument("kernel_eval: input dimensions differ");
  check_domain(spec, x.transpose(), "kernel_eval");
  check_domain(spec, y.transpose(), "kernel_eval");
  return eval_unchecked(spec, x, y);
}

Matrix gram_matrix(const KernelSpec& spec, MatrixRef X) {
  validate(spec, X.cols());
  if (!is_resolved(spec))
    throw std::invalid_argument("gram_matrix: length scale unresolved");
  if (X.rows() == 0) throw std::invalid_argument("gram_matrix: empty input");
  check_domain(spec, X, "gram_matrix");
  const Index n = X.rows();
  Matrix G(n, n);
  for (Index i = 0; i < n; ++i) {
    G(i, i) = eval_unchecked(spec, X.row(i).transpose(), X.row(i).transpose());
    for (Index j = 0; j < i; ++j) {
      const double v = eval_unchecked(spec, X.row(i).transpose(), X.row(j).transpose());
      G(i, j) = v;
      G(j, i) = v;
    }
  }
  return G;
}

Matrix cross_gram(const KernelSpec& spec, MatrixRef Q, MatrixRef X) {
  validate(spec, std::min(Q.cols(), X.cols()));
  if (!is_resolved(spec))
    throw std::invalid_argument("cross_gram: length scale unresolved");
  if (Q.cols() != X.cols())
    throw std::invalid_argument("cross_gram: input dimensions differ");
  check_domain(spec, Q, "cross_gram");
  check_domain(spec, X, "cross_gram");
  Matrix C(Q.rows(), X.rows());
  for (Index i = 0; i < Q.rows(); ++i)
    for (Index j = 0; j < X.rows(); ++j)
      C(i, j) = eval_unchecked(spec, Q.row(i).transpose(), X.row(j).transpose());
  return C;
}

double median_pairwise_distance(MatrixRef X, const std::vector<Index>& active_coords) {
  const Index n = X.rows();
  if (n < 2)
    throw std::invalid_argument("median_pairwise_distance: need at least two rows");
  if (!X.allFinite())
    throw std::invalid_argument("median_pairwise_distance: non-finite input");
  for (Index j : active_coords)
    if (j < 0 || j >= X.cols())
      throw std::invalid_argument("median_pairwise_distance: active coordinate out of range");
  std::vector<double> d;
  d.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(n - 1) / 2);
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j)
      d.push_back(std::sqrt(
          restricted_sq_dist(X.row(i).transpose(), X.row(j).transpose(), active_coords)));
  const std::size_t m = d.size();
  const std::size_t hi = m / 2;
  std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(hi), d.end());
  double med = d[hi];
  if (m % 2 == 0) {
    std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(hi - 1),
                     d.begin() + static_cast<std::ptrdiff_t>(hi));
    med = 0.5 * (med + d[hi - 1]);
  }
  if (!(med > 0.0))
    throw std::invalid_argument("median_pairwise_distance: median distance is zero");
  return med;
}

double median_heuristic_length_scale(const KernelSpec& spec, MatrixRef X) {
  validate(spec, X.cols());
  if (!needs_length_scale(spec))
    throw std::invalid_argument("median_heuristic_length_scale: kernel has no length scale");
  const double r = median_pairwise_distance(X, spec.active_coords);
  if (spec.family == KernelFamily::Rbf) {
    // exp(-r^2 / (2 l^2)) = 1/2  =>  l = r / sqrt(2 ln 2)
    return r / std::sqrt(2.0 * std::log(2.0));
  }
  // Matern profiles are strictly increasing in the length scale, so bisect
  // until the kernel value at r is within 1e-10 of 1/2.
  double lo = 1e-12 * r;
  double hi = 1e6 * r;
  double mid = 0.5 * (lo + hi);
  for (int it = 0; it < 500; ++it) {
    mid = 0.5 * (lo + hi);
    const double v = matern_profile(spec.order_or_nu, r, mid);
    if (std::abs(v - 0.5) <= 1e-10) return mid;
    if (v < 0.5)
      lo = mid;
    else
      hi = mid;
  }
  throw std::runtime_error("median_heuristic_length_scale: bisection did not converge");
}

KernelSpec resolve_length_scale(const KernelSpec& spec, MatrixRef X) {
  validate(spec, X.cols());
  if (!needs_length_scale(spec) || spec.length_scale) return spec;
  KernelSpec out = spec;
  out.length_scale = median_heuristic_length_scale(spec, X);
  return out;
}

}  // namespace catekrr
