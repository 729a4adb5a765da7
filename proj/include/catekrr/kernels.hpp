#pragma once

#include <optional>
#include <string>
#include <vector>

#include "catekrr/common.hpp"

namespace catekrr {

enum class KernelFamily { SobolevBernoulli, Matern, Rbf };

// Positive definite kernel on R^d, restricted to a coordinate subset.
//
// family == SobolevBernoulli: tensor product over the active coordinates of
//   the order-m Sobolev kernel on [0,1],
//     k_m(s,t) = 1 + sum_{k=1..m} B_k(s) B_k(t) / (k!)^2
//                  + (-1)^{m+1} B_{2m}({s-t}) / (2m)!,
//   with B_k the Bernoulli polynomials and {u} the fractional part.
//   order_or_nu is the integer order m >= 1. length_scale is not used.
//   Inputs must lie in [0,1]^d on the active coordinates.
//
// family == Matern: order_or_nu is the smoothness, 1.5 or 2.5.
//   nu = 1.5:  k(r) = (1 + sqrt(3) r / l) exp(-sqrt(3) r / l)
//   nu = 2.5:  k(r) = (1 + sqrt(5) r / l + 5 r^2 / (3 l^2)) exp(-sqrt(5) r / l)
//
// family == Rbf: k(r) = exp(-r^2 / (2 l^2)). order_or_nu is ignored.
//
// length_scale empty means "resolve by the median heuristic on the sample the
// kernel is about to be fit on"; fitting routines reject unresolved specs, so
// resolution has to happen at the call site that owns the data split.
//
// active_coords empty means all coordinates; otherwise distances (or the
// tensor product) only see the listed coordinates, which must be distinct,
// non-negative and within the data dimension.
struct KernelSpec {
  KernelFamily family = KernelFamily::Rbf;
  double order_or_nu = 1.0;
  std::optional<double> length_scale;
  std::vector<Index> active_coords;
};

KernelSpec sobolev_kernel(int order, std::vector<Index> active_coords = {});
KernelSpec matern_kernel(double nu, std::optional<double> length_scale = std::nullopt,
                         std::vector<Index> active_coords = {});
KernelSpec rbf_kernel(std::optional<double> length_scale = std::nullopt,
                      std::vector<Index> active_coords = {});

// Throws std::invalid_argument on malformed specs: unknown family, Sobolev
// order not a positive integer, Matern nu not in {1.5, 2.5}, non-positive
// length scale, or active coordinates out of range for dim (dim < 0 skips the
// range check).
void validate(const KernelSpec& spec, Index dim = -1);

bool needs_length_scale(const KernelSpec& spec);
bool is_resolved(const KernelSpec& spec);

// Structural equality (same family, parameter, length scale state, coords).
bool same_kernel(const KernelSpec& a, const KernelSpec& b);

// Compact human-readable form, e.g. "matern(nu=1.5, ls=2.6)" or
// "sobolev(m=2)[0,1,2,3]". Stable; used in reports.
std::string describe(const KernelSpec& spec);

// Bernoulli polynomial B_n(x). n <= 20 supported (coefficients are exact
// rationals evaluated in double).
double bernoulli_poly(int n, double x);

double kernel_eval(const KernelSpec& spec, VectorRef x, VectorRef y);

// Gram matrix of the rows of X. Exactly symmetric by construction (each
// off-diagonal pair is computed once).
Matrix gram_matrix(const KernelSpec& spec, MatrixRef X);

// q x m matrix with entry (i, j) = k(Q.row(i), X.row(j)).
Matrix cross_gram(const KernelSpec& spec, MatrixRef Q, MatrixRef X);

// Median of all n(n-1)/2 pairwise Euclidean distances restricted to the
// active coordinates (even count: midpoint of the two central order
// statistics). Throws if n < 2 or the median is zero.
double median_pairwise_distance(MatrixRef X, const std::vector<Index>& active_coords);

// Length scale l such that k(r_med; l) = 1/2 where r_med is the median
// pairwise distance. Closed form for Rbf; bisection to |k - 1/2| <= 1e-10 for
// Matern. Throws for SobolevBernoulli, which has no length scale.
double median_heuristic_length_scale(const KernelSpec& spec, MatrixRef X);

// Returns spec with length_scale filled in via the median heuristic when the
// family needs one and it is unset; otherwise returns spec unchanged.
KernelSpec resolve_length_scale(const KernelSpec& spec, MatrixRef X);

}  // namespace catekrr
