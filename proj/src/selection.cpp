#include "catekrr/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "catekrr/random.hpp"

namespace catekrr {

std::array<Dataset, 3> split_three(const Dataset& data, std::uint64_t seed) {
  validate(data);
  const Index n = data.n();
  if (n < 3) throw std::invalid_argument("split_three: need at least three rows");
  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  std::mt19937_64 engine = make_engine(seed, streams::split);
  std::shuffle(perm.begin(), perm.end(), engine);

  const Index n1 = (n + 2) / 3;  // ceil(n/3)
  const Index n2 = n / 3;        // floor(n/3)
  const Index n3 = n - n1 - n2;
  std::array<Dataset, 3> parts;
  Index offset = 0;
  const Index sizes[3] = {n1, n2, n3};
  for (int p = 0; p < 3; ++p) {
    std::vector<Index> rows(perm.begin() + offset, perm.begin() + offset + sizes[p]);
    parts[static_cast<std::size_t>(p)] = subset(data, rows);
    offset += sizes[p];
    if (!both_arms_present(parts[static_cast<std::size_t>(p)]))
      throw std::runtime_error("split_three: a split is missing a treatment arm");
  }
  return parts;
}

Vector truncate(VectorRef values, double level) {
  if (!(std::isfinite(level) && level > 0.0))
    throw std::invalid_argument("truncate: level must be positive and finite");
  return values.cwiseMax(-level).cwiseMin(level);
}

Vector build_proxies(const Dataset& d2, const Dataset& d3, const KernelSpec& spec_F,
                     double tilde_lambda) {
  validate(d3);
  auto [f0, f1] = fit_nuisances(d2, spec_F, tilde_lambda);
  return impute_from_predictions(d3.A, d3.Y, predict(f0, d3.X), predict(f1, d3.X));
}

SelectionResult select(const std::vector<CandidateConfig>& candidates, const Dataset& d1,
                       const Dataset& d2, const Dataset& d3, const KernelSpec& spec_F,
                       double bar_lambda, double tilde_lambda, double B) {
  if (candidates.empty()) throw std::invalid_argument("select: empty candidate list");
  if (!(std::isfinite(B) && B > 0.0))
    throw std::invalid_argument("select: truncation level must be positive and finite");
  validate(d1);
  validate(d2);
  validate(d3);
  if (d1.dim() != d2.dim() || d1.dim() != d3.dim())
    throw std::invalid_argument("select: split dimensions disagree");

  SelectionResult result;
  result.candidates = candidates;
  result.truncation_level = B;
  const std::size_t k = candidates.size();
  result.fitted.resize(k);
  result.proxy_risks.assign(k, std::numeric_limits<double>::infinity());
  result.errors.assign(k, "");

  // Shared across candidates: nuisances and pseudo-outcomes on d1, proxies on
  // d3. Identical to what a per-candidate fit_cate would compute, done once.
  const KernelSpec spec1 = resolve_length_scale(spec_F, d1.X);
  auto [f0, f1] = fit_nuisances(d1, spec1, bar_lambda);
  const Vector m1 = switch_impute(d1, f0, f1);
  const Vector proxies = build_proxies(d2, d3, spec_F, tilde_lambda);

  // Gram and validation cross-gram are cached per distinct resolved kernel:
  // candidates typically sweep a lambda grid over few kernels.
  struct KernelCache {
    KernelSpec spec;
    Matrix gram;
    Matrix cross;  // d3 x d1
  };
  std::vector<KernelCache> cache;
  const double q = static_cast<double>(d3.n());

  for (std::size_t c = 0; c < k; ++c) {
    try {
      const KernelSpec stage2 = resolve_length_scale(candidates[c].stage2_spec, d1.X);
      const KernelCache* entry = nullptr;
      for (const KernelCache& e : cache)
        if (same_kernel(e.spec, stage2)) {
          entry = &e;
          break;
        }
      if (entry == nullptr) {
        KernelCache e;
        e.spec = stage2;
        e.gram = gram_matrix(stage2, d1.X);
        e.cross = cross_gram(stage2, d3.X, d1.X);
        cache.push_back(std::move(e));
        entry = &cache.back();
      }

      CateEstimator est;
      est.bar_lambda = bar_lambda;
      est.lambda = candidates[c].lambda;
      est.nuisance0 = f0;
      est.nuisance1 = f1;
      est.second_stage =
          fit_from_gram(stage2, d1.X, entry->gram, m1, d1.n(), candidates[c].lambda);

      const Vector pred = truncate(entry->cross * est.second_stage.dual_coeffs, B);
      const double risk = (pred - proxies).squaredNorm() / q;
      if (!std::isfinite(risk)) throw std::runtime_error("non-finite proxy risk");
      result.fitted[c] = std::move(est);
      result.proxy_risks[c] = risk;
    } catch (const std::exception& e) {
      result.fitted[c].reset();
      result.proxy_risks[c] = std::numeric_limits<double>::infinity();
      result.errors[c] = e.what();
    }
  }

  std::size_t best = k;
  for (std::size_t c = 0; c < k; ++c) {
    if (!result.fitted[c]) continue;
    if (best == k || result.proxy_risks[c] < result.proxy_risks[best]) best = c;
  }
  if (best == k) throw std::runtime_error("select: every candidate failed to train");
  result.chosen = best;
  return result;
}

Vector predict_selected(const SelectionResult& result, MatrixRef Xq) {
  if (result.chosen >= result.fitted.size() || !result.fitted[result.chosen])
    throw std::logic_error("predict_selected: no trained chosen candidate");
  return truncate(predict_cate(*result.fitted[result.chosen], Xq), result.truncation_level);
}

}  // namespace catekrr
