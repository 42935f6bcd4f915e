#include "hhme/sampling.hpp"

#include <cmath>

namespace hhme::sampling {

void draw_srswor(std::int64_t N, std::int64_t n, Rng& g, SamplerScratch& scratch,
                 std::vector<std::int64_t>& out) {
  if (n < 0 || n > N) throw ValidationError("draw_srswor requires 0 <= n <= N");
  out.clear();
  out.reserve(static_cast<std::size_t>(n));
  if (n == 0) return;
  if (scratch.mark.size() < static_cast<std::size_t>(N))
    scratch.mark.assign(static_cast<std::size_t>(N), 0);
  const std::uint64_t stamp = ++scratch.stamp;
  // Floyd's subset sampling: each size-n subset equally likely
  for (std::int64_t j = N - n; j < N; ++j) {
    const auto t = static_cast<std::int64_t>(
        rng::bounded(g, static_cast<std::uint64_t>(j) + 1));
    const std::int64_t pick = (scratch.mark[static_cast<std::size_t>(t)] == stamp) ? j : t;
    scratch.mark[static_cast<std::size_t>(pick)] = stamp;
    out.push_back(pick);
  }
}

std::vector<std::int64_t> draw_srswor(std::int64_t N, std::int64_t n, Rng& g) {
  SamplerScratch scratch;
  std::vector<std::int64_t> out;
  draw_srswor(N, n, g, scratch, out);
  return out;
}

void split_response(std::span<const std::int64_t> sample_idx,
                    const FinitePopulation& pop,
                    std::vector<std::int64_t>& respondents,
                    std::vector<std::int64_t>& nonrespondents) {
  respondents.clear();
  nonrespondents.clear();
  for (std::int64_t i : sample_idx) {
    if (pop.stratum[static_cast<std::size_t>(i)] == 1)
      respondents.push_back(i);
    else
      nonrespondents.push_back(i);
  }
}

std::int64_t subsample_size(std::int64_t n2, double k) {
  if (k < 1.0) throw ValidationError("k must be >= 1");
  if (n2 <= 0) return 0;
  const auto r = static_cast<std::int64_t>(
      std::floor(static_cast<double>(n2) / k + 0.5));
  return std::max<std::int64_t>(1, r);
}

void subsample_nonrespondents(const std::vector<std::int64_t>& nonrespondents,
                              double k, Rng& g, SamplerScratch& scratch,
                              std::vector<std::int64_t>& out) {
  const auto n2 = static_cast<std::int64_t>(nonrespondents.size());
  const std::int64_t r = subsample_size(n2, k);
  out.clear();
  if (r == 0) return;
  if (r == n2) {
    out = nonrespondents;
    return;
  }
  // partial Fisher-Yates over a copy of the index list
  scratch.pool = nonrespondents;
  for (std::int64_t i = 0; i < r; ++i) {
    const auto j = i + static_cast<std::int64_t>(rng::bounded(
                           g, static_cast<std::uint64_t>(n2 - i)));
    std::swap(scratch.pool[static_cast<std::size_t>(i)],
              scratch.pool[static_cast<std::size_t>(j)]);
    out.push_back(scratch.pool[static_cast<std::size_t>(i)]);
  }
}

void observe(std::span<const std::int64_t> idx, const FinitePopulation& pop,
             const ErrorModel& errors, Rng& g, std::vector<double>& x_obs,
             std::vector<double>& y_obs) {
  x_obs.clear();
  y_obs.clear();
  x_obs.reserve(idx.size());
  y_obs.reserve(idx.size());
  const double sd_u1 = std::sqrt(errors.sigma_u_sq);
  const double sd_v1 = std::sqrt(errors.sigma_v_sq);
  const double sd_u2 = std::sqrt(errors.sigma_u2_sq);
  const double sd_v2 = std::sqrt(errors.sigma_v2_sq);
  for (std::int64_t i : idx) {
    const auto ui = static_cast<std::size_t>(i);
    const bool resp = pop.stratum[ui] == 1;
    const double sd_u = resp ? sd_u1 : sd_u2;
    const double sd_v = resp ? sd_v1 : sd_v2;
    double y = pop.y_true[ui];
    double x = pop.x_true[ui];
    if (sd_u > 0.0) y += sd_u * rng::normal(g);
    if (sd_v > 0.0) x += sd_v * rng::normal(g);
    y_obs.push_back(y);
    x_obs.push_back(x);
  }
}

HHMeans hh_means(const SampleRealization& sample) {
  if (sample.n1 + sample.n2 < 1) throw ValidationError("empty sample");
  HHMeans hh;
  if (sample.n2 == 0) {
    hh.y_star = sample.ybar1();
    hh.x_star = sample.xbar1();
  } else if (sample.n1 == 0) {
    hh.y_star = sample.ybar2r();
    hh.x_star = sample.xbar2r();
  } else {
    hh.y_star = sample.w1 * sample.ybar1() + sample.w2 * sample.ybar2r();
    hh.x_star = sample.w1 * sample.xbar1() + sample.w2 * sample.xbar2r();
  }
  return hh;
}

void run_replication_into(const FinitePopulation& pop, const ErrorModel& errors,
                          std::int64_t n, double k, Rng& g,
                          SamplerScratch& scratch, SampleRealization& s) {
  draw_srswor(pop.size(), n, g, scratch, s.sample_idx);
  split_response(s.sample_idx, pop, s.respondent_idx, s.nonrespondent_idx);
  s.n1 = static_cast<std::int64_t>(s.respondent_idx.size());
  s.n2 = static_cast<std::int64_t>(s.nonrespondent_idx.size());
  s.w1 = static_cast<double>(s.n1) / static_cast<double>(n);
  s.w2 = static_cast<double>(s.n2) / static_cast<double>(n);
  subsample_nonrespondents(s.nonrespondent_idx, k, g, scratch, s.subsample_idx);
  s.r = static_cast<std::int64_t>(s.subsample_idx.size());
  observe(s.respondent_idx, pop, errors, g, s.x_obs_resp, s.y_obs_resp);
  observe(s.subsample_idx, pop, errors, g, s.x_obs_sub, s.y_obs_sub);
}

SampleRealization run_replication(const FinitePopulation& pop,
                                  const ErrorModel& errors, std::int64_t n,
                                  double k, Rng& g, SamplerScratch& scratch) {
  SampleRealization s;
  run_replication_into(pop, errors, n, k, g, scratch, s);
  return s;
}

}  // namespace hhme::sampling
