#ifndef HHME_SAMPLING_HPP
#define HHME_SAMPLING_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "hhme/model.hpp"
#include "hhme/rng.hpp"

namespace hhme::sampling {

using Rng = rng::Xoshiro256pp;

/// Reusable buffers for the hot replication loop. One instance per worker;
/// contents never influence results, only allocation traffic.
struct SamplerScratch {
  std::vector<std::uint64_t> mark;  // stamp array for Floyd's algorithm
  std::uint64_t stamp = 0;
  std::vector<std::int64_t> pool;   // partial Fisher-Yates workspace
};

/// Uniform size-n subset of {0..N-1} without replacement (Floyd's
/// algorithm, O(n)). Deterministic given the rng state.
void draw_srswor(std::int64_t N, std::int64_t n, Rng& g, SamplerScratch& scratch,
                 std::vector<std::int64_t>& out);
std::vector<std::int64_t> draw_srswor(std::int64_t N, std::int64_t n, Rng& g);

/// Partition a first-phase sample by the units' fixed stratum labels.
void split_response(std::span<const std::int64_t> sample_idx,
                    const FinitePopulation& pop,
                    std::vector<std::int64_t>& respondents,
                    std::vector<std::int64_t>& nonrespondents);

/// Re-interview subsample size: r = max(1, round_half_up(n2/k)) when n2 >= 1,
/// else 0. k = 1 re-interviews everyone.
std::int64_t subsample_size(std::int64_t n2, double k);

/// SRSWOR of size subsample_size(n2, k) within the non-respondents.
void subsample_nonrespondents(const std::vector<std::int64_t>& nonrespondents,
                              double k, Rng& g, SamplerScratch& scratch,
                              std::vector<std::int64_t>& out);

/// Observe units with fresh additive Gaussian errors: stratum-1 units get
/// variances (sigma_u_sq, sigma_v_sq), stratum-2 units (sigma_u2_sq,
/// sigma_v2_sq). A zero variance reproduces the true value exactly. For each
/// unit the y error is drawn before the x error.
void observe(std::span<const std::int64_t> idx, const FinitePopulation& pop,
             const ErrorModel& errors, Rng& g, std::vector<double>& x_obs,
             std::vector<double>& y_obs);

/// Hansen-Hurwitz means y* = w1 ybar1 + w2 ybar2r (x* analogous), with the
/// degenerate n2 = 0 / n1 = 0 cases collapsing to the available mean.
/// Throws on an entirely empty sample.
HHMeans hh_means(const SampleRealization& sample);

/// One full replication: draw, split, subsample, observe. Bit-reproducible
/// given the rng state.
SampleRealization run_replication(const FinitePopulation& pop,
                                  const ErrorModel& errors, std::int64_t n,
                                  double k, Rng& g, SamplerScratch& scratch);

/// Allocation-free variant for replication loops: reuses the capacity of
/// `out`'s vectors.
void run_replication_into(const FinitePopulation& pop, const ErrorModel& errors,
                          std::int64_t n, double k, Rng& g,
                          SamplerScratch& scratch, SampleRealization& out);

}  // namespace hhme::sampling

#endif  // HHME_SAMPLING_HPP
