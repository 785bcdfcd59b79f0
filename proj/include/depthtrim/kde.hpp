#pragma once

#include <cstdint>
#include <span>

#include "depthtrim/types.hpp"

namespace depthtrim {

/// Gaussian-product-kernel density estimate: data plus one bandwidth per
/// coordinate. Immutable after construction; evaluation and sampling are
/// safe to call concurrently.
struct KdeModel {
    Sample data;
    Vec bandwidths;

    std::size_t dim() const { return data.dim(); }

    void validate() const {
        if (bandwidths.size() != data.dim())
            throw std::invalid_argument("KdeModel: bandwidth/dimension mismatch");
        for (double h : bandwidths)
            if (!(h > 0)) throw std::invalid_argument("KdeModel: bandwidth must be > 0");
    }
};

/// Per-coordinate Silverman rule-of-thumb bandwidths:
/// h_j = sd_j * (4 / ((d + 2) n))^(1 / (d + 4)).
Vec silverman_bandwidths(const Sample& sample);

KdeModel fit_kde(const Sample& sample);

double kde_eval(const KdeModel& model, std::span<const double> x);

/// count iid draws: uniformly chosen data row plus independent per-coordinate
/// Gaussian noise scaled by the bandwidths. Deterministic per seed.
Sample kde_sample(const KdeModel& model, std::size_t count, std::uint64_t seed);

/// The KDE mean equals the data mean for symmetric kernels.
Vec kde_mean(const KdeModel& model);

/// Marginal CDF of coordinate j (mixture of normal CDFs); used for
/// distribution-level checks of the sampler.
double kde_marginal_cdf(const KdeModel& model, std::size_t j, double z);

namespace detail {
/// Noise sign -1 mirrors every Gaussian increment; used to build exactly
/// reflected simulation pipelines from the same underlying draws.
Sample kde_sample_signed(const KdeModel& model, std::size_t count,
                         std::uint64_t seed, double noise_sign);
}  // namespace detail

}  // namespace depthtrim
