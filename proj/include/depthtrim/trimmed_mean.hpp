#pragma once

#include <functional>
#include <optional>
#include <string>

#include "depthtrim/depth.hpp"
#include "depthtrim/grid.hpp"
#include "depthtrim/kde.hpp"
#include "depthtrim/sim_config.hpp"

namespace depthtrim {

/// Depth threshold convention for the trimming indicator. The primary
/// definition uses ">= a"; the strict variant mirrors the surface-functional
/// convention and differs only on the measure-zero level set.
enum class IndicatorRule { greater_equal, strictly_greater };

struct TrimmedMeanResult {
    Vec vector;                            // unnormalized integral of t over the region
    double trimmed_mass = 0;               // integral of the indicator times density
    std::optional<Vec> normalized_vector;  // vector / mass, absent when mass == 0
    double a = 0;
    std::string method;                    // "mc" or "grid"
    std::optional<Vec> standard_error;     // per-coordinate, mc only
    bool truncated = false;                // grid only: box may cut the region
};

using DensityFn = std::function<double(std::span<const double>)>;

/// Monte Carlo estimate: vector = mean of x * 1{depth(x) >= a} over m draws
/// from the KDE. Deterministic per seed; chunked fixed-order reduction keeps
/// the value independent of thread count.
TrimmedMeanResult trimmed_mean_mc(const KdeModel& kde, const DepthEvaluator& depth,
                                  double a, std::size_t m, std::uint64_t seed,
                                  IndicatorRule rule = IndicatorRule::greater_equal);

/// Midpoint-rule quadrature of t * 1{depth(t) >= a} * density(t) over the box
/// at `resolution` cells per axis. Boundary cells reaching depth >= a set the
/// truncated flag.
TrimmedMeanResult trimmed_mean_grid(const DensityFn& density, const DepthEvaluator& depth,
                                    double a, const Box& box, std::size_t resolution,
                                    IndicatorRule rule = IndicatorRule::greater_equal);

struct PopulationReference {
    Vec vector;
    double mass = 0;
    std::size_t n_ref = 0;
    std::size_t resolution = 0;
    std::uint64_t seed = 0;
    std::string config_hash;
};

inline constexpr std::size_t kReferenceSampleSize = 200000;
inline constexpr std::size_t kReferenceResolution = 400;
inline constexpr std::uint64_t kReferenceSeed = 0x5eedceedull;

/// High-accuracy population target for the configured experiment: the
/// population depth is approximated by the empirical depth on one fixed
/// mega-sample and integrated against the closed-form population density by
/// grid quadrature. Cached as JSON under cache_dir (keyed by config hash)
/// when cache_dir is non-empty.
PopulationReference population_reference(const SimConfig& config,
                                         const std::string& cache_dir = "",
                                         std::uint64_t seed = kReferenceSeed);

namespace detail {

/// Quadrature core of population_reference on an explicit reference sample;
/// exposed so tests can cross-validate against transformed mega-samples.
PopulationReference population_reference_on(const SimConfig& config, Sample mega,
                                            std::uint64_t seed);

/// trimmed_mean_mc with a noise-sign hook for reflected pipelines.
TrimmedMeanResult trimmed_mean_mc_signed(const KdeModel& kde, const DepthEvaluator& depth,
                                         double a, std::size_t m, std::uint64_t seed,
                                         IndicatorRule rule, double noise_sign);

}  // namespace detail

}  // namespace depthtrim
