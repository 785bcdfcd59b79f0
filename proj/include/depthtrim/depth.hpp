#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>

#include "depthtrim/grid.hpp"
#include "depthtrim/kde.hpp"
#include "depthtrim/types.hpp"

namespace depthtrim {

enum class DepthKind { tukey, simplicial, spatial, projection };

std::string to_string(DepthKind kind);
DepthKind depth_kind_from_string(const std::string& name);

struct DepthParams {
    std::size_t direction_count = 500;  // MC directions (Tukey d>=3, projection)
    std::size_t subset_count = 500;     // MC simplices
    std::size_t exact_threshold = 12;   // max n for simplicial enumeration
    std::uint64_t seed = 0;
};

/// Barycentric tolerance for closed-simplex membership and the closed
/// halfspace/simplex tie convention.
inline constexpr double kContainmentTol = 1e-12;

/// Halfspace depth. Exact for d <= 2 (angular sweep in d = 2), Monte Carlo
/// minimum over params.direction_count random unit directions for d >= 3.
double tukey_depth(const Sample& sample, std::span<const double> x,
                   const DepthParams& params = {});

/// Monte Carlo halfspace depth for any d; direction k is drawn from the
/// substream (seed, k), so the value is thread-schedule independent.
double tukey_depth_mc(const Sample& sample, std::span<const double> x,
                      std::size_t direction_count, std::uint64_t seed);

/// Simplicial depth: fraction of closed (d+1)-point simplices containing x.
/// Exact enumeration for n <= params.exact_threshold; exact O(n log n)
/// counting for d <= 2; Monte Carlo over params.subset_count subsets
/// otherwise. Degenerate (zero-volume) simplices are excluded from both
/// numerator and denominator on the enumeration/MC paths; the d = 2 counting
/// path assumes points in general position.
double simplicial_depth(const Sample& sample, std::span<const double> x,
                        const DepthParams& params = {});

double simplicial_depth_mc(const Sample& sample, std::span<const double> x,
                           std::size_t subset_count, std::uint64_t seed);

/// 1 - || mean unit vector from x to the sample ||, S(0) = 0.
double spatial_depth(const Sample& sample, std::span<const double> x);

/// 1 / (1 + outlyingness), outlyingness = sup over directions of
/// |<u,x> - med(<u,X>)| / MAD(<u,X>). The sup is taken over
/// params.direction_count random directions plus the coordinate axes;
/// directions with MAD = 0 are skipped. Exact in d = 1.
double projection_depth(const Sample& sample, std::span<const double> x,
                        const DepthParams& params = {});

/// Depth with respect to a KDE, realized as the empirical depth of x in a
/// surrogate sample of m draws from the model. Deterministic per seed.
double smoothed_depth(DepthKind kind, const KdeModel& kde, std::span<const double> x,
                      std::size_t surrogate_size, std::uint64_t seed,
                      DepthParams params = {});

/// A point -> depth function with metadata. Cheap to copy, safe to call
/// concurrently; identical seeds give identical values.
class DepthEvaluator {
public:
    static DepthEvaluator empirical(DepthKind kind, Sample sample,
                                    DepthParams params = {});
    static DepthEvaluator smoothed(DepthKind kind, const KdeModel& kde,
                                   std::size_t surrogate_size, std::uint64_t seed,
                                   DepthParams params = {});
    static DepthEvaluator analytic(std::function<double(std::span<const double>)> fn,
                                   double upper_bound = 1.0, std::size_t dim = 0);

    double operator()(std::span<const double> x) const;
    double upper_bound() const;
    std::size_t dim() const;  // 0 when unconstrained (analytic)

    /// Empirical/smoothed evaluators expose the sample the depth is computed
    /// against (the surrogate, for smoothed). Null for analytic evaluators.
    const Sample* source_sample() const;

private:
    struct Impl;
    explicit DepthEvaluator(std::shared_ptr<const Impl> impl);
    std::shared_ptr<const Impl> impl_;
};

/// Evaluator applied at every grid node, row-major; nodes are independent
/// work items.
ScalarGrid depth_field(const DepthEvaluator& evaluator, const GridSpec& grid);

}  // namespace depthtrim
