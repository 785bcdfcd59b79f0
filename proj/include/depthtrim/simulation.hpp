#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "depthtrim/sim_config.hpp"
#include "depthtrim/trimmed_mean.hpp"
#include "depthtrim/types.hpp"

namespace depthtrim {

/// n iid draws from the product Beta(2,2) law on the unit square: each
/// coordinate is the median of three independent uniforms (the second order
/// statistic of three U(0,1) is Beta(2,2)).
Sample beta22_sample(std::size_t n, std::uint64_t seed);

/// Product Beta(2,2) density, 36 x(1-x) y(1-y) on [0,1]^2.
double beta22_density(std::span<const double> x);

struct SimResult {
    Sample r_values;  // reps x d; failed replicates hold NaN rows
    Vec mean;
    std::vector<Vec> covariance;
    PopulationReference reference;
    std::vector<std::uint64_t> replicate_seeds;
    std::vector<std::size_t> failed_indices;
    std::vector<std::string> failure_messages;
    double wall_time_s = 0;
    std::string config_hash;
};

/// One draw of R_n = sqrt(a_n) * (estimate - reference): sample -> KDE ->
/// smoothed depth -> Monte Carlo trimmed mean. All randomness derives from
/// mix(base_seed, rep_index). With reflect = true the pipeline is conjugated
/// by x -> 1 - x on the same underlying draws (base points reflected,
/// Gaussian increments negated); the supplied reference is used as given.
Vec run_replicate(const SimConfig& config, std::size_t rep_index,
                  const PopulationReference& reference, bool reflect = false);

/// All replicates, collected in index order (parallelizable); individual
/// replicate failures are recorded and the run continues.
SimResult run_simulation(const SimConfig& config, const std::string& cache_dir = "");

struct ConsistencyRow {
    std::size_t n = 0;
    double median_error = 0;
    double iqr = 0;
};

/// For each n, the median over reps replicates of || normalized trimmed mean
/// - (0.5, 0.5) || under the Beta(2,2)^2 population.
std::vector<ConsistencyRow> consistency_sweep(DepthKind depth, double a,
                                              const std::vector<std::size_t>& n_list,
                                              std::size_t reps, std::uint64_t seed,
                                              std::size_t mc_size = 4000,
                                              std::size_t surrogate_size = 4000,
                                              DepthParams depth_params = {});

/// Writes r_values.csv, density_grid.csv and contours.csv (KDE of the R_n
/// cloud on a grid_resolution^2 lattice; contour levels at the deciles of
/// the grid density range). Returns the file names written.
std::vector<std::string> export_figure_data(const SimResult& result,
                                            std::size_t grid_resolution,
                                            const std::string& out_dir);

/// summary.json: configuration echo, reference, moments, failures, timing.
void write_summary_json(const SimConfig& config, const SimResult& result,
                        const std::string& path);

}  // namespace depthtrim
