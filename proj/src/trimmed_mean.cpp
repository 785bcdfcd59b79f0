#include "depthtrim/trimmed_mean.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "depthtrim/io.hpp"
#include "depthtrim/parallel.hpp"
#include "depthtrim/rng.hpp"
#include "depthtrim/simulation.hpp"

namespace depthtrim {

namespace {

bool retained(double depth, double a, IndicatorRule rule) {
    return rule == IndicatorRule::greater_equal ? depth >= a : depth > a;
}

void finalize(TrimmedMeanResult& r) {
    if (r.trimmed_mass > 0) {
        Vec nv = r.vector;
        for (double& v : nv) v /= r.trimmed_mass;
        r.normalized_vector = std::move(nv);
    }
}

}  // namespace

namespace detail {

TrimmedMeanResult trimmed_mean_mc_signed(const KdeModel& kde, const DepthEvaluator& depth,
                                         double a, std::size_t m, std::uint64_t seed,
                                         IndicatorRule rule, double noise_sign) {
    if (m == 0) throw std::invalid_argument("trimmed_mean_mc requires m >= 1");
    const std::size_t d = kde.dim();
    Sample draws = kde_sample_signed(kde, m, seed, noise_sign);

    constexpr std::size_t kChunk = 1024;
    const std::size_t chunks = (m + kChunk - 1) / kChunk;
    std::vector<Vec> sums(chunks, Vec(d, 0.0));
    std::vector<Vec> sq_sums(chunks, Vec(d, 0.0));
    std::vector<std::size_t> kept(chunks, 0);

    parallel_for(chunks, [&](std::size_t c) {
        std::size_t begin = c * kChunk;
        std::size_t end = std::min(begin + kChunk, m);
        for (std::size_t i = begin; i < end; ++i) {
            auto x = draws.row(i);
            if (!retained(depth(x), a, rule)) continue;
            ++kept[c];
            for (std::size_t j = 0; j < d; ++j) {
                sums[c][j] += x[j];
                sq_sums[c][j] += x[j] * x[j];
            }
        }
    });

    Vec total(d, 0.0), total_sq(d, 0.0);
    std::size_t retained_count = 0;
    for (std::size_t c = 0; c < chunks; ++c) {  // fixed-order reduction
        retained_count += kept[c];
        for (std::size_t j = 0; j < d; ++j) {
            total[j] += sums[c][j];
            total_sq[j] += sq_sums[c][j];
        }
    }

    TrimmedMeanResult result;
    result.a = a;
    result.method = "mc";
    result.vector.assign(d, 0.0);
    const auto dm = static_cast<double>(m);
    for (std::size_t j = 0; j < d; ++j) result.vector[j] = total[j] / dm;
    result.trimmed_mass = static_cast<double>(retained_count) / dm;

    Vec se(d, 0.0);
    if (m > 1) {
        for (std::size_t j = 0; j < d; ++j) {
            // sd of the summand x * indicator, zeros included
            double mean = result.vector[j];
            double var = (total_sq[j] - dm * mean * mean) / (dm - 1.0);
            se[j] = std::sqrt(std::max(var, 0.0) / dm);
        }
    }
    result.standard_error = std::move(se);
    finalize(result);
    return result;
}

}  // namespace detail

TrimmedMeanResult trimmed_mean_mc(const KdeModel& kde, const DepthEvaluator& depth,
                                  double a, std::size_t m, std::uint64_t seed,
                                  IndicatorRule rule) {
    return detail::trimmed_mean_mc_signed(kde, depth, a, m, seed, rule, 1.0);
}

TrimmedMeanResult trimmed_mean_grid(const DensityFn& density, const DepthEvaluator& depth,
                                    double a, const Box& box, std::size_t resolution,
                                    IndicatorRule rule) {
    box.validate();
    if (resolution < 16)
        throw std::invalid_argument("trimmed_mean_grid requires resolution >= 16");
    const std::size_t d = box.dim();

    std::size_t cells = 1;
    for (std::size_t j = 0; j < d; ++j) cells *= resolution;
    Vec width(d);
    double cell_volume = 1;
    for (std::size_t j = 0; j < d; ++j) {
        width[j] = (box.hi[j] - box.lo[j]) / static_cast<double>(resolution);
        cell_volume *= width[j];
    }

    constexpr std::size_t kChunk = 4096;
    const std::size_t chunks = (cells + kChunk - 1) / kChunk;
    std::vector<Vec> sums(chunks, Vec(d, 0.0));
    std::vector<double> masses(chunks, 0.0);
    std::vector<char> truncated_flags(chunks, 0);

    parallel_for(chunks, [&](std::size_t c) {
        Vec x(d);
        std::size_t begin = c * kChunk;
        std::size_t end = std::min(begin + kChunk, cells);
        for (std::size_t flat = begin; flat < end; ++flat) {
            std::size_t rem = flat;
            bool boundary = false;
            for (std::size_t axis = d; axis-- > 0;) {
                std::size_t k = rem % resolution;
                rem /= resolution;
                if (k == 0 || k + 1 == resolution) boundary = true;
                x[axis] = box.lo[axis] + (static_cast<double>(k) + 0.5) * width[axis];
            }
            if (!retained(depth(x), a, rule)) continue;
            if (boundary) truncated_flags[c] = 1;
            double f = density(x);
            masses[c] += f;
            for (std::size_t j = 0; j < d; ++j) sums[c][j] += x[j] * f;
        }
    });

    TrimmedMeanResult result;
    result.a = a;
    result.method = "grid";
    result.vector.assign(d, 0.0);
    for (std::size_t c = 0; c < chunks; ++c) {
        result.trimmed_mass += masses[c];
        result.truncated = result.truncated || truncated_flags[c];
        for (std::size_t j = 0; j < d; ++j) result.vector[j] += sums[c][j];
    }
    result.trimmed_mass *= cell_volume;
    for (double& v : result.vector) v *= cell_volume;
    finalize(result);
    return result;
}

// --- population reference ----------------------------------------------------

namespace {

std::string reference_key(const SimConfig& config, std::uint64_t seed) {
    nlohmann::json j;
    j["depth"] = to_string(config.depth);
    j["direction_count"] = config.depth_params.direction_count;
    j["subset_count"] = config.depth_params.subset_count;
    j["exact_threshold"] = config.depth_params.exact_threshold;
    j["depth_seed"] = config.depth_params.seed;
    j["a"] = config.a;
    j["population"] = config.population;
    j["n_ref"] = kReferenceSampleSize;
    j["resolution"] = kReferenceResolution;
    j["seed"] = seed;
    return sha256_hex(j.dump()).substr(0, 16);
}

// Block-refined evaluation of the indicator 1{depth >= a} on the midpoint
// lattice. Blocks whose corner and centre probes agree with margin are
// classified wholesale; the rest are evaluated cell by cell. Exactness
// relies on the level curve not wiggling below the block scale, which holds
// for empirical depths of this sample size.
std::vector<char> indicator_mask_2d(const DepthEvaluator& depth, double a,
                                    const Box& box, std::size_t res,
                                    std::size_t block) {
    const double wx = (box.hi[0] - box.lo[0]) / static_cast<double>(res);
    const double wy = (box.hi[1] - box.lo[1]) / static_cast<double>(res);
    auto cell_center = [&](std::size_t i, std::size_t j) {
        return Vec{box.lo[0] + (static_cast<double>(i) + 0.5) * wx,
                   box.lo[1] + (static_cast<double>(j) + 0.5) * wy};
    };

    const std::size_t nb = res / block;  // res must be a multiple of block
    const std::size_t lattice = nb + 1;
    std::vector<double> probe(lattice * lattice);
    parallel_for(lattice * lattice, [&](std::size_t idx) {
        std::size_t bi = idx / lattice, bj = idx % lattice;
        std::size_t ci = std::min(bi * block, res - 1);
        std::size_t cj = std::min(bj * block, res - 1);
        probe[idx] = depth(cell_center(ci, cj));
    });
    std::vector<double> center_probe(nb * nb);
    parallel_for(nb * nb, [&](std::size_t idx) {
        std::size_t bi = idx / nb, bj = idx % nb;
        center_probe[idx] = depth(cell_center(bi * block + block / 2, bj * block + block / 2));
    });

    constexpr double kMargin = 0.005;
    std::vector<char> mask(res * res, 0);
    std::vector<std::size_t> refine;
    for (std::size_t bi = 0; bi < nb; ++bi) {
        for (std::size_t bj = 0; bj < nb; ++bj) {
            double v[5] = {probe[bi * lattice + bj], probe[bi * lattice + bj + 1],
                           probe[(bi + 1) * lattice + bj], probe[(bi + 1) * lattice + bj + 1],
                           center_probe[bi * nb + bj]};
            bool all_above = true, all_below = true;
            for (double vi : v) {
                if (vi < a + kMargin) all_above = false;
                if (vi >= a - kMargin) all_below = false;
            }
            if (all_above) {
                for (std::size_t i = 0; i < block; ++i)
                    for (std::size_t j = 0; j < block; ++j)
                        mask[(bi * block + i) * res + bj * block + j] = 1;
            } else if (!all_below) {
                refine.push_back(bi * nb + bj);
            }
        }
    }
    parallel_for(refine.size(), [&](std::size_t r) {
        std::size_t bi = refine[r] / nb, bj = refine[r] % nb;
        for (std::size_t i = 0; i < block; ++i)
            for (std::size_t j = 0; j < block; ++j) {
                std::size_t ci = bi * block + i, cj = bj * block + j;
                mask[ci * res + cj] = depth(cell_center(ci, cj)) >= a ? 1 : 0;
            }
    });
    return mask;
}

}  // namespace

namespace detail {

PopulationReference population_reference_on(const SimConfig& config, Sample mega,
                                            std::uint64_t seed) {
    if (config.population != "beta22_product")
        throw std::invalid_argument("population_reference: unsupported population " +
                                    config.population);
    DepthParams params = config.depth_params;
    params.seed = Rng::mix(seed, 1);
    DepthEvaluator depth = DepthEvaluator::empirical(config.depth, std::move(mega), params);

    const Box box{{0.0, 0.0}, {1.0, 1.0}};
    const std::size_t res = kReferenceResolution;
    const double w = 1.0 / static_cast<double>(res);

    std::vector<char> mask = indicator_mask_2d(depth, config.a, box, res, 8);

    double mass = 0;
    Vec vector(2, 0.0);
    for (std::size_t i = 0; i < res; ++i) {
        double x = (static_cast<double>(i) + 0.5) * w;
        for (std::size_t j = 0; j < res; ++j) {
            if (!mask[i * res + j]) continue;
            double y = (static_cast<double>(j) + 0.5) * w;
            double f = beta22_density(std::array<double, 2>{x, y});
            mass += f;
            vector[0] += x * f;
            vector[1] += y * f;
        }
    }
    const double cell = w * w;

    PopulationReference ref;
    ref.vector = {vector[0] * cell, vector[1] * cell};
    ref.mass = mass * cell;
    ref.n_ref = kReferenceSampleSize;
    ref.resolution = res;
    ref.seed = seed;
    ref.config_hash = reference_key(config, seed);
    return ref;
}

}  // namespace detail

PopulationReference population_reference(const SimConfig& config,
                                         const std::string& cache_dir,
                                         std::uint64_t seed) {
    const std::string key = reference_key(config, seed);
    std::filesystem::path cache_file;
    if (!cache_dir.empty()) {
        cache_file = std::filesystem::path(cache_dir) / ("ref_" + key + ".json");
        if (std::filesystem::exists(cache_file)) {
            auto j = nlohmann::json::parse(read_text_file(cache_file.string()));
            if (j.value("config_hash", "") == key) {
                PopulationReference ref;
                ref.vector = j.at("vector").get<Vec>();
                ref.mass = j.at("mass").get<double>();
                ref.n_ref = j.at("n_ref").get<std::size_t>();
                ref.resolution = j.at("resolution").get<std::size_t>();
                ref.seed = j.at("seed").get<std::uint64_t>();
                ref.config_hash = key;
                return ref;
            }
        }
    }

    PopulationReference ref = detail::population_reference_on(
        config, beta22_sample(kReferenceSampleSize, seed), seed);

    if (!cache_dir.empty()) {
        std::filesystem::create_directories(cache_dir);
        nlohmann::json j;
        j["config_hash"] = ref.config_hash;
        j["vector"] = ref.vector;
        j["mass"] = ref.mass;
        j["n_ref"] = ref.n_ref;
        j["resolution"] = ref.resolution;
        j["seed"] = ref.seed;
        write_text_file(cache_file.string(), j.dump(2) + "\n");
    }
    return ref;
}

}  // namespace depthtrim
