#pragma once

#include <cstdint>
#include <string>

#include "depthtrim/depth.hpp"

namespace depthtrim {

/// Full description of one simulation experiment: the scaled estimation
/// error R_n = sqrt(a_n) * (estimate - population value) is replicated
/// `reps` times, each replicate drawing `n` points from the population.
struct SimConfig {
    std::size_t n = 500;
    std::size_t reps = 500;
    DepthKind depth = DepthKind::simplicial;
    DepthParams depth_params;
    double a = 0.05;

    enum class AnRule { sqrt_n, n, custom };
    AnRule an_rule = AnRule::sqrt_n;
    double an_custom = 0;

    std::string population = "beta22_product";
    std::size_t mc_size = 20000;
    std::size_t surrogate_size = 10000;
    std::uint64_t base_seed = 0;

    double a_n() const {
        switch (an_rule) {
            case AnRule::sqrt_n: return std::sqrt(static_cast<double>(n));
            case AnRule::n: return static_cast<double>(n);
            case AnRule::custom: return an_custom;
        }
        return 0;
    }

    void validate() const;

    /// Canonical JSON serialization (sorted keys) and its SHA-256-derived
    /// hash; the hash keys the reference cache and the run manifest.
    std::string canonical_json() const;
    std::string hash() const;

    static SimConfig from_json_file(const std::string& path);
    static SimConfig from_json_text(const std::string& text);
};

}  // namespace depthtrim
