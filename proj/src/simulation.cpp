#include "depthtrim/simulation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "depthtrim/io.hpp"
#include "depthtrim/kde.hpp"
#include "depthtrim/level_geometry.hpp"
#include "depthtrim/parallel.hpp"
#include "depthtrim/rng.hpp"
#include "depthtrim/version.hpp"

namespace depthtrim {

// --- SimConfig ----------------------------------------------------------------

void SimConfig::validate() const {
    if (n < 2) throw std::invalid_argument("config: n must be >= 2");
    if (!(a > 0 && a < 1)) throw std::invalid_argument("config: a must be in (0, 1)");
    if (population != "beta22_product")
        throw std::invalid_argument("config: unsupported population " + population);
    if (mc_size == 0) throw std::invalid_argument("config: mc_size must be >= 1");
    if (surrogate_size == 0)
        throw std::invalid_argument("config: surrogate_size must be >= 1");
    if (an_rule == AnRule::custom && !(an_custom > 0))
        throw std::invalid_argument("config: custom a_n must be > 0");
}

std::string SimConfig::canonical_json() const {
    nlohmann::json j;
    j["n"] = n;
    j["reps"] = reps;
    j["depth"] = {{"kind", to_string(depth)},
                  {"direction_count", depth_params.direction_count},
                  {"subset_count", depth_params.subset_count},
                  {"exact_threshold", depth_params.exact_threshold},
                  {"seed", depth_params.seed}};
    j["a"] = a;
    switch (an_rule) {
        case AnRule::sqrt_n: j["a_n_rule"] = "sqrt_n"; break;
        case AnRule::n: j["a_n_rule"] = "n"; break;
        case AnRule::custom: j["a_n_rule"] = an_custom; break;
    }
    j["population"] = population;
    j["mc_size"] = mc_size;
    j["surrogate_size"] = surrogate_size;
    j["base_seed"] = base_seed;
    return j.dump();
}

std::string SimConfig::hash() const {
    return sha256_hex(canonical_json()).substr(0, 16);
}

namespace {

[[noreturn]] void config_error(const std::string& path, const std::string& what) {
    throw std::invalid_argument("config schema violation at " + path + ": " + what);
}

template <typename T>
T require_unsigned(const nlohmann::json& j, const std::string& path) {
    if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<long long>() >= 0))
        config_error(path, "expected a non-negative integer");
    return j.get<T>();
}

}  // namespace

SimConfig SimConfig::from_json_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument(std::string("config parse error: ") + e.what());
    }
    if (!j.is_object()) config_error("/", "expected an object");

    static const char* known[] = {"n",          "reps",    "depth",
                                  "a",          "a_n_rule", "population",
                                  "mc_size",    "surrogate_size", "base_seed"};
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : known)
            if (it.key() == k) ok = true;
        if (!ok) config_error("/" + it.key(), "unknown key");
    }

    SimConfig config;
    if (!j.contains("n")) config_error("/n", "missing");
    config.n = require_unsigned<std::size_t>(j["n"], "/n");
    if (!j.contains("reps")) config_error("/reps", "missing");
    config.reps = require_unsigned<std::size_t>(j["reps"], "/reps");
    if (!j.contains("a") || !j["a"].is_number()) config_error("/a", "expected a number");
    config.a = j["a"].get<double>();

    if (!j.contains("depth")) config_error("/depth", "missing");
    const auto& dj = j["depth"];
    if (dj.is_string()) {
        try {
            config.depth = depth_kind_from_string(dj.get<std::string>());
        } catch (const std::exception& e) {
            config_error("/depth", e.what());
        }
    } else if (dj.is_object()) {
        if (!dj.contains("kind") || !dj["kind"].is_string())
            config_error("/depth/kind", "expected a string");
        try {
            config.depth = depth_kind_from_string(dj["kind"].get<std::string>());
        } catch (const std::exception& e) {
            config_error("/depth/kind", e.what());
        }
        if (dj.contains("direction_count"))
            config.depth_params.direction_count =
                require_unsigned<std::size_t>(dj["direction_count"], "/depth/direction_count");
        if (dj.contains("subset_count"))
            config.depth_params.subset_count =
                require_unsigned<std::size_t>(dj["subset_count"], "/depth/subset_count");
        if (dj.contains("exact_threshold"))
            config.depth_params.exact_threshold =
                require_unsigned<std::size_t>(dj["exact_threshold"], "/depth/exact_threshold");
        if (dj.contains("seed"))
            config.depth_params.seed =
                require_unsigned<std::uint64_t>(dj["seed"], "/depth/seed");
    } else {
        config_error("/depth", "expected a string or an object");
    }

    if (j.contains("a_n_rule")) {
        const auto& rj = j["a_n_rule"];
        if (rj.is_string()) {
            std::string rule = rj.get<std::string>();
            if (rule == "sqrt_n") config.an_rule = AnRule::sqrt_n;
            else if (rule == "n") config.an_rule = AnRule::n;
            else config_error("/a_n_rule", "expected \"sqrt_n\", \"n\", or a number");
        } else if (rj.is_number()) {
            config.an_rule = AnRule::custom;
            config.an_custom = rj.get<double>();
        } else if (rj.is_object() && rj.contains("custom") && rj["custom"].is_number()) {
            config.an_rule = AnRule::custom;
            config.an_custom = rj["custom"].get<double>();
        } else {
            config_error("/a_n_rule", "expected \"sqrt_n\", \"n\", or a number");
        }
    }
    if (j.contains("population")) {
        if (!j["population"].is_string()) config_error("/population", "expected a string");
        config.population = j["population"].get<std::string>();
    }
    if (j.contains("mc_size"))
        config.mc_size = require_unsigned<std::size_t>(j["mc_size"], "/mc_size");
    if (j.contains("surrogate_size"))
        config.surrogate_size =
            require_unsigned<std::size_t>(j["surrogate_size"], "/surrogate_size");
    if (j.contains("base_seed"))
        config.base_seed = require_unsigned<std::uint64_t>(j["base_seed"], "/base_seed");

    config.validate();
    return config;
}

SimConfig SimConfig::from_json_file(const std::string& path) {
    return from_json_text(read_text_file(path));
}

// --- population and replicates -------------------------------------------------

Sample beta22_sample(std::size_t n, std::uint64_t seed) {
    Sample out(n, 2);
    Rng rng = substream(seed, 0xbe7a22ull);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < 2; ++j) {
            double u0 = rng.uniform(), u1 = rng.uniform(), u2 = rng.uniform();
            double lo = std::min(u0, u1), hi = std::max(u0, u1);
            out(i, j) = std::max(lo, std::min(hi, u2));  // median of three
        }
    }
    return out;
}

double beta22_density(std::span<const double> x) {
    if (x.size() != 2)
        throw std::invalid_argument("beta22_density is defined on the plane");
    for (double v : x)
        if (v < 0 || v > 1) return 0.0;
    return 36.0 * x[0] * (1.0 - x[0]) * x[1] * (1.0 - x[1]);
}

Vec run_replicate(const SimConfig& config, std::size_t rep_index,
                  const PopulationReference& reference, bool reflect) {
    // no config.validate() here: levels outside (0,1) are legal for this op
    // and give the empty-region path (estimator zero).
    const std::uint64_t rep_seed = Rng::mix(config.base_seed, rep_index);
    const double sign = reflect ? -1.0 : 1.0;

    Sample base = beta22_sample(config.n, Rng::mix(rep_seed, 1));
    if (reflect) {
        for (double& v : base.data()) v = 1.0 - v;
    }

    KdeModel kde = fit_kde(base);

    // Mirror DepthEvaluator::smoothed, with the noise-sign hook.
    const std::uint64_t surrogate_seed = Rng::mix(rep_seed, 2);
    Sample surrogate =
        detail::kde_sample_signed(kde, config.surrogate_size, surrogate_seed, sign);
    DepthParams params = config.depth_params;
    params.seed = Rng::mix(surrogate_seed, 0x4d43);
    DepthEvaluator depth =
        DepthEvaluator::empirical(config.depth, std::move(surrogate), params);

    TrimmedMeanResult tm = detail::trimmed_mean_mc_signed(
        kde, depth, config.a, config.mc_size, Rng::mix(rep_seed, 3),
        IndicatorRule::greater_equal, sign);

    const double scale = std::sqrt(config.a_n());
    Vec r(2);
    for (std::size_t j = 0; j < 2; ++j)
        r[j] = scale * (tm.vector[j] - reference.vector[j]);
    return r;
}

SimResult run_simulation(const SimConfig& config, const std::string& cache_dir) {
    config.validate();
    auto t0 = std::chrono::steady_clock::now();

    SimResult result;
    result.config_hash = config.hash();
    result.reference = population_reference(config, cache_dir);
    result.r_values = Sample(config.reps, 2);
    result.replicate_seeds.resize(config.reps);
    for (std::size_t i = 0; i < config.reps; ++i)
        result.replicate_seeds[i] = Rng::mix(config.base_seed, i);

    std::vector<std::string> errors(config.reps);
    std::vector<char> failed(config.reps, 0);
    parallel_for(config.reps, [&](std::size_t rep) {
        try {
            Vec r = run_replicate(config, rep, result.reference);
            result.r_values(rep, 0) = r[0];
            result.r_values(rep, 1) = r[1];
        } catch (const std::exception& e) {
            failed[rep] = 1;
            errors[rep] = e.what();
            result.r_values(rep, 0) = std::numeric_limits<double>::quiet_NaN();
            result.r_values(rep, 1) = std::numeric_limits<double>::quiet_NaN();
        }
    });
    for (std::size_t rep = 0; rep < config.reps; ++rep) {
        if (failed[rep]) {
            result.failed_indices.push_back(rep);
            result.failure_messages.push_back(errors[rep]);
        }
    }

    // Moments over successful replicates.
    std::size_t ok = 0;
    Vec mean(2, 0.0);
    for (std::size_t rep = 0; rep < config.reps; ++rep) {
        if (failed[rep]) continue;
        ++ok;
        mean[0] += result.r_values(rep, 0);
        mean[1] += result.r_values(rep, 1);
    }
    if (ok > 0)
        for (double& v : mean) v /= static_cast<double>(ok);
    result.mean = mean;
    result.covariance.assign(2, Vec(2, 0.0));
    if (ok > 1) {
        for (std::size_t rep = 0; rep < config.reps; ++rep) {
            if (failed[rep]) continue;
            double dx = result.r_values(rep, 0) - mean[0];
            double dy = result.r_values(rep, 1) - mean[1];
            result.covariance[0][0] += dx * dx;
            result.covariance[0][1] += dx * dy;
            result.covariance[1][0] += dy * dx;
            result.covariance[1][1] += dy * dy;
        }
        for (auto& row : result.covariance)
            for (double& v : row) v /= static_cast<double>(ok - 1);
    }

    result.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

std::vector<ConsistencyRow> consistency_sweep(DepthKind depth, double a,
                                              const std::vector<std::size_t>& n_list,
                                              std::size_t reps, std::uint64_t seed,
                                              std::size_t mc_size,
                                              std::size_t surrogate_size,
                                              DepthParams depth_params) {
    std::vector<ConsistencyRow> rows;
    if (reps == 0) return rows;
    for (std::size_t n : n_list) {
        std::vector<double> errors(reps, 0.0);
        parallel_for(reps, [&](std::size_t rep) {
            const std::uint64_t rep_seed = Rng::mix(Rng::mix(seed, n), rep);
            Sample base = beta22_sample(n, Rng::mix(rep_seed, 1));
            KdeModel kde = fit_kde(base);
            DepthEvaluator ev = DepthEvaluator::smoothed(
                depth, kde, surrogate_size, Rng::mix(rep_seed, 2), depth_params);
            TrimmedMeanResult tm =
                trimmed_mean_mc(kde, ev, a, mc_size, Rng::mix(rep_seed, 3));
            double ex, ey;
            if (tm.normalized_vector) {
                ex = (*tm.normalized_vector)[0] - 0.5;
                ey = (*tm.normalized_vector)[1] - 0.5;
            } else {
                ex = 0.5;
                ey = 0.5;  // empty region: estimate pinned at the origin
            }
            errors[rep] = std::sqrt(ex * ex + ey * ey);
        });
        ConsistencyRow row;
        row.n = n;
        if (reps > 0) {
            std::sort(errors.begin(), errors.end());
            auto quantile = [&](double p) {
                double h = p * (static_cast<double>(reps) - 1.0);
                std::size_t lo = static_cast<std::size_t>(h);
                std::size_t hi = std::min(lo + 1, reps - 1);
                double frac = h - static_cast<double>(lo);
                return errors[lo] * (1.0 - frac) + errors[hi] * frac;
            };
            row.median_error = quantile(0.5);
            row.iqr = quantile(0.75) - quantile(0.25);
        }
        rows.push_back(row);
    }
    return rows;
}

// --- figure export --------------------------------------------------------------

std::vector<std::string> export_figure_data(const SimResult& result,
                                            std::size_t grid_resolution,
                                            const std::string& out_dir) {
    if (result.r_values.dim() != 2)
        throw std::invalid_argument("export_figure_data requires d = 2 results");
    if (grid_resolution < 2)
        throw std::invalid_argument("export_figure_data: grid_resolution must be >= 2");
    std::filesystem::create_directories(out_dir);
    const auto dir = std::filesystem::path(out_dir);

    // r_values.csv
    {
        std::ostringstream csv;
        csv << "rep,r1,r2\n";
        for (std::size_t i = 0; i < result.r_values.size(); ++i)
            csv << i << ',' << format_double(result.r_values(i, 0)) << ','
                << format_double(result.r_values(i, 1)) << '\n';
        write_text_file((dir / "r_values.csv").string(), csv.str());
    }

    // KDE of the successful replicate cloud.
    Sample cloud(0, 2);
    for (std::size_t i = 0; i < result.r_values.size(); ++i) {
        if (std::isnan(result.r_values(i, 0))) continue;
        cloud.append_row(result.r_values.row(i));
    }
    if (cloud.empty())
        throw std::invalid_argument("export_figure_data: no successful replicates");

    Vec bandwidths;
    try {
        bandwidths = silverman_bandwidths(cloud);
    } catch (const std::invalid_argument&) {
        bandwidths.assign(2, 1.0);  // single replicate or degenerate spread
    }
    KdeModel kde{cloud, bandwidths};

    Box box{{0, 0}, {0, 0}};
    for (std::size_t j = 0; j < 2; ++j) {
        double lo = cloud(0, j), hi = cloud(0, j);
        for (std::size_t i = 1; i < cloud.size(); ++i) {
            lo = std::min(lo, cloud(i, j));
            hi = std::max(hi, cloud(i, j));
        }
        box.lo[j] = lo - 3.0 * bandwidths[j];
        box.hi[j] = hi + 3.0 * bandwidths[j];
    }

    GridSpec grid{box, {grid_resolution, grid_resolution}};
    ScalarGrid field{grid, std::vector<double>(grid.node_count())};
    parallel_for(field.values.size(), [&](std::size_t i) {
        field.values[i] = kde_eval(kde, grid.node(i));
    });

    {
        std::ostringstream csv;
        csv << "x,y,f\n";
        for (std::size_t i = 0; i < grid_resolution; ++i)
            for (std::size_t j = 0; j < grid_resolution; ++j)
                csv << format_double(grid.coord(0, i)) << ','
                    << format_double(grid.coord(1, j)) << ','
                    << format_double(field.at(i, j)) << '\n';
        write_text_file((dir / "density_grid.csv").string(), csv.str());
    }

    // Contours at the deciles of the density range over the grid.
    double fmin = *std::min_element(field.values.begin(), field.values.end());
    double fmax = *std::max_element(field.values.begin(), field.values.end());
    std::ostringstream csv;
    csv << "level,component_id,vertex_index,x,y\n";
    for (int decile = 1; decile <= 9; ++decile) {
        double level = fmin + (fmax - fmin) * static_cast<double>(decile) / 10.0;
        ContourSet contours = contour_marching_squares(field, level);
        std::size_t id = 0;
        auto dump = [&](const Polyline& poly) {
            for (std::size_t v = 0; v < poly.size(); ++v)
                csv << format_double(level) << ',' << id << ',' << v << ','
                    << format_double(poly[v][0]) << ',' << format_double(poly[v][1])
                    << '\n';
            ++id;
        };
        for (const auto& p : contours.components) dump(p);
        for (const auto& p : contours.truncated) dump(p);
    }
    write_text_file((dir / "contours.csv").string(), csv.str());

    return {"r_values.csv", "density_grid.csv", "contours.csv"};
}

void write_summary_json(const SimConfig& config, const SimResult& result,
                        const std::string& path) {
    nlohmann::json j;
    j["config"] = nlohmann::json::parse(config.canonical_json());
    j["config_hash"] = result.config_hash;
    j["a_n"] = config.a_n();
    j["reference"] = {{"vector", result.reference.vector},
                      {"mass", result.reference.mass},
                      {"n_ref", result.reference.n_ref},
                      {"resolution", result.reference.resolution},
                      {"seed", result.reference.seed},
                      {"key", result.reference.config_hash}};
    j["reps"] = config.reps;
    j["failed_indices"] = result.failed_indices;
    j["mean"] = result.mean;
    j["covariance"] = result.covariance;
    j["version"] = kVersion;
    write_text_file(path, j.dump(2) + "\n");
}

}  // namespace depthtrim
