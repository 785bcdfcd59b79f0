// depthtrim command line: depth evaluation, trimmed-mean estimation, level-set
// contours, derivative checks, consistency sweeps, and the limiting-distribution
// simulation. Every command is deterministic under fixed seeds and any
// --threads setting.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "depthtrim/depth.hpp"
#include "depthtrim/hadamard.hpp"
#include "depthtrim/io.hpp"
#include "depthtrim/kde.hpp"
#include "depthtrim/level_geometry.hpp"
#include "depthtrim/parallel.hpp"
#include "depthtrim/rng.hpp"
#include "depthtrim/simulation.hpp"
#include "depthtrim/trimmed_mean.hpp"
#include "depthtrim/version.hpp"

namespace fs = std::filesystem;
using namespace depthtrim;

namespace {

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    }
};

Vec parse_point(const std::string& text) {
    Vec out;
    std::stringstream ss(text);
    std::string field;
    while (std::getline(ss, field, ',')) {
        try {
            out.push_back(std::stod(field));
        } catch (const std::exception&) {
            throw std::invalid_argument("cannot parse point coordinate: " + field);
        }
    }
    if (out.empty()) throw std::invalid_argument("empty point");
    return out;
}

// "lo:hi:count,lo:hi:count" -> lattice spec
GridSpec parse_grid(const std::string& text) {
    GridSpec grid;
    std::stringstream ss(text);
    std::string axis;
    while (std::getline(ss, axis, ',')) {
        std::stringstream as(axis);
        std::string lo, hi, count;
        if (!std::getline(as, lo, ':') || !std::getline(as, hi, ':') ||
            !std::getline(as, count, ':'))
            throw std::invalid_argument("grid axis must be lo:hi:count, got " + axis);
        grid.box.lo.push_back(std::stod(lo));
        grid.box.hi.push_back(std::stod(hi));
        grid.shape.push_back(static_cast<std::size_t>(std::stoul(count)));
    }
    grid.validate();
    return grid;
}

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string field;
    while (std::getline(ss, field, ',')) out.push_back(std::stod(field));
    return out;
}

std::vector<std::size_t> parse_size_list(const std::string& text) {
    std::vector<std::size_t> out;
    std::stringstream ss(text);
    std::string field;
    while (std::getline(ss, field, ','))
        out.push_back(static_cast<std::size_t>(std::stoul(field)));
    return out;
}

DepthEvaluator make_evaluator(DepthKind kind, const Sample& sample,
                              std::size_t surrogate, std::uint64_t seed,
                              const DepthParams& params) {
    if (surrogate == 0) return DepthEvaluator::empirical(kind, sample, params);
    return DepthEvaluator::smoothed(kind, fit_kde(sample), surrogate, seed, params);
}

RunManifest start_manifest(const std::string& command, std::uint64_t seed) {
    RunManifest m;
    m.command = command;
    m.base_seed = seed;
    m.version = kVersion;
    return m;
}

std::string params_hash(const nlohmann::json& j) {
    return sha256_hex(j.dump()).substr(0, 16);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"depth-based trimmed means in R^d"};
    app.set_version_flag("--version", std::string(kVersion));
    app.fallthrough();  // global flags may follow the subcommand

    unsigned threads = 0;
    if (const char* env = std::getenv("DEPTHTRIM_THREADS"))
        threads = static_cast<unsigned>(std::strtoul(env, nullptr, 10));
    app.add_option("--threads", threads,
                   "worker cap (0 = hardware); never changes results");

    std::string input_path, out_path, depth_name = "tukey", query_text, grid_text;
    std::uint64_t seed = 0;
    std::size_t surrogate = 0;
    DepthParams depth_params;

    auto add_depth_opts = [&](CLI::App* cmd, std::size_t surrogate_default) {
        cmd->add_option("--depth", depth_name, "tukey|simplicial|spatial|projection")
            ->capture_default_str();
        cmd->add_option("--seed", seed, "base seed")->capture_default_str();
        cmd->add_option("--surrogate", surrogate,
                        "KDE surrogate size for smoothed depth (0 = empirical)")
            ->default_val(surrogate_default);
        cmd->add_option("--directions", depth_params.direction_count,
                        "MC directions (Tukey d>=3, projection)");
        cmd->add_option("--subsets", depth_params.subset_count, "MC simplices (d>=3)");
    };

    // --- depth ---------------------------------------------------------------
    auto* cmd_depth = app.add_subcommand("depth", "evaluate a depth at a point or grid");
    cmd_depth->add_option("--input", input_path, "CSV of n x d observations")->required();
    add_depth_opts(cmd_depth, 0);
    cmd_depth->add_option("--query", query_text, "point as x1,x2,...");
    cmd_depth->add_option("--grid", grid_text,
                          "lattice as lo:hi:count per axis, comma-separated");
    cmd_depth->add_option("--out", out_path, "CSV output for --grid (default stdout)");

    // --- estimate -------------------------------------------------------------
    auto* cmd_estimate = app.add_subcommand("estimate", "depth-trimmed mean of a sample");
    double level_a = 0.1;
    std::string method = "mc";
    std::size_t mc_size = 20000, resolution = 200;
    bool strict_indicator = false;
    cmd_estimate->add_option("--input", input_path)->required();
    add_depth_opts(cmd_estimate, 10000);
    cmd_estimate->add_option("--a", level_a, "trimming level")->required();
    cmd_estimate->add_option("--method", method, "mc|grid")->capture_default_str();
    cmd_estimate->add_option("--mc", mc_size, "MC draws")->capture_default_str();
    cmd_estimate->add_option("--resolution", resolution, "grid cells per axis")
        ->capture_default_str();
    cmd_estimate->add_flag("--strict-indicator", strict_indicator,
                           "use depth > a instead of depth >= a");
    cmd_estimate->add_option("--out", out_path, "JSON output (default stdout)");

    // --- simulate ---------------------------------------------------------------
    auto* cmd_simulate =
        app.add_subcommand("simulate", "limiting-distribution experiment");
    std::string config_path, cache_dir;
    std::size_t grid_resolution = 120;
    cmd_simulate->add_option("--config", config_path, "SimConfig JSON")->required();
    cmd_simulate->add_option("--out", out_path, "output directory")->required();
    cmd_simulate
        ->add_option("--grid-resolution", grid_resolution, "density grid nodes per axis")
        ->capture_default_str();
    cmd_simulate->add_option(
        "--cache", cache_dir,
        "population-reference cache directory (default <out>/cache)");

    // --- contour ----------------------------------------------------------------
    auto* cmd_contour =
        app.add_subcommand("contour", "level-set polylines of a depth field");
    cmd_contour->add_option("--input", input_path)->required();
    add_depth_opts(cmd_contour, 0);
    cmd_contour->add_option("--a", level_a, "contour level")->required();
    cmd_contour->add_option("--grid", grid_text, "2-d lattice lo:hi:count,lo:hi:count")
        ->required();
    cmd_contour->add_option("--out", out_path, "output directory")->required();

    // --- hadamard-check -----------------------------------------------------------
    auto* cmd_hadamard = app.add_subcommand(
        "hadamard-check",
        "finite-difference check of the derivative on the radial fixture");
    double had_a = 0.6;
    std::string eps_text = "0.1,0.05,0.025";
    std::size_t had_res = 600, had_dirs = 256;
    cmd_hadamard->add_option("--a", had_a, "trimming level")->capture_default_str();
    cmd_hadamard->add_option("--eps", eps_text, "comma-separated decreasing steps")
        ->capture_default_str();
    cmd_hadamard->add_option("--resolution", had_res)->capture_default_str();
    cmd_hadamard->add_option("--dirs", had_dirs, "surface quadrature directions")
        ->capture_default_str();
    cmd_hadamard->add_option("--out", out_path, "output directory")->required();

    // --- consistency -----------------------------------------------------------------
    auto* cmd_consistency =
        app.add_subcommand("consistency", "estimator error vs sample size");
    std::string n_list_text = "200,2000";
    std::size_t cons_reps = 20, cons_mc = 4000, cons_surrogate = 4000;
    cmd_consistency->add_option("--depth", depth_name)->capture_default_str();
    cmd_consistency->add_option("--a", level_a)->required();
    cmd_consistency->add_option("--n-list", n_list_text)->capture_default_str();
    cmd_consistency->add_option("--reps", cons_reps)->capture_default_str();
    cmd_consistency->add_option("--seed", seed)->capture_default_str();
    cmd_consistency->add_option("--mc", cons_mc)->capture_default_str();
    cmd_consistency->add_option("--surrogate", cons_surrogate)->capture_default_str();
    cmd_consistency->add_option("--out", out_path, "output directory")->required();

    app.require_subcommand(1);
    CLI11_PARSE(app, argc, argv);
    set_max_threads(threads);

    std::ostringstream command_line;
    for (int i = 0; i < argc; ++i) command_line << (i ? " " : "") << argv[i];

    try {
        Timer timer;

        if (*cmd_depth) {
            Sample sample = read_sample_csv(input_path);
            DepthKind kind = depth_kind_from_string(depth_name);
            depth_params.seed = Rng::mix(seed, 0xd17);
            DepthEvaluator ev = make_evaluator(kind, sample, surrogate, seed, depth_params);

            if (!query_text.empty()) {
                Vec q = parse_point(query_text);
                std::cout << format_double(ev(q)) << "\n";
            } else if (!grid_text.empty()) {
                GridSpec grid = parse_grid(grid_text);
                ScalarGrid field = depth_field(ev, grid);
                std::ostringstream csv;
                for (std::size_t j = 0; j < grid.dim(); ++j) csv << "x" << j + 1 << ",";
                csv << "depth\n";
                for (std::size_t i = 0; i < field.values.size(); ++i) {
                    Vec node = grid.node(i);
                    for (double c : node) csv << format_double(c) << ',';
                    csv << format_double(field.values[i]) << '\n';
                }
                if (out_path.empty()) std::cout << csv.str();
                else write_text_file(out_path, csv.str());
            } else {
                std::cerr << "depth: need --query or --grid\n";
                return 2;
            }
            return 0;
        }

        if (*cmd_estimate) {
            Sample sample = read_sample_csv(input_path);
            DepthKind kind = depth_kind_from_string(depth_name);
            depth_params.seed = Rng::mix(seed, 0xd17);
            IndicatorRule rule = strict_indicator ? IndicatorRule::strictly_greater
                                                  : IndicatorRule::greater_equal;

            KdeModel kde = fit_kde(sample);
            DepthEvaluator ev =
                surrogate == 0
                    ? DepthEvaluator::empirical(kind, sample, depth_params)
                    : DepthEvaluator::smoothed(kind, kde, surrogate, seed, depth_params);

            TrimmedMeanResult result;
            if (method == "mc") {
                result =
                    trimmed_mean_mc(kde, ev, level_a, mc_size, Rng::mix(seed, 0xe5), rule);
            } else if (method == "grid") {
                Box box{Vec(sample.dim()), Vec(sample.dim())};
                for (std::size_t j = 0; j < sample.dim(); ++j) {
                    double lo = sample(0, j), hi = sample(0, j);
                    for (std::size_t i = 1; i < sample.size(); ++i) {
                        lo = std::min(lo, sample(i, j));
                        hi = std::max(hi, sample(i, j));
                    }
                    box.lo[j] = lo - 4 * kde.bandwidths[j];
                    box.hi[j] = hi + 4 * kde.bandwidths[j];
                }
                result = trimmed_mean_grid(
                    [&](std::span<const double> x) { return kde_eval(kde, x); }, ev,
                    level_a, box, resolution, rule);
            } else {
                std::cerr << "estimate: unknown --method " << method << "\n";
                return 2;
            }

            if (result.trimmed_mass == 0)
                std::cerr << "warning: trimmed mass is zero (a above the depth range?)\n";
            if (result.truncated) std::cerr << "warning: box may truncate region\n";

            nlohmann::json j;
            j["a"] = result.a;
            j["method"] = result.method;
            j["vector"] = result.vector;
            j["trimmed_mass"] = result.trimmed_mass;
            if (result.normalized_vector) j["normalized_vector"] = *result.normalized_vector;
            else j["normalized_vector"] = nullptr;
            if (result.standard_error) j["standard_error"] = *result.standard_error;
            else j["standard_error"] = nullptr;
            j["truncated"] = result.truncated;
            std::string text = j.dump(2) + "\n";
            if (out_path.empty()) std::cout << text;
            else write_text_file(out_path, text);
            return 0;
        }

        if (*cmd_simulate) {
            SimConfig config = SimConfig::from_json_file(config_path);
            fs::create_directories(out_path);
            if (cache_dir.empty()) cache_dir = (fs::path(out_path) / "cache").string();

            SimResult result = run_simulation(config, cache_dir);
            std::vector<std::string> files;
            if (result.r_values.size() > 0 &&
                result.failed_indices.size() < config.reps) {
                files = export_figure_data(result, grid_resolution, out_path);
            } else {
                // zero replicates: emit the empty raw table so schemas hold
                write_text_file((fs::path(out_path) / "r_values.csv").string(),
                                "rep,r1,r2\n");
                files = {"r_values.csv"};
            }
            write_summary_json(config, result,
                               (fs::path(out_path) / "summary.json").string());
            files.push_back("summary.json");

            RunManifest manifest = start_manifest(command_line.str(), config.base_seed);
            manifest.config_hash = config.hash();
            manifest.input_digests[config_path] = sha256_file(config_path);
            manifest.wall_time_s = timer.seconds();
            for (const auto& f : files) manifest.outputs.emplace_back(f, "");
            write_manifest(out_path, manifest);

            std::cout << "simulate: " << config.reps - result.failed_indices.size() << "/"
                      << config.reps << " replicates, mean R_n = ("
                      << format_double(result.mean[0]) << ", "
                      << format_double(result.mean[1]) << ")\n";
            if (!result.failed_indices.empty())
                std::cerr << "warning: " << result.failed_indices.size()
                          << " replicate(s) failed; see summary.json\n";
            return 0;
        }

        if (*cmd_contour) {
            Sample sample = read_sample_csv(input_path);
            DepthKind kind = depth_kind_from_string(depth_name);
            depth_params.seed = Rng::mix(seed, 0xd17);
            GridSpec grid = parse_grid(grid_text);
            if (grid.dim() != 2) {
                std::cerr << "contour: grid must be 2-d\n";
                return 2;
            }
            DepthEvaluator ev = make_evaluator(kind, sample, surrogate, seed, depth_params);
            ScalarGrid field = depth_field(ev, grid);
            ContourSet contours = contour_marching_squares(field, level_a);

            fs::create_directories(out_path);
            write_contours_csv((fs::path(out_path) / "contours.csv").string(), contours);
            if (!contours.truncated.empty())
                std::cerr << "warning: " << contours.truncated.size()
                          << " truncated component(s) hit the grid boundary\n";

            RunManifest manifest = start_manifest(command_line.str(), seed);
            manifest.config_hash = params_hash({{"input", input_path},
                                                {"depth", depth_name},
                                                {"a", level_a},
                                                {"grid", grid_text},
                                                {"surrogate", surrogate},
                                                {"seed", seed}});
            manifest.input_digests[input_path] = sha256_file(input_path);
            manifest.wall_time_s = timer.seconds();
            manifest.outputs.emplace_back("contours.csv", "");
            write_manifest(out_path, manifest);

            std::cout << "contour: " << contours.components.size() << " closed, "
                      << contours.truncated.size() << " truncated component(s)\n";
            return 0;
        }

        if (*cmd_hadamard) {
            // Radial fixture: depth 1/(1+r), density a standard Gaussian, depth
            // direction x1, density direction a Gaussian shifted to (2.0, 1.5).
            // Box and band sized so eps = 0.1 stays inside the band margin.
            auto depth = DepthEvaluator::analytic([](std::span<const double> x) {
                return 1.0 / (1.0 + std::hypot(x[0], x[1]));
            });
            auto f = [](std::span<const double> x) {
                return std::exp(-0.5 * (x[0] * x[0] + x[1] * x[1])) /
                       (2 * std::numbers::pi);
            };
            auto g = [](std::span<const double> x) {
                double dx = x[0] - 2.0, dy = x[1] - 1.5;
                return std::exp(-0.5 * (dx * dx + dy * dy)) / (2 * std::numbers::pi);
            };
            PerturbationPair pair{[](std::span<const double> x) { return x[0]; }, g, 2.0};
            Box box{{-2, -2}, {2, 2}};
            Band band{0.5 * had_a, had_a + 0.625 * (1.0 - had_a)};
            SurfaceParams sp;
            sp.r_max = 8.0;
            Vec mu{0.0, 0.0};
            std::vector<double> eps_list = parse_list(eps_text);

            auto rows = fd_convergence_check(depth, f, mu, had_a, pair, eps_list, box,
                                             had_res, had_dirs, sp, band);
            fs::create_directories(out_path);
            write_fd_table_csv((fs::path(out_path) / "fd_table.csv").string(), rows);

            Vec derivative =
                hadamard_derivative(depth, f, mu, had_a, pair, had_dirs, box, had_res, sp);
            std::cout << "T' = (" << format_double(derivative[0]) << ", "
                      << format_double(derivative[1]) << ")\n";
            for (const auto& r : rows)
                std::cout << "eps " << format_double(r.eps) << ": quotient ("
                          << format_double(r.quotient[0]) << ", "
                          << format_double(r.quotient[1]) << "), error "
                          << format_double(r.error) << "\n";

            RunManifest manifest = start_manifest(command_line.str(), 0);
            manifest.config_hash = params_hash({{"a", had_a},
                                                {"eps", eps_text},
                                                {"resolution", had_res},
                                                {"dirs", had_dirs}});
            manifest.wall_time_s = timer.seconds();
            manifest.outputs.emplace_back("fd_table.csv", "");
            write_manifest(out_path, manifest);
            return 0;
        }

        if (*cmd_consistency) {
            DepthKind kind = depth_kind_from_string(depth_name);
            auto n_list = parse_size_list(n_list_text);
            auto rows = consistency_sweep(kind, level_a, n_list, cons_reps, seed, cons_mc,
                                          cons_surrogate);
            fs::create_directories(out_path);
            std::ostringstream csv;
            csv << "n,median_error,iqr\n";
            for (const auto& r : rows)
                csv << r.n << ',' << format_double(r.median_error) << ','
                    << format_double(r.iqr) << '\n';
            write_text_file((fs::path(out_path) / "consistency.csv").string(), csv.str());

            RunManifest manifest = start_manifest(command_line.str(), seed);
            manifest.config_hash = params_hash({{"depth", depth_name},
                                                {"a", level_a},
                                                {"n_list", n_list_text},
                                                {"reps", cons_reps},
                                                {"seed", seed},
                                                {"mc", cons_mc},
                                                {"surrogate", cons_surrogate}});
            manifest.wall_time_s = timer.seconds();
            manifest.outputs.emplace_back("consistency.csv", "");
            write_manifest(out_path, manifest);

            for (const auto& r : rows)
                std::cout << "n=" << r.n << " median=" << format_double(r.median_error)
                          << " iqr=" << format_double(r.iqr) << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
