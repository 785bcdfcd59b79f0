// Python bindings for the core operations: depths, KDE, trimmed means,
// contours, and the simulation harness. Samples cross the boundary as
// (n, d) float64 arrays.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "depthtrim/depth.hpp"
#include "depthtrim/io.hpp"
#include "depthtrim/kde.hpp"
#include "depthtrim/level_geometry.hpp"
#include "depthtrim/parallel.hpp"
#include "depthtrim/rng.hpp"
#include "depthtrim/simulation.hpp"
#include "depthtrim/trimmed_mean.hpp"
#include "depthtrim/version.hpp"

namespace py = pybind11;
using namespace depthtrim;

namespace {

Sample as_sample(const py::array_t<double, py::array::c_style | py::array::forcecast>& arr) {
    if (arr.ndim() != 2) throw std::invalid_argument("expected an (n, d) array");
    auto n = static_cast<std::size_t>(arr.shape(0));
    auto d = static_cast<std::size_t>(arr.shape(1));
    std::vector<double> data(arr.data(), arr.data() + n * d);
    return Sample::from_data(std::move(data), d);
}

Vec as_point(const py::array_t<double, py::array::c_style | py::array::forcecast>& arr) {
    if (arr.ndim() != 1) throw std::invalid_argument("expected a 1-d point");
    return Vec(arr.data(), arr.data() + arr.shape(0));
}

py::array_t<double> as_array(const Sample& s) {
    py::array_t<double> out({s.size(), s.dim()});
    std::copy(s.data().begin(), s.data().end(), out.mutable_data());
    return out;
}

DepthParams make_params(std::size_t directions, std::size_t subsets,
                        std::size_t exact_threshold, std::uint64_t seed) {
    DepthParams p;
    p.direction_count = directions;
    p.subset_count = subsets;
    p.exact_threshold = exact_threshold;
    p.seed = seed;
    return p;
}

py::dict trimmed_result_to_dict(const TrimmedMeanResult& r) {
    py::dict out;
    out["a"] = r.a;
    out["method"] = r.method;
    out["vector"] = r.vector;
    out["trimmed_mass"] = r.trimmed_mass;
    out["normalized_vector"] =
        r.normalized_vector ? py::cast(*r.normalized_vector) : py::none();
    out["standard_error"] =
        r.standard_error ? py::cast(*r.standard_error) : py::none();
    out["truncated"] = r.truncated;
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Depth-based trimmed means: depth functions, KDE smoothing, "
              "level-set geometry, and the limiting-distribution simulation.";
    m.attr("__version__") = kVersion;

    using Arr = py::array_t<double, py::array::c_style | py::array::forcecast>;

    m.def("set_max_threads", &set_max_threads, py::arg("n"),
          "Worker cap for parallel loops (0 = hardware); never changes results.");

    m.def(
        "tukey_depth",
        [](const Arr& points, const Arr& x, std::size_t directions, std::uint64_t seed) {
            return tukey_depth(as_sample(points), as_point(x),
                               make_params(directions, 500, 12, seed));
        },
        py::arg("points"), py::arg("x"), py::arg("directions") = 500,
        py::arg("seed") = 0,
        "Halfspace depth; exact for d <= 2, Monte Carlo for d >= 3.");

    m.def(
        "simplicial_depth",
        [](const Arr& points, const Arr& x, std::size_t subsets,
           std::size_t exact_threshold, std::uint64_t seed) {
            return simplicial_depth(as_sample(points), as_point(x),
                                    make_params(500, subsets, exact_threshold, seed));
        },
        py::arg("points"), py::arg("x"), py::arg("subsets") = 500,
        py::arg("exact_threshold") = 12, py::arg("seed") = 0,
        "Fraction of closed simplices containing x; exact for d <= 2.");

    m.def(
        "spatial_depth",
        [](const Arr& points, const Arr& x) {
            return spatial_depth(as_sample(points), as_point(x));
        },
        py::arg("points"), py::arg("x"));

    m.def(
        "projection_depth",
        [](const Arr& points, const Arr& x, std::size_t directions, std::uint64_t seed) {
            return projection_depth(as_sample(points), as_point(x),
                                    make_params(directions, 500, 12, seed));
        },
        py::arg("points"), py::arg("x"), py::arg("directions") = 500,
        py::arg("seed") = 0);

    m.def(
        "smoothed_depth",
        [](const std::string& kind, const Arr& points, const Arr& x,
           std::size_t surrogate, std::uint64_t seed) {
            KdeModel kde = fit_kde(as_sample(points));
            return smoothed_depth(depth_kind_from_string(kind), kde, as_point(x),
                                  surrogate, seed);
        },
        py::arg("kind"), py::arg("points"), py::arg("x"),
        py::arg("surrogate") = 10000, py::arg("seed") = 0,
        "Depth of x with respect to the KDE of the sample, via a surrogate draw.");

    m.def(
        "silverman_bandwidths",
        [](const Arr& points) { return silverman_bandwidths(as_sample(points)); },
        py::arg("points"));

    m.def(
        "kde_eval",
        [](const Arr& points, const Arr& x) {
            return kde_eval(fit_kde(as_sample(points)), as_point(x));
        },
        py::arg("points"), py::arg("x"),
        "Gaussian-product KDE density with Silverman bandwidths.");

    m.def(
        "kde_sample",
        [](const Arr& points, std::size_t count, std::uint64_t seed) {
            return as_array(kde_sample(fit_kde(as_sample(points)), count, seed));
        },
        py::arg("points"), py::arg("count"), py::arg("seed") = 0);

    m.def(
        "trimmed_mean",
        [](const Arr& points, const std::string& depth, double a, std::size_t mc,
           std::size_t surrogate, std::uint64_t seed, bool strict_indicator) {
            Sample sample = as_sample(points);
            KdeModel kde = fit_kde(sample);
            DepthKind kind = depth_kind_from_string(depth);
            DepthParams params;
            params.seed = Rng::mix(seed, 0xd17);
            DepthEvaluator ev =
                surrogate == 0 ? DepthEvaluator::empirical(kind, sample, params)
                               : DepthEvaluator::smoothed(kind, kde, surrogate, seed,
                                                          params);
            auto rule = strict_indicator ? IndicatorRule::strictly_greater
                                         : IndicatorRule::greater_equal;
            return trimmed_result_to_dict(
                trimmed_mean_mc(kde, ev, a, mc, Rng::mix(seed, 0xe5), rule));
        },
        py::arg("points"), py::arg("depth"), py::arg("a"), py::arg("mc") = 20000,
        py::arg("surrogate") = 10000, py::arg("seed") = 0,
        py::arg("strict_indicator") = false,
        "Monte Carlo depth-trimmed mean of the KDE-smoothed sample.");

    m.def("beta22_sample",
          [](std::size_t n, std::uint64_t seed) { return as_array(beta22_sample(n, seed)); },
          py::arg("n"), py::arg("seed") = 0,
          "n draws from the product Beta(2,2) population on the unit square.");

    m.def(
        "depth_field",
        [](const Arr& points, const std::string& depth, const Vec& lo, const Vec& hi,
           const std::vector<std::size_t>& shape, std::size_t surrogate,
           std::uint64_t seed) {
            Sample sample = as_sample(points);
            DepthKind kind = depth_kind_from_string(depth);
            DepthParams params;
            params.seed = Rng::mix(seed, 0xd17);
            DepthEvaluator ev =
                surrogate == 0
                    ? DepthEvaluator::empirical(kind, sample, params)
                    : DepthEvaluator::smoothed(kind, fit_kde(sample), surrogate, seed,
                                               params);
            GridSpec grid{Box{lo, hi}, shape};
            ScalarGrid field = depth_field(ev, grid);
            py::array_t<double> out(shape);
            std::copy(field.values.begin(), field.values.end(), out.mutable_data());
            return out;
        },
        py::arg("points"), py::arg("depth"), py::arg("lo"), py::arg("hi"),
        py::arg("shape"), py::arg("surrogate") = 0, py::arg("seed") = 0,
        "Depth evaluated on a rectangular lattice, returned with the grid shape.");

    m.def(
        "contours",
        [](const Arr& field, const Vec& lo, const Vec& hi, double level) {
            if (field.ndim() != 2) throw std::invalid_argument("field must be 2-d");
            GridSpec grid{Box{lo, hi},
                          {static_cast<std::size_t>(field.shape(0)),
                           static_cast<std::size_t>(field.shape(1))}};
            ScalarGrid sg{grid, std::vector<double>(field.data(),
                                                    field.data() + field.size())};
            ContourSet set = contour_marching_squares(sg, level);
            py::list closed, truncated;
            auto to_array = [](const Polyline& poly) {
                py::array_t<double> arr({poly.size(), std::size_t(2)});
                auto* p = arr.mutable_data();
                for (const auto& v : poly) {
                    *p++ = v[0];
                    *p++ = v[1];
                }
                return arr;
            };
            for (const auto& poly : set.components) closed.append(to_array(poly));
            for (const auto& poly : set.truncated) truncated.append(to_array(poly));
            py::dict out;
            out["level"] = set.level;
            out["closed"] = closed;
            out["truncated"] = truncated;
            return out;
        },
        py::arg("field"), py::arg("lo"), py::arg("hi"), py::arg("level"),
        "Marching-squares level curves of a 2-d field given its bounding box.");

    m.def(
        "run_simulation",
        [](const std::string& config_json, const std::string& cache_dir) {
            SimConfig config = SimConfig::from_json_text(config_json);
            SimResult r = run_simulation(config, cache_dir);
            py::dict out;
            out["r_values"] = as_array(r.r_values);
            out["mean"] = r.mean;
            out["covariance"] = r.covariance;
            out["reference_vector"] = r.reference.vector;
            out["reference_mass"] = r.reference.mass;
            out["failed_indices"] = r.failed_indices;
            out["config_hash"] = r.config_hash;
            return out;
        },
        py::arg("config_json"), py::arg("cache_dir") = "",
        "Replicates of the scaled estimation error R_n for a JSON experiment config.");
}
