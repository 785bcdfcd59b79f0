#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "depthtrim/depth.hpp"
#include "depthtrim/grid.hpp"
#include "depthtrim/types.hpp"

namespace depthtrim {

/// Radial parametrization of one level-set component: unit directions from
/// the centre and the radii at which the depth crosses the level.
struct RadialChart {
    Vec center;
    double level = 0;
    double window = 0;  // monotonicity window half-width used by diagnostics
    std::vector<Vec> directions;
    Vec radii;

    Vec point(std::size_t k) const {
        Vec p = center;
        for (std::size_t j = 0; j < p.size(); ++j) p[j] += radii[k] * directions[k][j];
        return p;
    }
};

class PartialChartError : public std::runtime_error {
public:
    PartialChartError(std::string msg, std::vector<std::size_t> failed)
        : std::runtime_error(std::move(msg)), failed_directions(std::move(failed)) {}
    std::vector<std::size_t> failed_directions;
};

using Polyline = std::vector<std::array<double, 2>>;

struct ContourSet {
    double level = 0;
    std::vector<Polyline> components;  // closed loops (first vertex == last implied)
    std::vector<Polyline> truncated;   // open chains hitting the grid boundary
};

/// Grid argmax refined by coordinate search with step halving (30 rounds).
/// Throws "no interior mode" on a flat field.
Vec deepest_point(const DepthEvaluator& depth, const Box& search_box,
                  std::size_t resolution);

/// Smallest r > 0 with depth(center + r*direction) == level, located by
/// outward marching (step r_max/256) and bisection. The bracket is tightened
/// to width <= tol * r_max and the midpoint refined while |depth - level|
/// exceeds tol (up to an iteration cap, so step-function evaluators still
/// return the bracket midpoint).
double radial_radius(const DepthEvaluator& depth, std::span<const double> center,
                     std::span<const double> direction, double level, double r_max,
                     double tol);

/// Chart over K equispaced directions (d = 2) or a deterministic Fibonacci /
/// seeded quasi-uniform set (d >= 3). Any failed ray raises PartialChartError
/// listing the failed direction indices.
RadialChart radial_chart(const DepthEvaluator& depth, Vec center, double level,
                         std::size_t K, double r_max, double tol);

struct H2Report {
    std::vector<char> passed;  // per direction
    double pass_fraction = 0;
    double delta = 0;
    std::size_t probes = 0;
    std::vector<std::size_t> flagged;  // directions failing monotonicity
};

/// Samples depth along each chart ray at `probes` offsets in (-delta, delta)
/// around the crossing and reports whether the profile is strictly
/// decreasing: every step must fall by more than noise_tol, so plateaus and
/// reversals both flag. Diagnostic only; never throws on violations.
H2Report check_h2(const DepthEvaluator& depth, const RadialChart& chart, double delta,
                  std::size_t probes, double noise_tol = 1e-9);

/// Marching squares with linear interpolation on a d = 2 field; saddle cells
/// are disambiguated by the cell-centre mean. Chains that end on the grid
/// boundary are reported as truncated.
ContourSet contour_marching_squares(const ScalarGrid& field, double level);

/// |det d(tau)| at (level, theta) for d = 2 by central differences of
/// (s, theta) -> center + gamma(s, theta) * (cos theta, sin theta).
double jacobian_det_tau(const DepthEvaluator& depth, std::span<const double> center,
                        double level, double theta, double h, double r_max,
                        double root_tol = 1e-10);

/// Shoelace area of a closed polyline.
double polygon_area(const Polyline& polyline);

/// CSV export, columns: component_id,vertex_index,x,y. Closed components
/// come first, truncated chains continue the id sequence.
void write_contours_csv(const std::string& path, const ContourSet& contours);

}  // namespace depthtrim
