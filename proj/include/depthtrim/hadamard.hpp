#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "depthtrim/depth.hpp"
#include "depthtrim/grid.hpp"
#include "depthtrim/types.hpp"

namespace depthtrim {

using ScalarField = std::function<double(std::span<const double>)>;

/// A direction (y, g) for the two-argument functional: y perturbs the depth,
/// g the density. y_bound is an upper bound on |y|; 0 means "estimate it on
/// the quadrature grid".
struct PerturbationPair {
    ScalarField y;
    ScalarField g;
    double y_bound = 0;
};

/// Depth band (a1, a2) around the trimming level.
struct Band {
    double lo = 0, hi = 0;
    bool empty() const { return lo == 0 && hi == 0; }
};

/// Default band: a1 = a - 0.2*a, a2 = a + 0.2*(T - a).
Band default_band(double a, double upper_bound);

/// Knobs for the surface-integral side (radial solves and the Jacobian
/// finite difference).
struct SurfaceParams {
    std::size_t directions = 64;
    double r_max = 10.0;
    double root_tol = 1e-10;
    double fd_step = 1e-4;  // relative to the level a
};

/// T(y~, g) = integral of t * 1{depth(t) > a} * g(t) over the box (midpoint
/// rule, strict inequality). Sets *truncated when a boundary cell reaches the
/// band, as the region may then leave the box.
Vec functional_T(const DepthEvaluator& depth, const ScalarField& g, double a,
                 const Box& box, std::size_t resolution, Band band = {},
                 bool* truncated = nullptr);

/// Difference quotient of the indicator in direction Y against density f:
/// integral of t * (1{D + eps*Y >= a} - 1{D >= a}) / eps * f(t).
/// Throws "band exceeded" when eps * sup|Y| reaches the band margin.
Vec delta_epsilon(const DepthEvaluator& depth, const ScalarField& f, const ScalarField& Y,
                  double a, double eps, const Box& box, std::size_t resolution,
                  Band band = {});

/// Surface-integral limit of delta_epsilon: trapezoid quadrature over
/// equispaced angles of tau * f(tau) * |det d tau| * Y(tau) at level a
/// (d = 2 only).
Vec delta_limit(const DepthEvaluator& depth, const ScalarField& f, const ScalarField& Y,
                std::span<const double> center, double a, std::size_t k_dirs,
                const SurfaceParams& params = {});

/// integral of t * 1{D + eps*Y >= a} * g(t); eps = 0 gives the volume term.
Vec nabla_epsilon(const DepthEvaluator& depth, const ScalarField& g, const ScalarField& Y,
                  double a, double eps, const Box& box, std::size_t resolution);

/// Derivative of T at (depth, f) in direction (pair.y, pair.g): surface term
/// from delta_limit plus the volume term integral of t * 1{D >= a} * g.
Vec hadamard_derivative(const DepthEvaluator& depth, const ScalarField& f,
                        std::span<const double> center, double a,
                        const PerturbationPair& pair, std::size_t k_dirs, const Box& box,
                        std::size_t resolution, const SurfaceParams& params = {});

struct FdRow {
    double eps = 0;
    Vec quotient;
    double error = 0;  // Euclidean distance to the derivative
};

/// (T(D + eps*y, f + eps*g) - T(D, f)) / eps for each eps, with the error
/// column measured against hadamard_derivative. The band must leave room for
/// every eps * y_bound; widen it beyond the default when y is large on the
/// box.
std::vector<FdRow> fd_convergence_check(const DepthEvaluator& depth, const ScalarField& f,
                                        std::span<const double> center, double a,
                                        const PerturbationPair& pair,
                                        const std::vector<double>& eps_list, const Box& box,
                                        std::size_t resolution, std::size_t k_dirs,
                                        const SurfaceParams& params = {}, Band band = {});

/// CSV export, columns: eps,quotient_x,quotient_y,err.
void write_fd_table_csv(const std::string& path, const std::vector<FdRow>& rows);

}  // namespace depthtrim
