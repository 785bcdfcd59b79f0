#include "depthtrim/hadamard.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "depthtrim/io.hpp"
#include "depthtrim/level_geometry.hpp"
#include "depthtrim/parallel.hpp"

namespace depthtrim {

Band default_band(double a, double upper_bound) {
    return Band{a - 0.2 * a, a + 0.2 * (upper_bound - a)};
}

namespace {

Band resolve_band(Band band, double a, double upper) {
    if (band.empty()) return default_band(a, upper);
    if (!(band.lo < a && a < band.hi))
        throw std::invalid_argument("band must satisfy a1 < a < a2");
    return band;
}

struct CellIntegral {
    Vec vector;
    bool truncated = false;
};

// Midpoint-rule integral of t * weight(depth(t), t) over the box. The weight
// callback sees the cell midpoint and its depth; boundary cells with depth
// at or above band_lo flip the truncation flag.
CellIntegral integrate_cells(
    const DepthEvaluator& depth, const Box& box, std::size_t resolution, double band_lo,
    const std::function<double(double, std::span<const double>)>& weight) {
    box.validate();
    if (resolution < 16)
        throw std::invalid_argument("quadrature requires resolution >= 16");
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
    std::vector<char> truncated(chunks, 0);

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
            double dv = depth(x);
            if (boundary && dv >= band_lo) truncated[c] = 1;
            double w = weight(dv, x);
            if (w == 0) continue;
            for (std::size_t j = 0; j < d; ++j) sums[c][j] += x[j] * w;
        }
    });

    CellIntegral out;
    out.vector.assign(d, 0.0);
    for (std::size_t c = 0; c < chunks; ++c) {
        out.truncated = out.truncated || truncated[c];
        for (std::size_t j = 0; j < d; ++j) out.vector[j] += sums[c][j];
    }
    for (double& v : out.vector) v *= cell_volume;
    return out;
}

double sup_abs_on_grid(const ScalarField& fn, const Box& box, std::size_t resolution) {
    const std::size_t d = box.dim();
    std::size_t cells = 1;
    for (std::size_t j = 0; j < d; ++j) cells *= resolution;
    Vec width(d);
    for (std::size_t j = 0; j < d; ++j)
        width[j] = (box.hi[j] - box.lo[j]) / static_cast<double>(resolution);
    double sup = 0;
    Vec x(d);
    for (std::size_t flat = 0; flat < cells; ++flat) {
        std::size_t rem = flat;
        for (std::size_t axis = d; axis-- > 0;) {
            std::size_t k = rem % resolution;
            rem /= resolution;
            x[axis] = box.lo[axis] + (static_cast<double>(k) + 0.5) * width[axis];
        }
        sup = std::max(sup, std::abs(fn(x)));
    }
    return sup;
}

}  // namespace

Vec functional_T(const DepthEvaluator& depth, const ScalarField& g, double a,
                 const Box& box, std::size_t resolution, Band band, bool* truncated) {
    Band b = resolve_band(band, a, depth.upper_bound());
    auto out = integrate_cells(depth, box, resolution, b.lo,
                               [&](double dv, std::span<const double> x) {
                                   return dv > a ? g(x) : 0.0;  // strict, by definition
                               });
    if (truncated) *truncated = out.truncated;
    return out.vector;
}

Vec delta_epsilon(const DepthEvaluator& depth, const ScalarField& f, const ScalarField& Y,
                  double a, double eps, const Box& box, std::size_t resolution,
                  Band band) {
    if (!(eps > 0)) throw std::invalid_argument("delta_epsilon requires eps > 0");
    Band b = resolve_band(band, a, depth.upper_bound());
    double y_sup = sup_abs_on_grid(Y, box, resolution);
    if (eps * y_sup >= std::min(a - b.lo, b.hi - a))
        throw std::runtime_error("band exceeded: eps * sup|Y| = " +
                                 format_double(eps * y_sup) + " reaches the band margin");

    auto out = integrate_cells(depth, box, resolution, b.lo,
                               [&](double dv, std::span<const double> x) {
                                   bool perturbed = dv + eps * Y(x) >= a;
                                   bool base = dv >= a;
                                   if (perturbed == base) return 0.0;
                                   return (perturbed ? 1.0 : -1.0) / eps * f(x);
                               });
    return out.vector;
}

Vec delta_limit(const DepthEvaluator& depth, const ScalarField& f, const ScalarField& Y,
                std::span<const double> center, double a, std::size_t k_dirs,
                const SurfaceParams& params) {
    if (center.size() != 2)
        throw std::invalid_argument("delta_limit is implemented for d = 2");
    if (k_dirs == 0) throw std::invalid_argument("delta_limit: k_dirs must be >= 1");

    const double h = params.fd_step * std::max(a, 1e-6);
    std::vector<Vec> terms(k_dirs, Vec(2, 0.0));
    parallel_for(k_dirs, [&](std::size_t k) {
        double theta = 2.0 * std::numbers::pi * static_cast<double>(k) /
                       static_cast<double>(k_dirs);
        Vec dir{std::cos(theta), std::sin(theta)};
        double gamma =
            radial_radius(depth, center, dir, a, params.r_max, params.root_tol);
        Vec tau{center[0] + gamma * dir[0], center[1] + gamma * dir[1]};
        double det = jacobian_det_tau(depth, center, a, theta, h, params.r_max,
                                      params.root_tol);
        double w = f(tau) * det * Y(tau);
        terms[k][0] = tau[0] * w;
        terms[k][1] = tau[1] * w;
    });

    // Equispaced trapezoid rule on the periodic circle.
    Vec result(2, 0.0);
    for (const auto& t : terms) {
        result[0] += t[0];
        result[1] += t[1];
    }
    double scale = 2.0 * std::numbers::pi / static_cast<double>(k_dirs);
    result[0] *= scale;
    result[1] *= scale;
    return result;
}

Vec nabla_epsilon(const DepthEvaluator& depth, const ScalarField& g, const ScalarField& Y,
                  double a, double eps, const Box& box, std::size_t resolution) {
    Band b = default_band(a, depth.upper_bound());
    auto out = integrate_cells(depth, box, resolution, b.lo,
                               [&](double dv, std::span<const double> x) {
                                   return dv + eps * Y(x) >= a ? g(x) : 0.0;
                               });
    return out.vector;
}

Vec hadamard_derivative(const DepthEvaluator& depth, const ScalarField& f,
                        std::span<const double> center, double a,
                        const PerturbationPair& pair, std::size_t k_dirs, const Box& box,
                        std::size_t resolution, const SurfaceParams& params) {
    Vec surface = delta_limit(depth, f, pair.y, center, a, k_dirs, params);
    Band b = default_band(a, depth.upper_bound());
    auto volume = integrate_cells(depth, box, resolution, b.lo,
                                  [&](double dv, std::span<const double> x) {
                                      return dv >= a ? pair.g(x) : 0.0;
                                  });
    Vec out(center.size());
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = surface[j] + volume.vector[j];
    return out;
}

std::vector<FdRow> fd_convergence_check(const DepthEvaluator& depth, const ScalarField& f,
                                        std::span<const double> center, double a,
                                        const PerturbationPair& pair,
                                        const std::vector<double>& eps_list, const Box& box,
                                        std::size_t resolution, std::size_t k_dirs,
                                        const SurfaceParams& params, Band band) {
    band = resolve_band(band, a, depth.upper_bound());
    double y_sup = pair.y_bound > 0 ? pair.y_bound : sup_abs_on_grid(pair.y, box, resolution);
    for (double eps : eps_list) {
        if (!(eps > 0)) throw std::invalid_argument("eps_list entries must be > 0");
        if (eps * y_sup >= std::min(a - band.lo, band.hi - a))
            throw std::runtime_error("band exceeded: eps * y_bound = " +
                                     format_double(eps * y_sup) +
                                     " reaches the band margin");
    }

    Vec t0 = functional_T(depth, f, a, box, resolution, band);
    Vec derivative =
        hadamard_derivative(depth, f, center, a, pair, k_dirs, box, resolution, params);

    std::vector<FdRow> rows;
    rows.reserve(eps_list.size());
    for (double eps : eps_list) {
        DepthEvaluator perturbed = DepthEvaluator::analytic(
            [&depth, y = pair.y, eps](std::span<const double> x) {
                return depth(x) + eps * y(x);
            },
            depth.upper_bound(), depth.dim());
        ScalarField g_eps = [&f, g = pair.g, eps](std::span<const double> x) {
            return f(x) + eps * g(x);
        };
        Vec t_eps = functional_T(perturbed, g_eps, a, box, resolution, band);

        FdRow row;
        row.eps = eps;
        row.quotient.assign(t0.size(), 0.0);
        double err_sq = 0;
        for (std::size_t j = 0; j < t0.size(); ++j) {
            row.quotient[j] = (t_eps[j] - t0[j]) / eps;
            double e = row.quotient[j] - derivative[j];
            err_sq += e * e;
        }
        row.error = std::sqrt(err_sq);
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_fd_table_csv(const std::string& path, const std::vector<FdRow>& rows) {
    std::ostringstream out;
    out << "eps,quotient_x,quotient_y,err\n";
    for (const auto& r : rows) {
        out << format_double(r.eps);
        for (double q : r.quotient) out << ',' << format_double(q);
        out << ',' << format_double(r.error) << '\n';
    }
    write_text_file(path, out.str());
}

}  // namespace depthtrim
