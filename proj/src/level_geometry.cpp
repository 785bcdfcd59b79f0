#include "depthtrim/level_geometry.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>
#include <unordered_map>

#include "depthtrim/io.hpp"
#include "depthtrim/parallel.hpp"
#include "depthtrim/rng.hpp"

namespace depthtrim {

Vec deepest_point(const DepthEvaluator& depth, const Box& search_box,
                  std::size_t resolution) {
    search_box.validate();
    if (resolution < 2) throw std::invalid_argument("deepest_point: resolution must be >= 2");
    const std::size_t d = search_box.dim();

    GridSpec grid{search_box, std::vector<std::size_t>(d, resolution)};
    std::vector<double> values(grid.node_count());
    parallel_for(values.size(), [&](std::size_t i) { values[i] = depth(grid.node(i)); });

    auto max_it = std::max_element(values.begin(), values.end());
    auto min_it = std::min_element(values.begin(), values.end());
    if (!(*max_it > *min_it)) throw std::runtime_error("no interior mode");

    Vec x = grid.node(static_cast<std::size_t>(max_it - values.begin()));
    double best = *max_it;
    Vec step(d);
    for (std::size_t j = 0; j < d; ++j)
        step[j] = (search_box.hi[j] - search_box.lo[j]) / static_cast<double>(resolution);

    Vec candidate = x;
    for (int round = 0; round < 30; ++round) {
        for (std::size_t j = 0; j < d; ++j) {
            for (double sign : {-1.0, 1.0}) {
                candidate = x;
                candidate[j] = std::clamp(x[j] + sign * step[j], search_box.lo[j],
                                          search_box.hi[j]);
                double v = depth(candidate);
                if (v > best) {
                    best = v;
                    x = candidate;
                }
            }
        }
        for (double& s : step) s *= 0.5;
    }
    return x;
}

double radial_radius(const DepthEvaluator& depth, std::span<const double> center,
                     std::span<const double> direction, double level, double r_max,
                     double tol) {
    if (!(r_max > 0) || !(tol > 0))
        throw std::invalid_argument("radial_radius: r_max and tol must be positive");
    const std::size_t d = center.size();
    Vec x(d);
    auto eval_at = [&](double r) {
        for (std::size_t j = 0; j < d; ++j) x[j] = center[j] + r * direction[j];
        return depth(x);
    };

    if (!(eval_at(0.0) > level)) throw std::runtime_error("center below level");

    const double step = r_max / 256.0;
    double lo = 0.0, hi = -1.0;
    for (int k = 1; k <= 256; ++k) {
        double r = static_cast<double>(k) * step;
        double v = eval_at(r);
        if (v <= level) {
            hi = r;
            break;
        }
        lo = r;
    }
    if (hi < 0) throw std::runtime_error("level not reached within r_max");

    double mid = 0.5 * (lo + hi);
    double v_mid = eval_at(mid);
    const double width_target = tol * r_max;
    for (int iter = 0; iter < 120; ++iter) {
        if (hi - lo <= width_target && std::abs(v_mid - level) <= tol) break;
        if (v_mid > level) lo = mid;
        else hi = mid;
        double next = 0.5 * (lo + hi);
        if (next == mid) break;  // bracket at machine precision
        mid = next;
        v_mid = eval_at(mid);
    }
    return mid;
}

namespace {

std::vector<Vec> chart_directions(std::size_t d, std::size_t K) {
    std::vector<Vec> dirs;
    dirs.reserve(K);
    if (d == 2) {
        for (std::size_t k = 0; k < K; ++k) {
            double theta = 2.0 * std::numbers::pi * static_cast<double>(k) /
                           static_cast<double>(K);
            dirs.push_back({std::cos(theta), std::sin(theta)});
        }
        return dirs;
    }
    if (d == 3) {  // Fibonacci sphere
        const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
        for (std::size_t k = 0; k < K; ++k) {
            double z = 1.0 - 2.0 * (static_cast<double>(k) + 0.5) / static_cast<double>(K);
            double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
            double phi = golden * static_cast<double>(k);
            dirs.push_back({rho * std::cos(phi), rho * std::sin(phi), z});
        }
        return dirs;
    }
    for (std::size_t k = 0; k < K; ++k) {  // seeded quasi-uniform fallback
        Rng rng = substream(0xd14ec7104full, k);
        Vec u(d);
        double norm_sq = 0;
        do {
            norm_sq = 0;
            for (auto& v : u) {
                v = rng.normal();
                norm_sq += v * v;
            }
        } while (norm_sq <= 1e-300);
        double inv = 1.0 / std::sqrt(norm_sq);
        for (auto& v : u) v *= inv;
        dirs.push_back(u);
    }
    return dirs;
}

}  // namespace

RadialChart radial_chart(const DepthEvaluator& depth, Vec center, double level,
                         std::size_t K, double r_max, double tol) {
    if (K == 0) throw std::invalid_argument("radial_chart: K must be >= 1");
    RadialChart chart;
    chart.center = center;
    chart.level = level;
    chart.directions = chart_directions(center.size(), K);
    chart.radii.assign(K, 0.0);

    std::vector<std::string> errors(K);
    std::vector<char> failed(K, 0);
    parallel_for(K, [&](std::size_t k) {
        try {
            chart.radii[k] =
                radial_radius(depth, chart.center, chart.directions[k], level, r_max, tol);
        } catch (const std::exception& e) {
            failed[k] = 1;
            errors[k] = e.what();
        }
    });

    std::vector<std::size_t> failed_idx;
    for (std::size_t k = 0; k < K; ++k)
        if (failed[k]) failed_idx.push_back(k);
    if (!failed_idx.empty()) {
        std::ostringstream msg;
        msg << "partial chart: " << failed_idx.size() << "/" << K
            << " directions failed (";
        for (std::size_t i = 0; i < failed_idx.size() && i < 8; ++i)
            msg << (i ? ", " : "") << failed_idx[i];
        if (failed_idx.size() > 8) msg << ", ...";
        msg << "); first error: " << errors[failed_idx.front()];
        throw PartialChartError(msg.str(), std::move(failed_idx));
    }
    return chart;
}

H2Report check_h2(const DepthEvaluator& depth, const RadialChart& chart, double delta,
                  std::size_t probes, double noise_tol) {
    if (probes < 2) throw std::invalid_argument("check_h2: need at least 2 probes");
    H2Report report;
    report.delta = delta;
    report.probes = probes;
    report.passed.assign(chart.directions.size(), 0);

    const std::size_t d = chart.center.size();
    Vec x(d);
    for (std::size_t k = 0; k < chart.directions.size(); ++k) {
        const Vec& dir = chart.directions[k];
        double gamma = chart.radii[k];
        std::vector<double> values(probes);
        for (std::size_t p = 0; p < probes; ++p) {
            double lambda = -delta + 2.0 * delta * (static_cast<double>(p) + 1.0) /
                                         (static_cast<double>(probes) + 1.0);
            for (std::size_t j = 0; j < d; ++j)
                x[j] = chart.center[j] + (gamma + lambda) * dir[j];
            values[p] = depth(x);
        }
        // strictly decreasing: every step must fall by more than the noise
        // tolerance, so plateaus and reversals both flag the direction
        bool ok = true;
        for (std::size_t p = 0; p + 1 < probes && ok; ++p)
            if (!(values[p + 1] - values[p] < -noise_tol)) ok = false;
        report.passed[k] = ok ? 1 : 0;
        if (!ok) report.flagged.push_back(k);
    }
    std::size_t passed = 0;
    for (char c : report.passed) passed += c;
    report.pass_fraction =
        chart.directions.size() == 0
            ? 0.0
            : static_cast<double>(passed) / static_cast<double>(chart.directions.size());
    return report;
}

// --- marching squares ---------------------------------------------------------

namespace {

// Edge ids on the node lattice; adjacent cells address shared edges
// identically so chains stitch without coordinate comparisons.
std::uint64_t x_edge(std::size_t i, std::size_t j, std::size_t ny) {
    return ((static_cast<std::uint64_t>(i) * ny + j) << 1) | 0u;
}
std::uint64_t y_edge(std::size_t i, std::size_t j, std::size_t ny) {
    return ((static_cast<std::uint64_t>(i) * ny + j) << 1) | 1u;
}

}  // namespace

ContourSet contour_marching_squares(const ScalarGrid& field, double level) {
    if (field.grid.dim() != 2)
        throw std::invalid_argument("contour_marching_squares requires a 2-d field");
    const std::size_t nx = field.grid.shape[0];
    const std::size_t ny = field.grid.shape[1];
    if (nx < 2 || ny < 2)
        throw std::invalid_argument("contour_marching_squares: grid too small");

    auto coord = [&](std::size_t i, std::size_t j) {
        return std::array<double, 2>{field.grid.coord(0, i), field.grid.coord(1, j)};
    };

    // Crossing points, keyed by edge id.
    std::unordered_map<std::uint64_t, std::array<double, 2>> cut_points;
    auto cut = [&](std::size_t i0, std::size_t j0, std::size_t i1, std::size_t j1,
                   std::uint64_t id) {
        double v0 = field.at(i0, j0), v1 = field.at(i1, j1);
        double t = (level - v0) / (v1 - v0);
        auto p0 = coord(i0, j0), p1 = coord(i1, j1);
        cut_points.emplace(id, std::array<double, 2>{p0[0] + t * (p1[0] - p0[0]),
                                                     p0[1] + t * (p1[1] - p0[1])});
    };

    std::vector<std::array<std::uint64_t, 2>> segments;
    for (std::size_t i = 0; i + 1 < nx; ++i) {
        for (std::size_t j = 0; j + 1 < ny; ++j) {
            bool a = field.at(i, j) >= level;        // (i, j)
            bool b = field.at(i + 1, j) >= level;    // (i+1, j)
            bool c = field.at(i + 1, j + 1) >= level;
            bool dd = field.at(i, j + 1) >= level;
            int config = int(a) | (int(b) << 1) | (int(c) << 2) | (int(dd) << 3);
            if (config == 0 || config == 15) continue;

            std::uint64_t ab = x_edge(i, j, ny), bc = y_edge(i + 1, j, ny),
                          cd = x_edge(i, j + 1, ny), da = y_edge(i, j, ny);
            if (a != b) cut(i, j, i + 1, j, ab);
            if (b != c) cut(i + 1, j, i + 1, j + 1, bc);
            if (dd != c) cut(i, j + 1, i + 1, j + 1, cd);
            if (a != dd) cut(i, j, i, j + 1, da);

            if (config == 5 || config == 10) {  // ambiguous saddle
                double center = 0.25 * (field.at(i, j) + field.at(i + 1, j) +
                                        field.at(i + 1, j + 1) + field.at(i, j + 1));
                bool center_in = center >= level;
                bool pair_ab_bc = (config == 5) == center_in;
                if (pair_ab_bc) {
                    segments.push_back({ab, bc});
                    segments.push_back({cd, da});
                } else {
                    segments.push_back({bc, cd});
                    segments.push_back({da, ab});
                }
                continue;
            }

            std::array<std::uint64_t, 4> cuts{};
            std::size_t count = 0;
            if (a != b) cuts[count++] = ab;
            if (b != c) cuts[count++] = bc;
            if (dd != c) cuts[count++] = cd;
            if (a != dd) cuts[count++] = da;
            segments.push_back({cuts[0], cuts[1]});
        }
    }

    // Chain assembly: each edge id touches at most two segments.
    std::unordered_map<std::uint64_t, std::array<std::ptrdiff_t, 2>> incident;
    incident.reserve(segments.size() * 2);
    for (std::size_t s = 0; s < segments.size(); ++s) {
        for (std::uint64_t e : segments[s]) {
            auto [it, fresh] = incident.emplace(e, std::array<std::ptrdiff_t, 2>{-1, -1});
            auto& slots = it->second;
            (void)fresh;
            if (slots[0] < 0) slots[0] = static_cast<std::ptrdiff_t>(s);
            else slots[1] = static_cast<std::ptrdiff_t>(s);
        }
    }

    ContourSet out;
    out.level = level;
    std::vector<char> used(segments.size(), 0);

    auto walk = [&](std::size_t start, bool& closed) {
        std::vector<std::uint64_t> chain;
        chain.push_back(segments[start][0]);
        chain.push_back(segments[start][1]);
        used[start] = 1;
        closed = false;
        while (true) {
            std::uint64_t tip = chain.back();
            auto& slots = incident[tip];
            std::ptrdiff_t next = -1;
            for (std::ptrdiff_t s : slots)
                if (s >= 0 && !used[s]) next = s;
            if (next < 0) break;
            used[static_cast<std::size_t>(next)] = 1;
            const auto& seg = segments[static_cast<std::size_t>(next)];
            chain.push_back(seg[0] == tip ? seg[1] : seg[0]);
            if (chain.back() == chain.front()) {
                closed = true;
                chain.pop_back();
                break;
            }
        }
        return chain;
    };

    for (std::size_t s = 0; s < segments.size(); ++s) {
        if (used[s]) continue;
        bool closed = false;
        auto chain = walk(s, closed);
        if (!closed) {
            // The start segment may be mid-chain; extend from the other end.
            std::reverse(chain.begin(), chain.end());
            std::uint64_t tip = chain.back();
            while (true) {
                auto& slots = incident[tip];
                std::ptrdiff_t next = -1;
                for (std::ptrdiff_t q : slots)
                    if (q >= 0 && !used[q]) next = q;
                if (next < 0) break;
                used[static_cast<std::size_t>(next)] = 1;
                const auto& seg = segments[static_cast<std::size_t>(next)];
                chain.push_back(seg[0] == tip ? seg[1] : seg[0]);
                tip = chain.back();
            }
        }
        Polyline poly;
        poly.reserve(chain.size());
        for (std::uint64_t e : chain) poly.push_back(cut_points.at(e));
        if (closed) out.components.push_back(std::move(poly));
        else out.truncated.push_back(std::move(poly));
    }
    return out;
}

double jacobian_det_tau(const DepthEvaluator& depth, std::span<const double> center,
                        double level, double theta, double h, double r_max,
                        double root_tol) {
    if (center.size() != 2)
        throw std::invalid_argument("jacobian_det_tau is defined for d = 2");
    auto tau = [&](double s, double angle) {
        Vec dir{std::cos(angle), std::sin(angle)};
        double gamma = radial_radius(depth, center, dir, s, r_max, root_tol);
        return std::array<double, 2>{center[0] + gamma * dir[0],
                                     center[1] + gamma * dir[1]};
    };
    auto sp = tau(level + h, theta), sm = tau(level - h, theta);
    auto tp = tau(level, theta + h), tm = tau(level, theta - h);
    double inv = 1.0 / (2.0 * h);
    double c0x = (sp[0] - sm[0]) * inv, c0y = (sp[1] - sm[1]) * inv;
    double c1x = (tp[0] - tm[0]) * inv, c1y = (tp[1] - tm[1]) * inv;
    return std::abs(c0x * c1y - c0y * c1x);
}

double polygon_area(const Polyline& polyline) {
    double twice = 0;
    const std::size_t n = polyline.size();
    for (std::size_t i = 0; i < n; ++i) {
        const auto& p = polyline[i];
        const auto& q = polyline[(i + 1) % n];
        twice += p[0] * q[1] - q[0] * p[1];
    }
    return 0.5 * twice;
}

void write_contours_csv(const std::string& path, const ContourSet& contours) {
    std::ostringstream out;
    out << "component_id,vertex_index,x,y\n";
    std::size_t id = 0;
    auto dump = [&](const Polyline& poly) {
        for (std::size_t v = 0; v < poly.size(); ++v)
            out << id << ',' << v << ',' << format_double(poly[v][0]) << ','
                << format_double(poly[v][1]) << '\n';
        ++id;
    };
    for (const auto& p : contours.components) dump(p);
    for (const auto& p : contours.truncated) dump(p);
    write_text_file(path, out.str());
}

}  // namespace depthtrim
