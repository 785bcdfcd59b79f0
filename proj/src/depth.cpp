#include "depthtrim/depth.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <optional>

#include "depthtrim/parallel.hpp"
#include "depthtrim/rng.hpp"

namespace depthtrim {

std::string to_string(DepthKind kind) {
    switch (kind) {
        case DepthKind::tukey: return "tukey";
        case DepthKind::simplicial: return "simplicial";
        case DepthKind::spatial: return "spatial";
        case DepthKind::projection: return "projection";
    }
    return "unknown";
}

DepthKind depth_kind_from_string(const std::string& name) {
    if (name == "tukey") return DepthKind::tukey;
    if (name == "simplicial" || name == "liu") return DepthKind::simplicial;
    if (name == "spatial") return DepthKind::spatial;
    if (name == "projection") return DepthKind::projection;
    throw std::invalid_argument("unknown depth kind: " + name);
}

namespace {

void check_query(const Sample& sample, std::span<const double> x) {
    if (sample.empty()) throw std::invalid_argument("empty sample");
    if (x.size() != sample.dim())
        throw std::invalid_argument("dimension mismatch: query has " +
                                    std::to_string(x.size()) + " coordinates, sample has " +
                                    std::to_string(sample.dim()));
}

// --- integer angular keys ---------------------------------------------------
//
// Monotone map from the direction of (dx, dy) to a 32-bit key built from the
// quadrant and the diamond-angle ratio. Negating a vector negates nothing in
// the ratio computation, so antipodal directions differ by exactly 2^31:
// semicircle arithmetic on keys is exact. Distinct directions collide only
// below the 2^-30 quantum (irrelevant for samples in general position).
std::uint32_t angular_key(double dx, double dy) {
    int quadrant;
    double num, den;
    if (dy >= 0) {
        if (dx >= 0) { quadrant = 0; num = dy; den = dx + dy; }
        else         { quadrant = 1; num = -dx; den = -dx + dy; }
    } else {
        if (dx < 0)  { quadrant = 2; num = -dy; den = -dx - dy; }
        else         { quadrant = 3; num = dx; den = dx - dy; }
    }
    auto low = static_cast<std::uint32_t>((num / den) * 1073741824.0);  // 2^30
    if (low >= 1073741824u) {
        quadrant = (quadrant + 1) & 3;
        low = 0;
    }
    return (static_cast<std::uint32_t>(quadrant) << 30) | low;
}

constexpr std::uint64_t kFullTurn = 1ull << 33;  // doubled-key circle
constexpr std::uint64_t kHalfTurn = 1ull << 32;
constexpr std::uint64_t kQuarterTurn = 1ull << 31;

// Doubled keys (all even) of the directions from x to the sample points,
// sorted ascending; coincident points are tallied separately.
struct AngularView {
    std::vector<std::uint64_t> keys;
    std::size_t coincident = 0;
};

AngularView angular_view(const Sample& sample, std::span<const double> x) {
    AngularView view;
    view.keys.reserve(sample.size());
    for (std::size_t i = 0; i < sample.size(); ++i) {
        double dx = sample(i, 0) - x[0];
        double dy = sample(i, 1) - x[1];
        if (dx == 0 && dy == 0) {
            ++view.coincident;
            continue;
        }
        view.keys.push_back(static_cast<std::uint64_t>(angular_key(dx, dy)) << 1);
    }
    std::sort(view.keys.begin(), view.keys.end());
    return view;
}

// --- Tukey ------------------------------------------------------------------

double tukey_exact_1d(const Sample& sample, double x) {
    std::size_t le = 0, ge = 0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        double v = sample(i, 0);
        if (v <= x) ++le;
        if (v >= x) ++ge;
    }
    return static_cast<double>(std::min(le, ge)) / static_cast<double>(sample.size());
}

// Exact planar halfspace depth. The count of a closed halfspace with outward
// direction at doubled key s is the number of keys in [s - 2^31, s + 2^31];
// as s sweeps the circle the count only changes at key +- 2^31, so probing
// one odd s per event interval finds the true minimum. Odd probes can never
// tie with the even point keys, which makes closed/open distinctions moot.
double tukey_exact_2d(const Sample& sample, std::span<const double> x) {
    AngularView view = angular_view(sample, x);
    const auto& keys = view.keys;
    const auto n = static_cast<double>(sample.size());
    if (keys.empty()) return 1.0;

    auto rank = [&](std::uint64_t v) {
        return static_cast<std::size_t>(
            std::lower_bound(keys.begin(), keys.end(), v) - keys.begin());
    };
    auto count_arc = [&](std::uint64_t lo, std::uint64_t hi) {  // arc [lo, hi]
        if (lo <= hi) return rank(hi) - rank(lo);
        return (keys.size() - rank(lo)) + rank(hi);
    };

    std::size_t best = keys.size();
    for (std::uint64_t k : keys) {
        for (std::uint64_t event : {(k + kQuarterTurn) % kFullTurn,
                                    (k + kFullTurn - kQuarterTurn) % kFullTurn}) {
            std::uint64_t probe = event + 1;  // odd, inside the next interval
            std::uint64_t lo = (probe + kFullTurn - kQuarterTurn) % kFullTurn;
            std::uint64_t hi = (probe + kQuarterTurn) % kFullTurn;
            best = std::min(best, count_arc(lo, hi));
            if (best == 0) break;
        }
        if (best == 0) break;
    }
    return (static_cast<double>(view.coincident) + static_cast<double>(best)) / n;
}

void fill_unit_direction(Rng& rng, std::span<double> u) {
    while (true) {
        double norm_sq = 0;
        for (auto& v : u) {
            v = rng.normal();
            norm_sq += v * v;
        }
        if (norm_sq > 1e-300) {
            double inv = 1.0 / std::sqrt(norm_sq);
            for (auto& v : u) v *= inv;
            return;
        }
    }
}

double halfspace_count(const Sample& sample, std::span<const double> x,
                       std::span<const double> u) {
    std::size_t count = 0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        auto row = sample.row(i);
        double s = 0;
        for (std::size_t j = 0; j < row.size(); ++j) s += (row[j] - x[j]) * u[j];
        if (s >= 0) ++count;
    }
    return static_cast<double>(count) / static_cast<double>(sample.size());
}

// --- simplicial -------------------------------------------------------------

// Barycentric membership in the closed simplex spanned by the given vertex
// indices. Returns nullopt when the simplex is degenerate (pivot below
// 1e-12 of the matrix scale).
std::optional<bool> simplex_contains(const Sample& sample,
                                     std::span<const std::size_t> idx,
                                     std::span<const double> x) {
    const std::size_t d = sample.dim();
    std::vector<double> m(d * d);
    std::vector<double> rhs(d);
    auto v0 = sample.row(idx[0]);
    double scale = 0;
    for (std::size_t c = 0; c < d; ++c) {
        auto vc = sample.row(idx[c + 1]);
        for (std::size_t r = 0; r < d; ++r) {
            m[r * d + c] = vc[r] - v0[r];
            scale = std::max(scale, std::abs(m[r * d + c]));
        }
    }
    for (std::size_t r = 0; r < d; ++r) rhs[r] = x[r] - v0[r];
    if (scale == 0) return std::nullopt;

    // Gaussian elimination with partial pivoting.
    for (std::size_t col = 0; col < d; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < d; ++r)
            if (std::abs(m[r * d + col]) > std::abs(m[pivot * d + col])) pivot = r;
        if (std::abs(m[pivot * d + col]) <= 1e-12 * scale) return std::nullopt;
        if (pivot != col) {
            for (std::size_t c = col; c < d; ++c) std::swap(m[pivot * d + c], m[col * d + c]);
            std::swap(rhs[pivot], rhs[col]);
        }
        for (std::size_t r = col + 1; r < d; ++r) {
            double f = m[r * d + col] / m[col * d + col];
            for (std::size_t c = col; c < d; ++c) m[r * d + c] -= f * m[col * d + c];
            rhs[r] -= f * rhs[col];
        }
    }
    std::vector<double> lambda(d);
    for (std::size_t r = d; r-- > 0;) {
        double s = rhs[r];
        for (std::size_t c = r + 1; c < d; ++c) s -= m[r * d + c] * lambda[c];
        lambda[r] = s / m[r * d + r];
    }
    double lambda0 = 1;
    for (double l : lambda) lambda0 -= l;
    if (lambda0 < -kContainmentTol) return false;
    for (double l : lambda)
        if (l < -kContainmentTol) return false;
    return true;
}

double simplicial_enumerate(const Sample& sample, std::span<const double> x) {
    const std::size_t n = sample.size();
    const std::size_t k = sample.dim() + 1;
    std::vector<std::size_t> idx(k);
    for (std::size_t i = 0; i < k; ++i) idx[i] = i;

    std::uint64_t contained = 0, valid = 0;
    while (true) {
        if (auto c = simplex_contains(sample, idx, x)) {
            ++valid;
            if (*c) ++contained;
        }
        // next lexicographic combination
        std::size_t i = k;
        while (i-- > 0) {
            if (idx[i] != i + n - k) {
                ++idx[i];
                for (std::size_t j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
                break;
            }
            if (i == 0) {
                if (valid == 0)
                    throw std::runtime_error("simplicial depth: all simplices degenerate");
                return static_cast<double>(contained) / static_cast<double>(valid);
            }
        }
    }
}

double simplicial_count_1d(const Sample& sample, double x) {
    std::size_t lower = 0, upper = 0, ties = 0;
    std::vector<double> values(sample.size());
    for (std::size_t i = 0; i < sample.size(); ++i) {
        double v = sample(i, 0);
        values[i] = v;
        if (v < x) ++lower;
        else if (v > x) ++upper;
        else ++ties;
    }
    std::sort(values.begin(), values.end());
    std::uint64_t degenerate = 0;
    for (std::size_t i = 0; i < values.size();) {
        std::size_t j = i;
        while (j < values.size() && values[j] == values[i]) ++j;
        std::uint64_t run = j - i;
        degenerate += run * (run - 1) / 2;
        i = j;
    }
    auto n = static_cast<std::uint64_t>(sample.size());
    std::uint64_t valid = n * (n - 1) / 2 - degenerate;
    if (valid == 0) throw std::runtime_error("simplicial depth: all simplices degenerate");
    std::uint64_t contained = static_cast<std::uint64_t>(lower) * upper +
                              static_cast<std::uint64_t>(ties) * (lower + upper);
    return static_cast<double>(contained) / static_cast<double>(valid);
}

// Exact planar simplicial depth by angular counting: a triangle of
// non-coincident points misses x iff its three vertices fit in an open
// halfplane through x, and each such triangle is counted once at its first
// vertex in angular order. Assumes general position (no exactly collinear
// triple off x); triangles touching a coincident point always contain x.
double simplicial_count_2d(const Sample& sample, std::span<const double> x) {
    AngularView view = angular_view(sample, x);
    const auto& keys = view.keys;
    const std::size_t m = keys.size();
    auto n = static_cast<std::uint64_t>(sample.size());
    std::uint64_t total = n * (n - 1) * (n - 2) / 6;
    if (total == 0) throw std::runtime_error("insufficient points");

    std::uint64_t missing = 0;
    std::size_t q = 0;  // two-pointer over the circular extension
    for (std::size_t r = 0; r < m; ++r) {
        if (q < r + 1) q = r + 1;
        std::uint64_t limit = keys[r] + kHalfTurn;
        while (q < r + m) {
            std::uint64_t val = q < m ? keys[q] : keys[q - m] + kFullTurn;
            if (val >= limit) break;
            ++q;
        }
        std::uint64_t in_arc = q - r - 1;
        missing += in_arc * (in_arc - (in_arc > 0 ? 1 : 0)) / 2;
    }
    return static_cast<double>(total - missing) / static_cast<double>(total);
}

// --- projection -------------------------------------------------------------

double median_destructive(std::vector<double>& v) {
    std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    double hi = v[mid];
    if (v.size() % 2 == 1) return hi;
    std::nth_element(v.begin(), v.begin() + mid - 1, v.begin() + mid);
    return 0.5 * (v[mid - 1] + hi);
}

struct ProjectionTable {
    Sample directions;  // rows are unit vectors with MAD > 0
    Vec med, mad;
};

ProjectionTable build_projection_table(const Sample& sample, const DepthParams& params) {
    if (sample.size() < 2)
        throw std::invalid_argument("projection depth requires n >= 2");
    const std::size_t d = sample.dim();

    Sample candidates(0, d);
    Vec axis(d, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
        axis.assign(d, 0.0);
        axis[j] = 1.0;
        candidates.append_row(axis);
    }
    if (d > 1) {
        Vec u(d);
        for (std::size_t k = 0; k < params.direction_count; ++k) {
            Rng rng = substream(params.seed, k);
            fill_unit_direction(rng, u);
            candidates.append_row(u);
        }
    }

    ProjectionTable table;
    table.directions = Sample(0, d);
    std::vector<double> proj(sample.size());
    for (std::size_t k = 0; k < candidates.size(); ++k) {
        auto u = candidates.row(k);
        for (std::size_t i = 0; i < sample.size(); ++i) proj[i] = dot(sample.row(i), u);
        std::vector<double> work = proj;
        double med = median_destructive(work);
        for (std::size_t i = 0; i < proj.size(); ++i) work[i] = std::abs(proj[i] - med);
        double mad = median_destructive(work);
        if (mad > 0) {
            table.directions.append_row(u);
            table.med.push_back(med);
            table.mad.push_back(mad);
        }
    }
    if (table.med.empty()) throw std::runtime_error("degenerate projections");
    return table;
}

double projection_depth_from_table(const ProjectionTable& table,
                                   std::span<const double> x) {
    double outlyingness = 0;
    for (std::size_t k = 0; k < table.med.size(); ++k) {
        double o = std::abs(dot(table.directions.row(k), x) - table.med[k]) / table.mad[k];
        outlyingness = std::max(outlyingness, o);
    }
    return 1.0 / (1.0 + outlyingness);
}

}  // namespace

double tukey_depth_mc(const Sample& sample, std::span<const double> x,
                      std::size_t direction_count, std::uint64_t seed) {
    check_query(sample, x);
    if (direction_count == 0) throw std::invalid_argument("direction_count must be >= 1");
    Vec u(sample.dim());
    double best = 1.0;
    for (std::size_t k = 0; k < direction_count; ++k) {
        Rng rng = substream(seed, k);
        fill_unit_direction(rng, u);
        best = std::min(best, halfspace_count(sample, x, u));
        if (best == 0) break;
    }
    return best;
}

double tukey_depth(const Sample& sample, std::span<const double> x,
                   const DepthParams& params) {
    check_query(sample, x);
    if (sample.dim() == 1) return tukey_exact_1d(sample, x[0]);
    if (sample.dim() == 2) return tukey_exact_2d(sample, x);
    return tukey_depth_mc(sample, x, params.direction_count, params.seed);
}

double simplicial_depth_mc(const Sample& sample, std::span<const double> x,
                           std::size_t subset_count, std::uint64_t seed) {
    check_query(sample, x);
    const std::size_t n = sample.size();
    const std::size_t k = sample.dim() + 1;
    if (n < k) throw std::invalid_argument("insufficient points");
    if (subset_count == 0) throw std::invalid_argument("subset_count must be >= 1");

    std::vector<std::size_t> idx(k);
    std::uint64_t contained = 0, valid = 0;
    for (std::size_t s = 0; s < subset_count; ++s) {
        Rng rng = substream(seed, s);
        for (std::size_t i = 0; i < k; ++i) {
            bool fresh;
            do {
                idx[i] = rng.index(n);
                fresh = true;
                for (std::size_t j = 0; j < i; ++j)
                    if (idx[j] == idx[i]) { fresh = false; break; }
            } while (!fresh);
        }
        if (auto c = simplex_contains(sample, idx, x)) {
            ++valid;
            if (*c) ++contained;
        }
    }
    if (valid == 0) throw std::runtime_error("simplicial depth: all simplices degenerate");
    return static_cast<double>(contained) / static_cast<double>(valid);
}

double simplicial_depth(const Sample& sample, std::span<const double> x,
                        const DepthParams& params) {
    check_query(sample, x);
    const std::size_t n = sample.size();
    const std::size_t d = sample.dim();
    if (n < d + 1) throw std::invalid_argument("insufficient points");
    if (n <= params.exact_threshold) return simplicial_enumerate(sample, x);
    if (d == 1) return simplicial_count_1d(sample, x[0]);
    if (d == 2) return simplicial_count_2d(sample, x);
    return simplicial_depth_mc(sample, x, params.subset_count, params.seed);
}

double spatial_depth(const Sample& sample, std::span<const double> x) {
    check_query(sample, x);
    const std::size_t d = sample.dim();
    Vec mean_unit(d, 0.0);
    Vec diff(d);
    for (std::size_t i = 0; i < sample.size(); ++i) {
        auto row = sample.row(i);
        double norm_sq = 0;
        for (std::size_t j = 0; j < d; ++j) {
            diff[j] = x[j] - row[j];
            norm_sq += diff[j] * diff[j];
        }
        if (norm_sq == 0) continue;  // S(0) = 0
        double inv = 1.0 / std::sqrt(norm_sq);
        for (std::size_t j = 0; j < d; ++j) mean_unit[j] += diff[j] * inv;
    }
    for (double& v : mean_unit) v /= static_cast<double>(sample.size());
    return 1.0 - norm(mean_unit);
}

double projection_depth(const Sample& sample, std::span<const double> x,
                        const DepthParams& params) {
    check_query(sample, x);
    return projection_depth_from_table(build_projection_table(sample, params), x);
}

double smoothed_depth(DepthKind kind, const KdeModel& kde, std::span<const double> x,
                      std::size_t surrogate_size, std::uint64_t seed,
                      DepthParams params) {
    if (surrogate_size == 0)
        throw std::invalid_argument("smoothed depth requires surrogate size >= 1");
    Sample surrogate = kde_sample(kde, surrogate_size, seed);
    params.seed = Rng::mix(seed, 0x4d43);  // MC internals keyed off the same seed
    switch (kind) {
        case DepthKind::tukey: return tukey_depth(surrogate, x, params);
        case DepthKind::simplicial: return simplicial_depth(surrogate, x, params);
        case DepthKind::spatial: return spatial_depth(surrogate, x);
        case DepthKind::projection: return projection_depth(surrogate, x, params);
    }
    throw std::logic_error("unreachable");
}

// --- DepthEvaluator ----------------------------------------------------------

struct DepthEvaluator::Impl {
    enum class Mode { empirical, analytic } mode = Mode::empirical;
    DepthKind kind = DepthKind::tukey;
    Sample sample;
    DepthParams params;
    std::optional<ProjectionTable> projection;
    std::function<double(std::span<const double>)> fn;
    double upper = 1.0;
    std::size_t dims = 0;
};

DepthEvaluator::DepthEvaluator(std::shared_ptr<const Impl> impl)
    : impl_(std::move(impl)) {}

DepthEvaluator DepthEvaluator::empirical(DepthKind kind, Sample sample,
                                         DepthParams params) {
    if (sample.empty()) throw std::invalid_argument("empty sample");
    auto impl = std::make_shared<Impl>();
    impl->mode = Impl::Mode::empirical;
    impl->kind = kind;
    impl->sample = std::move(sample);
    impl->params = params;
    impl->dims = impl->sample.dim();
    if (kind == DepthKind::projection)
        impl->projection = build_projection_table(impl->sample, params);
    return DepthEvaluator(std::move(impl));
}

DepthEvaluator DepthEvaluator::smoothed(DepthKind kind, const KdeModel& kde,
                                        std::size_t surrogate_size, std::uint64_t seed,
                                        DepthParams params) {
    if (surrogate_size == 0)
        throw std::invalid_argument("smoothed depth requires surrogate size >= 1");
    params.seed = Rng::mix(seed, 0x4d43);
    return empirical(kind, kde_sample(kde, surrogate_size, seed), params);
}

DepthEvaluator DepthEvaluator::analytic(
    std::function<double(std::span<const double>)> fn, double upper_bound,
    std::size_t dim) {
    auto impl = std::make_shared<Impl>();
    impl->mode = Impl::Mode::analytic;
    impl->fn = std::move(fn);
    impl->upper = upper_bound;
    impl->dims = dim;
    return DepthEvaluator(std::move(impl));
}

double DepthEvaluator::operator()(std::span<const double> x) const {
    const Impl& im = *impl_;
    if (im.mode == Impl::Mode::analytic) return im.fn(x);
    switch (im.kind) {
        case DepthKind::tukey: return tukey_depth(im.sample, x, im.params);
        case DepthKind::simplicial: return simplicial_depth(im.sample, x, im.params);
        case DepthKind::spatial: return spatial_depth(im.sample, x);
        case DepthKind::projection: {
            check_query(im.sample, x);
            return projection_depth_from_table(*im.projection, x);
        }
    }
    throw std::logic_error("unreachable");
}

double DepthEvaluator::upper_bound() const { return impl_->upper; }

std::size_t DepthEvaluator::dim() const { return impl_->dims; }

const Sample* DepthEvaluator::source_sample() const {
    return impl_->mode == Impl::Mode::empirical ? &impl_->sample : nullptr;
}

ScalarGrid depth_field(const DepthEvaluator& evaluator, const GridSpec& grid) {
    grid.validate();
    ScalarGrid field{grid, std::vector<double>(grid.node_count())};
    parallel_for(field.values.size(), [&](std::size_t i) {
        field.values[i] = evaluator(grid.node(i));
    });
    return field;
}

}  // namespace depthtrim
