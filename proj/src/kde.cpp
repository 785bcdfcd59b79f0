#include "depthtrim/kde.hpp"

#include <cmath>
#include <numbers>

#include "depthtrim/rng.hpp"

namespace depthtrim {

Vec silverman_bandwidths(const Sample& sample) {
    const std::size_t n = sample.size();
    const std::size_t d = sample.dim();
    if (n < 2) throw std::invalid_argument("degenerate sample for bandwidth: n < 2");
    Vec sd = sample.column_stddev();
    double factor = std::pow(4.0 / ((static_cast<double>(d) + 2.0) * static_cast<double>(n)),
                             1.0 / (static_cast<double>(d) + 4.0));
    Vec h(d);
    for (std::size_t j = 0; j < d; ++j) {
        if (!(sd[j] > 0))
            throw std::invalid_argument(
                "degenerate sample for bandwidth: zero variance in coordinate " +
                std::to_string(j));
        h[j] = sd[j] * factor;
    }
    return h;
}

KdeModel fit_kde(const Sample& sample) {
    KdeModel model{sample, silverman_bandwidths(sample)};
    model.validate();
    return model;
}

double kde_eval(const KdeModel& model, std::span<const double> x) {
    const std::size_t n = model.data.size();
    const std::size_t d = model.data.dim();
    if (x.size() != d) throw std::invalid_argument("kde_eval: dimension mismatch");
    if (n == 0) return 0.0;

    const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
    double norm_const = 1.0;
    for (double h : model.bandwidths) norm_const *= inv_sqrt_2pi / h;

    double sum = 0;
    for (std::size_t i = 0; i < n; ++i) {
        auto row = model.data.row(i);
        double expo = 0;
        for (std::size_t j = 0; j < d; ++j) {
            double z = (x[j] - row[j]) / model.bandwidths[j];
            expo += z * z;
        }
        sum += std::exp(-0.5 * expo);
    }
    return sum / static_cast<double>(n) * norm_const;
}

namespace detail {

Sample kde_sample_signed(const KdeModel& model, std::size_t count,
                         std::uint64_t seed, double noise_sign) {
    model.validate();
    const std::size_t d = model.data.dim();
    const std::size_t n = model.data.size();
    if (count > 0 && n == 0)
        throw std::invalid_argument("kde_sample: empty model data");

    Sample out(count, d);
    Rng rng = substream(seed, 0x6b64652d73616d70ull);  // fixed stream tag
    for (std::size_t i = 0; i < count; ++i) {
        std::size_t pick = rng.index(n);
        auto row = model.data.row(pick);
        for (std::size_t j = 0; j < d; ++j)
            out(i, j) = row[j] + noise_sign * model.bandwidths[j] * rng.normal();
    }
    return out;
}

}  // namespace detail

Sample kde_sample(const KdeModel& model, std::size_t count, std::uint64_t seed) {
    return detail::kde_sample_signed(model, count, seed, 1.0);
}

Vec kde_mean(const KdeModel& model) { return model.data.column_mean(); }

double kde_marginal_cdf(const KdeModel& model, std::size_t j, double z) {
    const std::size_t n = model.data.size();
    double h = model.bandwidths.at(j);
    double sum = 0;
    for (std::size_t i = 0; i < n; ++i)
        sum += 0.5 * std::erfc(-(z - model.data(i, j)) / (h * std::numbers::sqrt2));
    return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

}  // namespace depthtrim
