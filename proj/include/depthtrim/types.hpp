#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace depthtrim {

using Vec = std::vector<double>;

/// n x d row-major matrix of observations (one row per point).
class Sample {
public:
    Sample() = default;
    Sample(std::size_t n, std::size_t d) : data_(n * d, 0.0), n_(n), d_(d) {}

    static Sample from_data(std::vector<double> data, std::size_t d) {
        if (d == 0) throw std::invalid_argument("Sample: dimension must be >= 1");
        if (data.size() % d != 0)
            throw std::invalid_argument("Sample: data length not a multiple of dimension");
        Sample s;
        s.n_ = data.size() / d;
        s.d_ = d;
        s.data_ = std::move(data);
        return s;
    }

    static Sample from_rows(std::initializer_list<std::initializer_list<double>> rows) {
        Sample s;
        for (const auto& r : rows) {
            if (s.n_ == 0) s.d_ = r.size();
            if (r.size() != s.d_)
                throw std::invalid_argument("Sample: ragged rows");
            s.data_.insert(s.data_.end(), r.begin(), r.end());
            ++s.n_;
        }
        return s;
    }

    std::size_t size() const { return n_; }
    std::size_t dim() const { return d_; }
    bool empty() const { return n_ == 0; }

    std::span<const double> row(std::size_t i) const {
        return {data_.data() + i * d_, d_};
    }
    std::span<double> row(std::size_t i) { return {data_.data() + i * d_, d_}; }

    double operator()(std::size_t i, std::size_t j) const { return data_[i * d_ + j]; }
    double& operator()(std::size_t i, std::size_t j) { return data_[i * d_ + j]; }

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    void append_row(std::span<const double> r) {
        if (n_ == 0 && d_ == 0) d_ = r.size();
        if (r.size() != d_) throw std::invalid_argument("Sample: row dimension mismatch");
        data_.insert(data_.end(), r.begin(), r.end());
        ++n_;
    }

    void validate() const {
        for (double v : data_)
            if (!std::isfinite(v))
                throw std::invalid_argument("Sample: non-finite entry");
    }

    Vec column_mean() const {
        Vec m(d_, 0.0);
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = 0; j < d_; ++j) m[j] += data_[i * d_ + j];
        if (n_ > 0)
            for (double& v : m) v /= static_cast<double>(n_);
        return m;
    }

    /// Per-coordinate sample standard deviation, n-1 denominator.
    Vec column_stddev() const {
        if (n_ < 2) throw std::invalid_argument("Sample: need n >= 2 for stddev");
        Vec m = column_mean();
        Vec s(d_, 0.0);
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = 0; j < d_; ++j) {
                double dv = data_[i * d_ + j] - m[j];
                s[j] += dv * dv;
            }
        for (double& v : s) v = std::sqrt(v / static_cast<double>(n_ - 1));
        return s;
    }

private:
    std::vector<double> data_;
    std::size_t n_ = 0, d_ = 0;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

}  // namespace depthtrim
