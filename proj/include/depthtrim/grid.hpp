#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "depthtrim/types.hpp"

namespace depthtrim {

/// Axis-aligned box.
struct Box {
    Vec lo, hi;

    std::size_t dim() const { return lo.size(); }

    void validate() const {
        if (lo.size() != hi.size() || lo.empty())
            throw std::invalid_argument("Box: inconsistent bounds");
        for (std::size_t j = 0; j < lo.size(); ++j)
            if (!(lo[j] < hi[j])) throw std::invalid_argument("Box: lo must be < hi");
    }

    double volume() const {
        double v = 1;
        for (std::size_t j = 0; j < lo.size(); ++j) v *= hi[j] - lo[j];
        return v;
    }
};

/// Rectangular lattice of nodes spanning a box (inclusive endpoints).
/// A single-node axis places its node at the box centre.
struct GridSpec {
    Box box;
    std::vector<std::size_t> shape;  // nodes per axis

    std::size_t dim() const { return shape.size(); }

    std::size_t node_count() const {
        std::size_t c = 1;
        for (auto s : shape) c *= s;
        return c;
    }

    double step(std::size_t axis) const {
        if (shape[axis] <= 1) return 0.0;
        return (box.hi[axis] - box.lo[axis]) / static_cast<double>(shape[axis] - 1);
    }

    double coord(std::size_t axis, std::size_t k) const {
        if (shape[axis] <= 1) return 0.5 * (box.lo[axis] + box.hi[axis]);
        return box.lo[axis] + static_cast<double>(k) * step(axis);
    }

    /// Row-major node coordinates (last axis fastest).
    Vec node(std::size_t flat) const {
        Vec x(dim());
        for (std::size_t axis = dim(); axis-- > 0;) {
            std::size_t k = flat % shape[axis];
            flat /= shape[axis];
            x[axis] = coord(axis, k);
        }
        return x;
    }

    void validate() const {
        box.validate();
        if (shape.size() != box.dim())
            throw std::invalid_argument("GridSpec: shape/box dimension mismatch");
        for (auto s : shape)
            if (s == 0) throw std::invalid_argument("GridSpec: zero-size axis");
    }
};

/// Values on a GridSpec lattice, row-major node order.
struct ScalarGrid {
    GridSpec grid;
    std::vector<double> values;

    double at(std::size_t i, std::size_t j) const {  // d == 2 accessor
        return values[i * grid.shape[1] + j];
    }
};

}  // namespace depthtrim
