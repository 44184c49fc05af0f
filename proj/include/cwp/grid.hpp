#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "cwp/util.hpp"

namespace cwp {

struct Axis {
    std::string name;
    double origin = 0.0;
    double spacing = 1.0;
    int count = 0;
    bool periodic = false;
};

// Rectangular coordinate lattice for one chart. Node storage is row-major
// with the last axis fastest.
class ChartGrid {
public:
    explicit ChartGrid(std::vector<Axis> axes) : axes_(std::move(axes)) {
        if (axes_.empty()) throw DomainError("ChartGrid: no axes");
        strides_.assign(axes_.size(), 1);
        nodes_ = 1;
        for (const auto& ax : axes_) {
            if (ax.spacing <= 0.0) throw DomainError("ChartGrid: spacing must be positive");
            if (ax.count < 5) throw DomainError("ChartGrid: need at least 5 nodes per axis");
            nodes_ *= static_cast<std::size_t>(ax.count);
        }
        for (int a = static_cast<int>(axes_.size()) - 2; a >= 0; --a)
            strides_[a] = strides_[a + 1] * static_cast<std::size_t>(axes_[a + 1].count);
    }

    int dim() const { return static_cast<int>(axes_.size()); }
    const Axis& axis(int a) const { return axes_[a]; }
    std::size_t node_count() const { return nodes_; }
    std::size_t stride(int a) const { return strides_[a]; }

    double coordinate(int a, int i) const { return axes_[a].origin + i * axes_[a].spacing; }

    std::size_t flatten(std::span<const int> idx) const {
        std::size_t f = 0;
        for (int a = 0; a < dim(); ++a) f += strides_[a] * static_cast<std::size_t>(idx[a]);
        return f;
    }

    void unflatten(std::size_t flat, std::span<int> idx) const {
        for (int a = 0; a < dim(); ++a) {
            idx[a] = static_cast<int>(flat / strides_[a]);
            flat %= strides_[a];
        }
    }

    void coordinates(std::size_t flat, std::span<double> x) const {
        for (int a = 0; a < dim(); ++a) {
            std::size_t i = flat / strides_[a];
            flat %= strides_[a];
            x[a] = axes_[a].origin + static_cast<double>(i) * axes_[a].spacing;
        }
    }

    // Cartesian product: axes of `a` followed by axes of `b`.
    static std::shared_ptr<const ChartGrid> product(const ChartGrid& a, const ChartGrid& b) {
        std::vector<Axis> axes = a.axes_;
        axes.insert(axes.end(), b.axes_.begin(), b.axes_.end());
        return std::make_shared<const ChartGrid>(std::move(axes));
    }

    bool same_layout(const ChartGrid& o) const {
        if (dim() != o.dim()) return false;
        for (int a = 0; a < dim(); ++a) {
            if (axes_[a].count != o.axes_[a].count || axes_[a].origin != o.axes_[a].origin ||
                axes_[a].spacing != o.axes_[a].spacing || axes_[a].periodic != o.axes_[a].periodic)
                return false;
        }
        return true;
    }

    double min_spacing() const {
        double h = axes_[0].spacing;
        for (const auto& ax : axes_) h = std::min(h, ax.spacing);
        return h;
    }

private:
    std::vector<Axis> axes_;
    std::vector<std::size_t> strides_;
    std::size_t nodes_ = 0;
};

using GridPtr = std::shared_ptr<const ChartGrid>;

inline GridPtr make_grid(std::vector<Axis> axes) {
    return std::make_shared<const ChartGrid>(std::move(axes));
}

// Uniform 1D grid helper.
inline GridPtr make_grid_1d(const std::string& name, double origin, double spacing, int count,
                            bool periodic = false) {
    return make_grid({Axis{name, origin, spacing, count, periodic}});
}

} // namespace cwp
