#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "cwp/grid.hpp"
#include "cwp/util.hpp"

namespace cwp {

enum class Var : std::uint8_t { Upper, Lower };

// Per-axis widths of the invalid boundary layer. Derivatives widen the
// margin on their axis; comparisons and norms only visit nodes that are
// valid for every field involved.
using Margins = std::vector<int>;

namespace detail {

inline Margins max_margins(const Margins& a, const Margins& b) {
    Margins m(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) m[i] = std::max(a[i], b[i]);
    return m;
}

// Visit every node whose index is at least `margin` away from both ends on
// each non-periodic axis.
template <typename F>
void for_each_valid(const ChartGrid& g, const Margins& margin, F&& body) {
    std::vector<int> idx(g.dim(), 0);
    const std::size_t n = g.node_count();
    for (std::size_t f = 0; f < n; ++f) {
        g.unflatten(f, idx);
        bool ok = true;
        for (int a = 0; a < g.dim() && ok; ++a) {
            if (g.axis(a).periodic) continue;
            if (idx[a] < margin[a] || idx[a] >= g.axis(a).count - margin[a]) ok = false;
        }
        if (ok) body(f);
    }
}

} // namespace detail

class ScalarField {
public:
    ScalarField(GridPtr grid, double fill = 0.0)
        : grid_(std::move(grid)), v_(grid_->node_count(), fill), margin_(grid_->dim(), 0) {}

    static ScalarField sample(GridPtr grid,
                              const std::function<double(std::span<const double>)>& f) {
        ScalarField out(grid);
        std::vector<double> x(grid->dim());
        for (std::size_t n = 0; n < grid->node_count(); ++n) {
            grid->coordinates(n, x);
            out.v_[n] = f(x);
        }
        return out;
    }

    const ChartGrid& grid() const { return *grid_; }
    GridPtr grid_ptr() const { return grid_; }
    double operator[](std::size_t n) const { return v_[n]; }
    double& operator[](std::size_t n) { return v_[n]; }
    std::span<const double> values() const { return v_; }

    const Margins& margins() const { return margin_; }
    Margins& margins() { return margin_; }
    void widen_margin(int axis, int by) { margin_[axis] += by; }

    bool positive() const {
        for (double x : v_)
            if (!(x > 0.0)) return false;
        return true;
    }

    // Pointwise combinators preserve the wider margin.
    friend ScalarField operator+(const ScalarField& a, const ScalarField& b) { return zip(a, b, std::plus<>{}); }
    friend ScalarField operator-(const ScalarField& a, const ScalarField& b) { return zip(a, b, std::minus<>{}); }
    friend ScalarField operator*(const ScalarField& a, const ScalarField& b) { return zip(a, b, std::multiplies<>{}); }
    friend ScalarField operator/(const ScalarField& a, const ScalarField& b) { return zip(a, b, std::divides<>{}); }
    friend ScalarField operator*(double s, const ScalarField& a) {
        ScalarField out = a;
        for (double& x : out.v_) x *= s;
        return out;
    }

    ScalarField pow(double t) const {
        ScalarField out = *this;
        for (double& x : out.v_) x = std::pow(x, t);
        return out;
    }

    ScalarField apply(const std::function<double(double)>& f) const {
        ScalarField out = *this;
        for (double& x : out.v_) x = f(x);
        return out;
    }

    double max_abs_interior() const {
        double m = 0.0;
        detail::for_each_valid(*grid_, margin_, [&](std::size_t n) { m = std::max(m, std::abs(v_[n])); });
        return m;
    }

private:
    template <typename Op>
    static ScalarField zip(const ScalarField& a, const ScalarField& b, Op op) {
        ScalarField out(a.grid_);
        for (std::size_t n = 0; n < out.v_.size(); ++n) out.v_[n] = op(a.v_[n], b.v_[n]);
        out.margin_ = detail::max_margins(a.margin_, b.margin_);
        return out;
    }

    GridPtr grid_;
    std::vector<double> v_;
    Margins margin_;
};

// Dense rank-r tensor field: comps = dim^rank values per node, node-major.
class TensorField {
public:
    TensorField(GridPtr grid, std::vector<Var> variance)
        : grid_(std::move(grid)), variance_(std::move(variance)), margin_(grid_->dim(), 0) {
        comps_ = 1;
        for (std::size_t r = 0; r < variance_.size(); ++r) comps_ *= static_cast<std::size_t>(grid_->dim());
        v_.assign(grid_->node_count() * comps_, 0.0);
    }

    const ChartGrid& grid() const { return *grid_; }
    GridPtr grid_ptr() const { return grid_; }
    int rank() const { return static_cast<int>(variance_.size()); }
    const std::vector<Var>& variance() const { return variance_; }
    std::size_t comps() const { return comps_; }

    double at(std::size_t node, std::size_t comp) const { return v_[node * comps_ + comp]; }
    double& at(std::size_t node, std::size_t comp) { return v_[node * comps_ + comp]; }

    // Multi-index helpers; index arithmetic matches row-major comp packing.
    std::size_t comp_index(std::span<const int> tidx) const {
        std::size_t c = 0;
        for (int r = 0; r < rank(); ++r) c = c * grid_->dim() + static_cast<std::size_t>(tidx[r]);
        return c;
    }
    double operator()(std::size_t node, std::initializer_list<int> tidx) const {
        return at(node, comp_index(std::span<const int>(tidx.begin(), tidx.size())));
    }
    double& operator()(std::size_t node, std::initializer_list<int> tidx) {
        return at(node, comp_index(std::span<const int>(tidx.begin(), tidx.size())));
    }

    const Margins& margins() const { return margin_; }
    Margins& margins() { return margin_; }
    void set_margins(Margins m) { margin_ = std::move(m); }
    void widen_margin(int axis, int by) { margin_[axis] += by; }

    friend TensorField operator-(const TensorField& a, const TensorField& b) {
        TensorField out = a;
        for (std::size_t i = 0; i < out.v_.size(); ++i) out.v_[i] -= b.v_[i];
        out.margin_ = detail::max_margins(a.margin_, b.margin_);
        return out;
    }
    friend TensorField operator+(const TensorField& a, const TensorField& b) {
        TensorField out = a;
        for (std::size_t i = 0; i < out.v_.size(); ++i) out.v_[i] += b.v_[i];
        out.margin_ = detail::max_margins(a.margin_, b.margin_);
        return out;
    }

    double max_abs_interior() const {
        double m = 0.0;
        detail::for_each_valid(*grid_, margin_, [&](std::size_t n) {
            for (std::size_t c = 0; c < comps_; ++c) m = std::max(m, std::abs(v_[n * comps_ + c]));
        });
        return m;
    }

private:
    GridPtr grid_;
    std::vector<Var> variance_;
    std::vector<double> v_;
    std::size_t comps_ = 1;
    Margins margin_;
};

// Symmetric nondegenerate rank-2 metric with fixed signature.
class MetricField {
public:
    MetricField(GridPtr grid, std::vector<int> signature)
        : g_(grid, {Var::Lower, Var::Lower}), signature_(std::move(signature)) {
        if (static_cast<int>(signature_.size()) != grid->dim())
            throw DomainError("MetricField: signature size != dim");
        for (int s : signature_)
            if (s != 1 && s != -1) throw DomainError("MetricField: signature entries must be +-1");
    }

    static MetricField sample(
        GridPtr grid, std::vector<int> signature,
        const std::function<double(int, int, std::span<const double>)>& comp) {
        MetricField m(grid, std::move(signature));
        const int n = grid->dim();
        std::vector<double> x(n);
        for (std::size_t node = 0; node < grid->node_count(); ++node) {
            grid->coordinates(node, x);
            for (int i = 0; i < n; ++i)
                for (int j = i; j < n; ++j) {
                    double v = comp(i, j, x);
                    m.set(node, i, j, v);
                }
        }
        return m;
    }

    const ChartGrid& grid() const { return g_.grid(); }
    GridPtr grid_ptr() const { return g_.grid_ptr(); }
    int dim() const { return grid().dim(); }
    const std::vector<int>& signature() const { return signature_; }
    const Margins& margins() const { return g_.margins(); }

    double operator()(std::size_t node, int i, int j) const {
        return g_.at(node, static_cast<std::size_t>(i) * dim() + j);
    }
    void set(std::size_t node, int i, int j, double v) {
        g_.at(node, static_cast<std::size_t>(i) * dim() + j) = v;
        g_.at(node, static_cast<std::size_t>(j) * dim() + i) = v;
    }

    const TensorField& tensor() const { return g_; }
    TensorField& tensor() { return g_; }

    // Inverse metric components at one node; cofactor expansion for n <= 4,
    // pivoted elimination above. Throws SingularMetricError on a degenerate
    // node, with a scale-aware cutoff |det| < 1e-12 * max|g_ij|^n.
    void invert_at(std::size_t node, std::span<double> inv, double* det_out = nullptr) const;

    double determinant_at(std::size_t node) const;

private:
    TensorField g_;
    std::vector<int> signature_;
};

// max |a - b| over nodes valid for both fields.
double max_abs_diff_interior(const TensorField& a, const TensorField& b);
double max_abs_diff_interior(const ScalarField& a, const ScalarField& b);

} // namespace cwp
