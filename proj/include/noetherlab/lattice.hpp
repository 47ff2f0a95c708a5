#pragma once

#include "noetherlab/parallel.hpp"

#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace nlab {

using complex = std::complex<double>;

enum class Boundary { periodic, open };

inline const char* to_string(Boundary b) { return b == Boundary::periodic ? "periodic" : "open"; }

class LatticeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct AxisSpec {
    std::size_t points = 0;
    double spacing = 0.0;
    Boundary boundary = Boundary::periodic;
    int signature = -1;  // diagonal metric entry g^{mu mu}

    friend bool operator==(const AxisSpec&, const AxisSpec&) = default;
};

/// Uniform box lattice. Axis 0 is time and is always open; the site index is
/// row-major with axis 0 slowest.
class Lattice {
public:
    static constexpr std::size_t min_points = 8;

    explicit Lattice(std::vector<AxisSpec> axes) : axes_(std::move(axes))
    {
        if (axes_.empty()) throw LatticeError("lattice needs at least one axis");
        if (axes_[0].boundary != Boundary::open) throw LatticeError("time axis (0) must be open");
        strides_.assign(axes_.size(), 1);
        size_ = 1;
        for (std::size_t mu = axes_.size(); mu-- > 0;) {
            const auto& a = axes_[mu];
            if (a.points < min_points)
                throw LatticeError("axis " + std::to_string(mu) + " needs at least " +
                                   std::to_string(min_points) + " points");
            if (!(a.spacing > 0.0) || !std::isfinite(a.spacing))
                throw LatticeError("axis " + std::to_string(mu) + " spacing must be positive");
            if (a.signature != 1 && a.signature != -1)
                throw LatticeError("axis " + std::to_string(mu) + " signature must be +1 or -1");
            strides_[mu] = size_;
            size_ *= a.points;
        }
    }

    /// Spacing derived from the physical length of each axis: extent/(n-1) on
    /// open axes (both ends are sites), extent/n on periodic axes.
    static Lattice from_extent(const std::vector<std::size_t>& points, const std::vector<double>& extent,
                               const std::vector<Boundary>& boundary, const std::vector<int>& signature)
    {
        if (points.size() != extent.size() || points.size() != boundary.size() ||
            points.size() != signature.size())
            throw LatticeError("lattice axis lists have different lengths");
        std::vector<AxisSpec> axes;
        for (std::size_t mu = 0; mu < points.size(); ++mu) {
            if (points[mu] < 2) throw LatticeError("axis " + std::to_string(mu) + " needs at least 2 points");
            const double cells = boundary[mu] == Boundary::open ? double(points[mu] - 1) : double(points[mu]);
            axes.push_back({points[mu], extent[mu] / cells, boundary[mu], signature[mu]});
        }
        return Lattice(std::move(axes));
    }

    std::size_t dims() const noexcept { return axes_.size(); }
    std::size_t size() const noexcept { return size_; }
    const AxisSpec& axis(std::size_t mu) const { return axes_.at(mu); }
    const std::vector<AxisSpec>& axes() const noexcept { return axes_; }
    std::size_t points(std::size_t mu) const { return axes_.at(mu).points; }
    double spacing(std::size_t mu) const { return axes_.at(mu).spacing; }
    Boundary boundary(std::size_t mu) const { return axes_.at(mu).boundary; }
    int metric(std::size_t mu) const { return axes_.at(mu).signature; }
    std::size_t stride(std::size_t mu) const { return strides_.at(mu); }

    /// Number of sites in one time layer.
    std::size_t layer_size() const noexcept { return size_ / axes_[0].points; }

    double cell_volume() const
    {
        double v = 1.0;
        for (const auto& a : axes_) v *= a.spacing;
        return v;
    }

    /// Physical length covered by the quadrature rule along mu.
    double extent(std::size_t mu) const
    {
        const auto& a = axes_.at(mu);
        return a.spacing * (a.boundary == Boundary::open ? double(a.points - 1) : double(a.points));
    }

    /// Domain volume: the integral of 1 under the lattice quadrature.
    double volume() const
    {
        double cells = 1.0;
        for (const auto& a : axes_)
            cells *= a.boundary == Boundary::open ? double(a.points - 1) : double(a.points);
        return cell_volume() * cells;
    }

    std::size_t index_along(std::size_t site, std::size_t mu) const
    {
        return (site / strides_[mu]) % axes_[mu].points;
    }

    double coordinate(std::size_t site, std::size_t mu) const
    {
        return double(index_along(site, mu)) * axes_[mu].spacing;
    }

    friend bool operator==(const Lattice& a, const Lattice& b) { return a.axes_ == b.axes_; }

private:
    std::vector<AxisSpec> axes_;
    std::vector<std::size_t> strides_;
    std::size_t size_ = 0;
};

using LatticePtr = std::shared_ptr<const Lattice>;

inline LatticePtr make_lattice(Lattice l) { return std::make_shared<const Lattice>(std::move(l)); }

/// Axis-aligned index box [lo, hi) per axis.
struct SubRegion {
    std::vector<std::size_t> lo;
    std::vector<std::size_t> hi;

    static SubRegion whole(const Lattice& l)
    {
        SubRegion r;
        for (std::size_t mu = 0; mu < l.dims(); ++mu) {
            r.lo.push_back(0);
            r.hi.push_back(l.points(mu));
        }
        return r;
    }

    /// Sites at least `margin` layers away from every open boundary.
    static SubRegion interior(const Lattice& l, std::size_t margin = 2)
    {
        SubRegion r = whole(l);
        for (std::size_t mu = 0; mu < l.dims(); ++mu) {
            if (l.boundary(mu) == Boundary::open) {
                r.lo[mu] = margin;
                r.hi[mu] = l.points(mu) - margin;
            }
        }
        r.validate(l);
        return r;
    }

    void validate(const Lattice& l) const
    {
        if (lo.size() != l.dims() || hi.size() != l.dims())
            throw LatticeError("subregion rank does not match lattice");
        for (std::size_t mu = 0; mu < l.dims(); ++mu) {
            if (lo[mu] >= hi[mu]) throw LatticeError("empty subregion along axis " + std::to_string(mu));
            if (hi[mu] > l.points(mu)) throw LatticeError("subregion exceeds lattice along axis " + std::to_string(mu));
        }
    }

    std::size_t count() const
    {
        std::size_t n = 1;
        for (std::size_t mu = 0; mu < lo.size(); ++mu) n *= hi[mu] - lo[mu];
        return n;
    }

    /// Calls fn(site) for every site in the region, in row-major order.
    template <class Fn>
    void for_each_site(const Lattice& l, Fn&& fn) const
    {
        const std::size_t d = l.dims();
        std::vector<std::size_t> idx(lo);
        for (;;) {
            std::size_t site = 0;
            for (std::size_t mu = 0; mu < d; ++mu) site += idx[mu] * l.stride(mu);
            fn(site);
            std::size_t mu = d;
            while (mu-- > 0) {
                if (++idx[mu] < hi[mu]) break;
                idx[mu] = lo[mu];
                if (mu == 0) return;
            }
        }
    }
};

/// Complex value per lattice site.
class LatticeField {
public:
    LatticeField() = default;
    explicit LatticeField(LatticePtr lattice, complex fill = {})
        : lattice_(std::move(lattice)), values_(lattice_->size(), fill)
    {
    }
    LatticeField(LatticePtr lattice, std::vector<complex> values)
        : lattice_(std::move(lattice)), values_(std::move(values))
    {
        if (values_.size() != lattice_->size()) throw LatticeError("field size does not match lattice");
    }

    template <class Fn>
    static LatticeField generate(LatticePtr lattice, Fn&& fn)
    {
        LatticeField f(lattice);
        parallel_for(f.size(), [&](std::size_t s) { f.values_[s] = fn(s); });
        return f;
    }

    const Lattice& lattice() const { return *lattice_; }
    const LatticePtr& lattice_ptr() const noexcept { return lattice_; }
    std::size_t size() const noexcept { return values_.size(); }
    complex operator[](std::size_t s) const { return values_[s]; }
    complex& operator[](std::size_t s) { return values_[s]; }
    std::span<const complex> values() const noexcept { return values_; }
    std::span<complex> values() noexcept { return values_; }

    bool same_lattice(const LatticeField& o) const
    {
        return lattice_ == o.lattice_ || (lattice_ && o.lattice_ && *lattice_ == *o.lattice_);
    }

    template <class Fn>
    LatticeField map(Fn&& fn) const
    {
        LatticeField out(lattice_);
        parallel_for(size(), [&](std::size_t s) { out.values_[s] = fn(values_[s]); });
        return out;
    }

    template <class Fn>
    LatticeField zip(const LatticeField& o, Fn&& fn) const
    {
        require_same(o);
        LatticeField out(lattice_);
        parallel_for(size(), [&](std::size_t s) { out.values_[s] = fn(values_[s], o.values_[s]); });
        return out;
    }

    LatticeField conj() const { return map([](complex z) { return std::conj(z); }); }

    friend LatticeField operator+(const LatticeField& a, const LatticeField& b)
    {
        return a.zip(b, [](complex x, complex y) { return x + y; });
    }
    friend LatticeField operator-(const LatticeField& a, const LatticeField& b)
    {
        return a.zip(b, [](complex x, complex y) { return x - y; });
    }
    friend LatticeField operator*(const LatticeField& a, const LatticeField& b)
    {
        return a.zip(b, [](complex x, complex y) { return x * y; });
    }
    friend LatticeField operator*(complex c, const LatticeField& a)
    {
        return a.map([c](complex x) { return c * x; });
    }

    double max_abs() const
    {
        double m = 0.0;
        for (const auto& z : values_) m = std::max(m, std::abs(z));
        return m;
    }

    double max_abs(const SubRegion& r) const
    {
        double m = 0.0;
        r.for_each_site(*lattice_, [&](std::size_t s) { m = std::max(m, std::abs(values_[s])); });
        return m;
    }

    double max_abs_imag() const
    {
        double m = 0.0;
        for (const auto& z : values_) m = std::max(m, std::abs(z.imag()));
        return m;
    }

    /// Root mean square of |f| over the region's sites (unweighted).
    double rms(const SubRegion& r) const
    {
        std::vector<double> sq;
        sq.reserve(r.count());
        r.for_each_site(*lattice_, [&](std::size_t s) { sq.push_back(std::norm(values_[s])); });
        return std::sqrt(pairwise_sum<double>(sq) / double(sq.size()));
    }
    double rms() const { return rms(SubRegion::whole(*lattice_)); }

    bool all_finite() const
    {
        for (const auto& z : values_)
            if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
        return true;
    }

    void require_same(const LatticeField& o) const
    {
        if (!same_lattice(o)) throw LatticeError("fields live on different lattices");
    }

private:
    LatticePtr lattice_;
    std::vector<complex> values_;
};

inline LatticeField constant_field(LatticePtr l, complex c) { return LatticeField(std::move(l), c); }

namespace detail {

inline void check_axis(const Lattice& l, std::size_t nu)
{
    if (nu >= l.dims()) throw LatticeError("axis " + std::to_string(nu) + " out of range");
}

}  // namespace detail

/// First derivative along nu. Central differences in the interior; on open
/// axes the two end layers use second-order one-sided stencils.
inline LatticeField gradient(const LatticeField& f, std::size_t nu)
{
    const Lattice& l = f.lattice();
    detail::check_axis(l, nu);
    const std::size_t n = l.points(nu);
    if (n < 3) throw LatticeError("gradient needs at least 3 points along the axis");
    const std::size_t st = l.stride(nu);
    const double inv2h = 1.0 / (2.0 * l.spacing(nu));
    const bool periodic = l.boundary(nu) == Boundary::periodic;
    const auto v = f.values();
    return LatticeField::generate(f.lattice_ptr(), [&](std::size_t s) -> complex {
        const std::size_t i = l.index_along(s, nu);
        const std::size_t base = s - i * st;
        auto at = [&](std::size_t k) { return v[base + k * st]; };
        if (periodic) return (at((i + 1) % n) - at((i + n - 1) % n)) * inv2h;
        if (i == 0) return (4.0 * (at(1) - at(0)) - (at(2) - at(0))) * inv2h;
        if (i == n - 1) return (-4.0 * (at(n - 2) - at(n - 1)) + (at(n - 3) - at(n - 1))) * inv2h;
        return (at(i + 1) - at(i - 1)) * inv2h;
    });
}

/// Second derivative along nu: compact central stencil, one-sided
/// second-order four-point stencil at open ends.
inline LatticeField second_derivative(const LatticeField& f, std::size_t nu)
{
    const Lattice& l = f.lattice();
    detail::check_axis(l, nu);
    const std::size_t n = l.points(nu);
    if (n < 4) throw LatticeError("second derivative needs at least 4 points along the axis");
    const std::size_t st = l.stride(nu);
    const double invh2 = 1.0 / (l.spacing(nu) * l.spacing(nu));
    const bool periodic = l.boundary(nu) == Boundary::periodic;
    const auto v = f.values();
    return LatticeField::generate(f.lattice_ptr(), [&](std::size_t s) -> complex {
        const std::size_t i = l.index_along(s, nu);
        const std::size_t base = s - i * st;
        auto at = [&](std::size_t k) { return v[base + k * st]; };
        if (periodic) return ((at((i + 1) % n) - at(i)) - (at(i) - at((i + n - 1) % n))) * invh2;
        if (i == 0) return (2.0 * at(0) - 5.0 * at(1) + 4.0 * at(2) - at(3)) * invh2;
        if (i == n - 1) return (2.0 * at(n - 1) - 5.0 * at(n - 2) + 4.0 * at(n - 3) - at(n - 4)) * invh2;
        return ((at(i + 1) - at(i)) - (at(i) - at(i - 1))) * invh2;
    });
}

/// sum_mu g^{mu mu} d^2 f / dx_mu^2 (wave operator with unit propagation speed).
inline LatticeField dalembertian(const LatticeField& f)
{
    const Lattice& l = f.lattice();
    LatticeField out(f.lattice_ptr());
    for (std::size_t mu = 0; mu < l.dims(); ++mu) {
        LatticeField d2 = second_derivative(f, mu);
        const double g = l.metric(mu);
        parallel_for(out.size(), [&](std::size_t s) { out[s] += g * d2[s]; });
    }
    return out;
}

/// Quadrature over a region: plain sums on periodic axes, trapezoid weights
/// (1/2 at the two global ends) on open axes. Summation is pairwise in
/// row-major site order.
inline complex integrate(const LatticeField& f, const SubRegion& r)
{
    const Lattice& l = f.lattice();
    r.validate(l);
    std::vector<complex> terms;
    terms.reserve(r.count());
    const std::size_t d = l.dims();
    r.for_each_site(l, [&](std::size_t s) {
        double w = 1.0;
        for (std::size_t mu = 0; mu < d; ++mu) {
            if (l.boundary(mu) != Boundary::open) continue;
            const std::size_t i = l.index_along(s, mu);
            if (i == 0 || i + 1 == l.points(mu)) w *= 0.5;
        }
        terms.push_back(w * f[s]);
    });
    return pairwise_sum<complex>(terms) * l.cell_volume();
}

inline complex integrate(const LatticeField& f) { return integrate(f, SubRegion::whole(f.lattice())); }

/// Domain average: integral divided by the domain volume.
inline complex domain_mean(const LatticeField& f) { return integrate(f) / f.lattice().volume(); }

/// sum_nu d J^nu / dx^nu with the gradient stencils.
inline LatticeField divergence(std::span<const LatticeField> components)
{
    if (components.empty()) throw LatticeError("divergence needs one component per axis");
    const Lattice& l = components.front().lattice();
    if (components.size() != l.dims())
        throw LatticeError("divergence: " + std::to_string(components.size()) + " components for " +
                           std::to_string(l.dims()) + " axes");
    LatticeField out(components.front().lattice_ptr());
    for (std::size_t nu = 0; nu < l.dims(); ++nu) {
        components[nu].require_same(components.front());
        LatticeField g = gradient(components[nu], nu);
        parallel_for(out.size(), [&](std::size_t s) { out[s] += g[s]; });
    }
    return out;
}

inline LatticeField divergence(const std::vector<LatticeField>& components)
{
    return divergence(std::span<const LatticeField>(components));
}

}  // namespace nlab
