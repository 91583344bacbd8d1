#include "tglab/quotient.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace tglab {

namespace {

double triangle(double x, double rho) { return std::max(0.0, 1.0 - std::abs(x) / rho); }

// sum of the triangle over the coset x + spacing*Z
double triangle_coset_sum(double x, double spacing, double rho) {
    double s = 0.0;
    const auto k_lo = std::llround(std::floor((-rho - x) / spacing));
    const auto k_hi = std::llround(std::ceil((rho - x) / spacing));
    for (auto k = k_lo; k <= k_hi; ++k)
        s += triangle(x + static_cast<double>(k) * spacing, rho);
    return s;
}

double max_generator_span(const ClosedSubgroup& H) {
    double m = 0.0;
    for (const auto& d : H.discrete_generators) m = std::max(m, norm_two(d));
    return m;
}

struct AxisView {
    AxisStructure structure;
    bool available = false;
};

AxisView view_of(const ClosedSubgroup& H) {
    AxisView v;
    if (auto s = axis_structure(H)) {
        v.structure = *s;
        v.available = true;
    }
    return v;
}

// signed sup-distance of coordinate x from the axis slab [lo, hi) modulo an
// optional spacing (negative inside)
double axis_signed_distance(double x, double lo, double hi, double spacing) {
    const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
    if (spacing <= 0.0) return std::abs(x - mid) - half;
    const double k = std::round((mid - x) / spacing);
    double best = 1e300;
    for (double kk : {k - 1.0, k, k + 1.0})
        best = std::min(best, std::abs(x + kk * spacing - mid) - half);
    return best;
}

}  // namespace

double BruhatSection::denominator(const GroupElement& r) const {
    const auto view = view_of(subgroup);
    const double rho = bump.support_radius;
    if (view.available) {
        const int a = subgroup.descriptor.real_rank;
        double den = 1.0;
        for (int axis = 0; axis < subgroup.descriptor.dim(); ++axis) {
            const double x =
                axis < a ? r.real[axis] : static_cast<double>(r.lattice[axis - a]);
            switch (view.structure.kind[axis]) {
                case AxisStructure::Kind::Line:
                    den *= rho;  // full-line integral of the unit triangle
                    break;
                case AxisStructure::Kind::Spaced:
                    den *= triangle_coset_sum(x, view.structure.spacing[axis], rho);
                    break;
                case AxisStructure::Kind::Free:
                    den *= triangle(x, rho);
                    break;
            }
            if (den == 0.0) return 0.0;
        }
        return subgroup.haar_scale * den;
    }
    // generic route: quadrature of the bump along the coset through r
    const Window w{group_inverse(r), rho + 1.0};
    return integrate_H(subgroup, w, 1e-3, [&](const GroupElement& t) {
        GroupElement p = group_op(r, t);
        double v = 1.0;
        for (Eigen::Index i = 0; i < p.real.size(); ++i) v *= triangle(p.real[i], rho);
        for (Eigen::Index i = 0; i < p.lattice.size(); ++i)
            v *= triangle(static_cast<double>(p.lattice[i]), rho);
        return v;
    });
}

double BruhatSection::operator()(const GroupElement& r) const {
    const double g = bump(r);
    if (g <= 0.0) return 0.0;
    const double den = denominator(r);
    return den > 0.0 ? g / den : 0.0;
}

BruhatSection build_bruhat_section(const ClosedSubgroup& H, const Window& coverage,
                                   double step, double bump_radius) {
    BruhatSection section;
    section.subgroup = H;
    section.coverage_window = coverage;
    const double rho = bump_radius > 0.0
                           ? bump_radius
                           : coverage.radius + norm_inf(coverage.center) +
                                 max_generator_span(H) + 1.0;
    section.bump = BumpFunction{BumpFunction::Kind::TriangularProduct, rho};

    // the denominator is H-invariant, so sampling the coverage window suffices
    double min_den = 1e300;
    const Window probe{coverage.center, coverage.radius};
    WindowGrid grid(probe, std::max(step, coverage.radius / 8.0));
    grid.for_each([&](const GroupElement& r, double) {
        min_den = std::min(min_den, section.denominator(r));
    });
    section.min_denominator = min_den;
    if (!(min_den > 0.1))
        throw std::runtime_error("bruhat section bump too narrow: min denominator " +
                                 std::to_string(min_den));

    // partition-of-unity certification by independent quadrature
    double defect = 0.0;
    WindowGrid cert_grid(probe, std::max(step * 4.0, coverage.radius / 4.0));
    cert_grid.for_each([&](const GroupElement& r, double) {
        const Window w{group_inverse(r), rho + 1.0};
        const double v = integrate_H(H, w, step, [&](const GroupElement& t) {
            return section(group_op(r, t));
        });
        defect = std::max(defect, std::abs(v - 1.0));
    });
    section.unity_defect = defect;
    return section;
}

namespace {

std::string describe(const BoxSet& E) {
    std::ostringstream os;
    os << E.boxes().size() << " boxes, bounding radius " << E.bounding_radius();
    return os.str();
}

SetMeasureEstimate split_measure(const ClosedSubgroup& H, const BoxSet& E) {
    SetMeasureEstimate est;
    est.method = QuotientMethod::CoordinateSplit;
    est.value = reduce_to_fundamental_domain(H, E).measure() / H.haar_scale;
    est.error_bound = 0.0;  // exact for box unions
    est.set_descriptor = describe(E);
    return est;
}

SetMeasureEstimate bruhat_measure(const ClosedSubgroup& H, const BoxSet& E,
                                  const BruhatSection& section, double step) {
    // coverage: E must sit inside the window the section was built for
    const double need = E.bounding_radius();
    const double have =
        section.coverage_window.radius + norm_inf(section.coverage_window.center);
    if (need > have + 1e-9)
        throw std::runtime_error("bruhat section coverage violation: set radius " +
                                 std::to_string(need) + " exceeds coverage " +
                                 std::to_string(have));

    const auto view = view_of(H);
    if (!view.available)
        throw UnsupportedSubgroup(
            "bruhat-section measure requires an axis-structured subgroup for the "
            "saturation test");
    const int a = H.descriptor.real_rank;
    const double ramp = 2.0 * step;

    // Smoothed indicator of E + H, boundary-centred ramp. Boxes are combined
    // with a capped sum so adjacent tiles (and wrapped fundamental domains)
    // keep full weight where their ramps meet.
    const auto chi = [&](const GroupElement& r) {
        double total = 0.0;
        for (const auto& box : E.boxes()) {
            double v = 1.0;
            for (int axis = 0; axis < H.descriptor.dim() && v > 0.0; ++axis) {
                if (view.structure.kind[axis] == AxisStructure::Kind::Line) continue;
                const double x =
                    axis < a ? r.real[axis] : static_cast<double>(r.lattice[axis - a]);
                const double hi = axis < a ? box.hi[axis] : box.hi[axis] - 1.0;
                double spacing = 0.0;
                if (view.structure.kind[axis] == AxisStructure::Kind::Spaced) {
                    spacing = view.structure.spacing[axis];
                    if (hi - box.lo[axis] >= spacing - 1e-12) continue;  // full wrap
                }
                const double sd = axis_signed_distance(x, box.lo[axis], hi, spacing);
                v *= std::clamp(0.5 - sd / ramp, 0.0, 1.0);
            }
            total += v;
            if (total >= 1.0) return 1.0;
        }
        return total;
    };

    const Window domain{zero_element(H.descriptor), section.bump.support_radius};
    const double value = integrate_G(
        domain, step, [&](const GroupElement& r) { return chi(r) * section(r); });

    SetMeasureEstimate est;
    est.method = QuotientMethod::BruhatSection;
    est.value = value;
    // ramp volume around the reduced boundary plus quadrature wiggle
    double perimeter = 0.0;
    for (const auto& box : E.boxes()) {
        for (int axis = 0; axis < H.descriptor.dim(); ++axis) {
            if (view.structure.kind[axis] == AxisStructure::Kind::Line) continue;
            double cross = 1.0;
            for (int other = 0; other < H.descriptor.dim(); ++other) {
                if (other == axis) continue;
                if (view.structure.kind[other] == AxisStructure::Kind::Line) continue;
                double len = box.hi[other] - box.lo[other];
                if (view.structure.kind[other] == AxisStructure::Kind::Spaced)
                    len = std::min(len, view.structure.spacing[other]);
                cross *= len;
            }
            perimeter += 2.0 * cross;
        }
    }
    est.error_bound = 0.5 * ramp * perimeter / H.haar_scale +
                      section.unity_defect * std::abs(est.value) + 4.0 * step * step;
    est.set_descriptor = describe(E);
    return est;
}

}  // namespace

BoxSet reduce_to_fundamental_domain(const ClosedSubgroup& H, const BoxSet& E) {
    const auto view = view_of(H);
    if (!view.available)
        throw UnsupportedSubgroup(
            "coordinate-split requires an axis-structured subgroup; "
            "use the bruhat-section method");

    BoxSet reduced(E.descriptor());
    for (const auto& box : E.boxes()) {
        if (box.empty()) continue;
        std::vector<GBox> work{box};
        for (int axis = 0; axis < H.descriptor.dim(); ++axis) {
            std::vector<GBox> next;
            for (const auto& piece : work) {
                switch (view.structure.kind[axis]) {
                    case AxisStructure::Kind::Line: {
                        GBox p = piece;
                        p.lo[axis] = 0.0;
                        p.hi[axis] = 1.0;
                        next.push_back(p);
                        break;
                    }
                    case AxisStructure::Kind::Spaced: {
                        for (auto& p :
                             reduce_axis_mod(piece, axis, view.structure.spacing[axis]))
                            next.push_back(p);
                        break;
                    }
                    case AxisStructure::Kind::Free:
                        next.push_back(piece);
                        break;
                }
            }
            work = std::move(next);
        }
        for (const auto& p : work) reduced.add(p);
    }
    reduced.coalesce();
    return reduced;
}

SetMeasureEstimate quotient_measure_of_set(const QuotientMeasure& nu, const BoxSet& E,
                                           const BruhatSection* section, double step) {
    if (E.empty()) {
        SetMeasureEstimate est;
        est.method = nu.method;
        est.set_descriptor = "empty";
        return est;
    }
    if (nu.method == QuotientMethod::CoordinateSplit)
        return split_measure(nu.subgroup, E);
    if (section == nullptr)
        throw std::invalid_argument("bruhat-section method needs a section");
    return bruhat_measure(nu.subgroup, E, *section, step);
}

double quotient_total_mass(const ClosedSubgroup& H) {
    const auto view = view_of(H);
    if (!view.available)
        throw UnsupportedSubgroup("total mass requires an axis-structured subgroup");
    double m = 1.0;
    for (int axis = 0; axis < H.descriptor.dim(); ++axis) {
        switch (view.structure.kind[axis]) {
            case AxisStructure::Kind::Line:
                break;
            case AxisStructure::Kind::Spaced:
                m *= view.structure.spacing[axis];
                break;
            case AxisStructure::Kind::Free:
                throw std::invalid_argument("quotient has infinite mass along a free axis");
        }
    }
    return m / H.haar_scale;
}

double weil_consistency(const ClosedSubgroup& H, const Window& support, double step,
                        const std::function<double(const GroupElement&)>& f) {
    const double lhs = integrate_G(support, step, f);

    const auto view = view_of(H);
    if (!view.available)
        throw UnsupportedSubgroup("weil consistency uses the fundamental-domain "
                                  "parametrization; subgroup is not axis-structured");
    const GroupDescriptor d = H.descriptor;
    const int a = d.real_rank;

    // fundamental-domain grid: Free axes span the support window, Spaced axes
    // one period, Line axes are pinned (handled inside the H-integral)
    struct AxisGrid {
        std::int64_t count = 1;
        double lo = 0.0, step = 0.0;  // real axes
        bool lattice = false;
        std::int64_t int_lo = 0;
        bool pinned = false;
    };
    std::vector<AxisGrid> axes(static_cast<std::size_t>(d.dim()));
    double cell = 1.0;
    for (int axis = 0; axis < d.dim(); ++axis) {
        AxisGrid& ag = axes[static_cast<std::size_t>(axis)];
        ag.lattice = axis >= a;
        const double center = axis < a
                                  ? support.center.real[axis]
                                  : static_cast<double>(support.center.lattice[axis - a]);
        const double window_lo = center - support.radius;
        const double window_hi = center + support.radius;
        switch (view.structure.kind[axis]) {
            case AxisStructure::Kind::Line:
                ag.count = 1;  // quotient collapses this axis
                ag.pinned = true;
                break;
            case AxisStructure::Kind::Spaced: {
                const double c = view.structure.spacing[axis];
                if (ag.lattice) {
                    ag.int_lo = 0;
                    ag.count = std::llround(c);
                } else {
                    ag.count = std::max<std::int64_t>(1, std::llround(c / step));
                    ag.lo = 0.0;
                    ag.step = c / static_cast<double>(ag.count);
                    cell *= ag.step;
                }
                break;
            }
            case AxisStructure::Kind::Free: {
                if (ag.lattice) {
                    ag.int_lo = static_cast<std::int64_t>(std::ceil(window_lo - 1e-12));
                    ag.count = std::max<std::int64_t>(
                        0, static_cast<std::int64_t>(std::floor(window_hi + 1e-12)) -
                               ag.int_lo + 1);
                } else {
                    ag.count = std::max<std::int64_t>(
                        1, std::llround((window_hi - window_lo) / step));
                    ag.lo = window_lo;
                    ag.step = (window_hi - window_lo) / static_cast<double>(ag.count);
                    cell *= ag.step;
                }
                break;
            }
        }
    }

    CompensatedSum rhs;
    std::vector<std::int64_t> idx(static_cast<std::size_t>(d.dim()), 0);
    GroupElement s = zero_element(d);
    const double inner_radius = support.radius + norm_inf(support.center) + 1.0;
    while (true) {
        for (int axis = 0; axis < d.dim(); ++axis) {
            const AxisGrid& ag = axes[static_cast<std::size_t>(axis)];
            if (ag.lattice) {
                s.lattice[axis - a] = ag.pinned ? 0 : ag.int_lo + idx[axis];
            } else {
                s.real[axis] = ag.pinned ? 0.0
                                         : ag.lo + (static_cast<double>(idx[axis]) + 0.5) *
                                                       ag.step;
            }
        }
        const Window inner{group_inverse(s), inner_radius};
        const double inner_val = integrate_H(
            H, inner, step, [&](const GroupElement& t) { return f(group_op(s, t)); });
        rhs.add(inner_val * cell);

        int axis = d.dim() - 1;
        for (; axis >= 0; --axis) {
            if (++idx[static_cast<std::size_t>(axis)] <
                axes[static_cast<std::size_t>(axis)].count)
                break;
            idx[static_cast<std::size_t>(axis)] = 0;
        }
        if (axis < 0) break;
    }

    return lhs - rhs.value() / H.haar_scale;
}

TailComparisonReport limsup_comparison(const SubgroupFamily& family, int index_first,
                                       int index_last, const ClosedSubgroup& limit,
                                       const FellCertificate& cert, const GBox& window_box,
                                       double tol_factor) {
    if (!cert.certified)
        throw std::invalid_argument(
            "limsup comparison requires a certified Fell convergence certificate");

    TailComparisonReport report;
    report.index_first = index_first;
    const BoxSet E{window_box};
    for (int n = index_first; n <= index_last; ++n) {
        const QuotientMeasure nu{limit.descriptor, family(n), QuotientMethod::CoordinateSplit};
        report.values.push_back(quotient_measure_of_set(nu, E).value);
    }
    const QuotientMeasure nu_lim{limit.descriptor, limit, QuotientMethod::CoordinateSplit};
    report.limit_value = quotient_measure_of_set(nu_lim, E).value;

    report.tail_start = index_first + (index_last - index_first) / 2;
    double tail_max = 0.0;
    for (int n = report.tail_start; n <= index_last; ++n)
        tail_max = std::max(tail_max,
                            report.values[static_cast<std::size_t>(n - index_first)]);
    report.tail_max = tail_max;
    report.bound = report.limit_value + tol_factor * std::abs(report.limit_value);
    report.satisfied = tail_max <= report.bound;
    return report;
}

}  // namespace tglab
