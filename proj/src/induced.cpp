#include "tglab/induced.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace tglab {

double PlateauShape::operator()(double x) const {
    const double a = std::abs(x);
    if (a <= plateau) return 1.0;
    if (ramp <= 0.0 || a >= plateau + ramp) return 0.0;
    return 1.0 - (a - plateau) / ramp;
}

double KernelSpec::F(const XPoint& p) const {
    double v = scale * normalization *
               orbit_shape(p[orbit_axis] - limit[orbit_axis]);
    if (v == 0.0) return 0.0;
    for (Eigen::Index axis = 0; axis < p.size(); ++axis) {
        if (axis == orbit_axis) continue;
        const double d = std::abs(p[axis] - limit[axis]);
        if (d >= 2.0 * transverse_plateau) return 0.0;
        if (d > transverse_plateau)
            v *= 2.0 - d / transverse_plateau;
    }
    return v;
}

double KernelSpec::b(const GroupElement& r, const XPoint& x) const {
    double v = b_height;
    for (Eigen::Index axis = 0; axis < r.real.size(); ++axis) {
        v *= b_shape(r.real[axis]);
        if (v == 0.0) return 0.0;
    }
    // the X cutoff: 1 on the support box, ramp to 0 at twice its half-widths
    for (Eigen::Index axis = 0; axis < x.size(); ++axis) {
        const double d = std::abs(x[axis] - support.center[axis]);
        const double h = support.half_widths[axis];
        if (d >= 2.0 * h) return 0.0;
        if (d > h) v *= 2.0 - d / h;
    }
    return v;
}

KernelSpec build_kernel_spec(const Scenario& sc, const XBox& V) {
    if (!sc.has_fact(facts::kOrbitLocallyClosed))
        throw std::invalid_argument(
            "kernel spec requires the declared fact: " +
            std::string(facts::kOrbitLocallyClosed));
    if (!sc.has_fact(facts::kStabilizerCompact))
        throw std::invalid_argument("S_z not compact");
    if (!sc.has_fact(facts::kPreimageRelativelyCompact))
        throw std::invalid_argument(
            "kernel spec requires the declared fact: " +
            std::string(facts::kPreimageRelativelyCompact));
    const ClosedSubgroup Sz = sc.limit_stabilizer();
    if (!Sz.is_trivial())
        throw std::invalid_argument("S_z not compact");  // compact in R^a x Z^b <=> {0}

    const double h = V.half_widths.minCoeff();
    if (h < 16.0 * sc.step)
        throw std::invalid_argument("neighborhood too small for the smoothing ramps");

    KernelSpec spec;
    spec.limit = sc.limit;
    spec.support = V;

    // limit orbit direction: the image of a small group step at z
    const GroupDescriptor gd = sc.action->group();
    GroupElement probe = zero_element(gd);
    probe.real[0] = 0.25 * h;
    const XPoint moved = sc.action->apply(probe, sc.limit);
    int axis = 0;
    double best = 0.0;
    for (Eigen::Index i = 0; i < moved.size(); ++i) {
        const double d = std::abs(moved[i] - sc.limit[i]);
        if (d > best) {
            best = d;
            axis = static_cast<int>(i);
        }
    }
    spec.orbit_axis = axis;

    // plateau carrying most of the mass, ramps inside V
    spec.orbit_shape = PlateauShape{0.6 * h, 0.2 * h};
    spec.transverse_plateau = 0.4 * h;

    // normalize the induced vector norm over the limit-orbit preimage
    const Window w = centered_window(gd, sc.search_radius(-1));
    const auto bracket = orbit_preimage(*sc.action, sc.limit, V, w, sc.step);
    spec.normalization = 1.0;
    const auto norm_sq = [&] {
        CompensatedSum acc;
        for (const auto& box : bracket.outer.boxes()) {
            const auto m = std::max<std::int64_t>(
                1, std::llround((box.hi[0] - box.lo[0]) / sc.step));
            const double cell = (box.hi[0] - box.lo[0]) / static_cast<double>(m);
            for (std::int64_t i = 0; i < m; ++i) {
                GroupElement s = zero_element(gd);
                s.real[0] = box.lo[0] + (static_cast<double>(i) + 0.5) * cell;
                const double v = spec.F(sc.action->apply(s, sc.limit));
                acc.add(v * v * cell);
            }
        }
        return acc.value();
    };
    const double raw = norm_sq();
    if (!(raw > 0.0)) throw std::invalid_argument("neighborhood too small: F vanishes");
    spec.normalization = 1.0 / std::sqrt(raw);
    spec.norm_defect = std::abs(norm_sq() - 1.0);

    // b: plateau 1/alpha_z(S_z) on the difference set of supp F_z, rounded off
    spec.b_height = 1.0 / Sz.haar_scale;
    const double supp_radius = spec.orbit_shape.support_radius();
    spec.b_shape = PlateauShape{2.0 * supp_radius, 0.5 * supp_radius};
    spec.N_window = centered_window(gd, spec.b_shape.support_radius());
    return spec;
}

namespace {

// quadrature nodes of the quotient grid over the F-support preimage at x
struct QuotientGrid {
    std::vector<GroupElement> nodes;
    std::vector<double> weights;
    std::vector<double> F_values;
};

QuotientGrid quotient_grid(const Scenario& sc, const KernelSpec& spec, const XPoint& x,
                           int index) {
    const GroupDescriptor gd = sc.action->group();
    if (gd.real_rank != 1 || gd.lattice_rank != 0)
        throw std::invalid_argument("trace quadrature supports 1-d groups");
    const Window w = centered_window(gd, sc.search_radius(index));
    const auto bracket = orbit_preimage(*sc.action, x, spec.support, w, sc.step);

    QuotientGrid grid;
    for (const auto& box : bracket.outer.boxes()) {
        const auto m = std::max<std::int64_t>(
            1, std::llround((box.hi[0] - box.lo[0]) / sc.step));
        const double cell = (box.hi[0] - box.lo[0]) / static_cast<double>(m);
        for (std::int64_t i = 0; i < m; ++i) {
            GroupElement s = zero_element(gd);
            s.real[0] = box.lo[0] + (static_cast<double>(i) + 0.5) * cell;
            grid.nodes.push_back(s);
            grid.weights.push_back(cell);
            grid.F_values.push_back(spec.F(sc.action->apply(s, x)));
        }
    }
    return grid;
}

// Upsilon(s, u): the stabilizer integral of the two kernel translates
double upsilon(const KernelSpec& spec, const ClosedSubgroup& S, const GroupElement& s,
               const GroupElement& u, const XPoint& sx, const XPoint& ux) {
    if (S.subspace_dim() > 0)
        throw std::invalid_argument("kernel sums need a discrete stabilizer");
    const GroupElement d = group_sub(u, s);
    const double reach = spec.N_window.radius + norm_two(d) + 1.0;
    double total = 0.0;
    const Window enumeration{zero_element(S.descriptor), reach};
    const auto net = enumerate_subgroup_points(S, enumeration, reach, 200000);
    for (const auto& t : net.points) {
        const GroupElement left = group_op(d, t);
        const GroupElement right = group_op(group_inverse(d), t);
        total += spec.b(left, sx) + spec.b(right, ux);
    }
    return S.haar_scale * total;
}

}  // namespace

TraceEstimate trace_estimate(const Scenario& sc, const KernelSpec& spec, int n) {
    const XPoint x = n < 0 ? sc.limit : sc.sequence(n);
    const ClosedSubgroup S = sc.stabilizer_at(x);
    const auto grid = quotient_grid(sc, spec, x, n);

    std::vector<XPoint> acted;
    acted.reserve(grid.nodes.size());
    for (const auto& s : grid.nodes) acted.push_back(sc.action->apply(s, x));

    TraceEstimate est;
    est.index = n;
    CompensatedSum acc;
    double max_upsilon = 0.0, sym_defect = 0.0;
    const std::size_t count = grid.nodes.size();
    for (std::size_t i = 0; i < count; ++i) {
        const double Fi = grid.F_values[i];
        if (Fi == 0.0) continue;
        for (std::size_t j = 0; j < count; ++j) {
            const double Fj = grid.F_values[j];
            if (Fj == 0.0) continue;
            const double ups =
                upsilon(spec, S, grid.nodes[i], grid.nodes[j], acted[i], acted[j]);
            max_upsilon = std::max(max_upsilon, ups);
            if (j > i) {
                const double back = upsilon(spec, S, grid.nodes[j], grid.nodes[i],
                                            acted[j], acted[i]);
                sym_defect = std::max(sym_defect, std::abs(ups - back));
            }
            const double kernel = 0.5 * Fi * Fj * ups;
            acc.add(kernel * kernel * grid.weights[i] * grid.weights[j]);
        }
    }
    est.value = acc.value();
    est.kernel_norm_sq = est.value;
    est.max_upsilon = max_upsilon;
    est.symmetry_defect = sym_defect;
    est.construction = spec;
    if (sym_defect > 1e-9)
        throw std::runtime_error("kernel symmetry defect above tolerance: " +
                                 std::to_string(sym_defect));
    // quadrature wiggle: ramp cells at strand ends plus normalization defect
    est.error_bound =
        4.0 * sc.step * max_upsilon * max_upsilon + 2.0 * spec.norm_defect;
    return est;
}

Complex psi_functional(const Scenario& sc, const XPoint& x, const GroupElement& translator,
                       const ElementaryTensor& f, double window_radius, double step) {
    if (!sc.has_fact(facts::kBoundaryMeasureZero))
        throw std::invalid_argument(
            "matrix-coefficient evaluation requires the declared fact: " +
            std::string(facts::kBoundaryMeasureZero));
    const GroupDescriptor gd = sc.action->group();
    if (gd.real_rank != 1 || gd.lattice_rank != 0)
        throw std::invalid_argument("matrix coefficients support 1-d groups");
    if (f.scale == 0.0) return {0.0, 0.0};

    const ClosedSubgroup S = sc.stabilizer_at(x);
    const auto view = axis_structure(S);
    if (!view) throw UnsupportedSubgroup("stabilizer is not axis-structured");

    // membership of a coordinate in W + S along the single axis
    const auto in_WS = [&](double r) {
        if (view->kind[0] == AxisStructure::Kind::Line) return true;
        if (view->kind[0] == AxisStructure::Kind::Free)
            return std::abs(r) <= window_radius;
        const double c = view->spacing[0];
        double fold = std::fmod(r, c);
        if (fold < 0.0) fold += c;
        fold = std::min(fold, c - fold);
        return fold <= window_radius;
    };

    // normalization: 1 / nu(q(W + S)) by the exact split route
    const QuotientMeasure nu{gd, S, QuotientMethod::CoordinateSplit};
    const BoxSet W_box{GBox::interval(-window_radius, window_radius)};
    const double mass = quotient_measure_of_set(nu, W_box).value;
    if (!(mass > 0.0)) throw std::runtime_error("window carries no quotient mass");
    const double C = 1.0 / mass;

    // cross-section for the quotient integral
    const auto section =
        build_bruhat_section(S, centered_window(gd, window_radius + 1.0), step);

    // inner integral of h over r + W + S
    const auto h_integral = [&](double r) {
        CompensatedSum acc;
        const auto m = std::max<std::int64_t>(
            1, std::llround(2.0 * f.h_radius / step));
        const double cell = 2.0 * f.h_radius / static_cast<double>(m);
        for (std::int64_t i = 0; i < m; ++i) {
            const double u = -f.h_radius + (static_cast<double>(i) + 0.5) * cell;
            if (!in_WS(u - r)) continue;
            GroupElement gu = zero_element(gd);
            gu.real[0] = u;
            acc.add(f.h(gu) * cell);
        }
        return acc.value();
    };

    // outer integral over the support of the section
    const double outer_radius = section.bump.support_radius;
    CompensatedSum outer;
    const auto m = std::max<std::int64_t>(1, std::llround(2.0 * outer_radius / step));
    const double cell = 2.0 * outer_radius / static_cast<double>(m);
    for (std::int64_t i = 0; i < m; ++i) {
        const double r = -outer_radius + (static_cast<double>(i) + 0.5) * cell;
        if (!in_WS(r)) continue;
        GroupElement gr = zero_element(gd);
        gr.real[0] = r;
        const double sec = section(gr);
        if (sec <= 0.0) continue;
        const XPoint moved = sc.action->apply(group_op(gr, translator), x);
        const double Fr = f.g(moved) * h_integral(r);
        outer.add(Fr * sec * cell);
    }
    return {f.scale * C * outer.value(), 0.0};
}

bool translator_vectors_orthogonal(const Scenario& sc, const TranslatorCertificate& cert,
                                   int n, double window_radius) {
    const XPoint x = sc.sequence(n);
    const ClosedSubgroup S = sc.stabilizer_at(x);
    const GBox doubled =
        GBox::around(zero_element(S.descriptor), 2.0 * window_radius);
    for (int i = 0; i < cert.k; ++i)
        for (int j = i + 1; j < cert.k; ++j) {
            const GroupElement delta =
                group_sub(cert.translator(j, n), cert.translator(i, n));
            if (coset_box_distance(S, delta, doubled) <= 1e-12) return false;
        }
    return true;
}

// ---- dual action -------------------------------------------------------------

Complex SampledKernel::at(double r) const {
    const auto i = std::llround(r / step) + offset;
    if (i < 0 || i >= static_cast<std::int64_t>(values.size())) return {0.0, 0.0};
    return values[static_cast<std::size_t>(i)];
}

GroupElement SampledKernel::grid_point(int i) const {
    GroupElement g = zero_element(GroupDescriptor{1, 0});
    g.real[0] = static_cast<double>(i - offset) * step;
    return g;
}

SampledKernel sample_line_kernel(const std::function<double(double)>& h, double radius,
                                 double step) {
    SampledKernel k;
    k.step = step;
    k.offset = static_cast<int>(std::llround(radius / step));
    const int count = 2 * k.offset + 1;
    k.values.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i)
        k.values.emplace_back(h(static_cast<double>(i - k.offset) * step), 0.0);
    return k;
}

SampledKernel dual_twist(const SampledKernel& data, const Character& tau) {
    SampledKernel out = data;
    for (std::size_t i = 0; i < out.values.size(); ++i)
        out.values[i] =
            data.values[i] * character_eval(tau, data.grid_point(static_cast<int>(i)));
    return out;
}

Eigen::MatrixXcd induced_rep_matrix(const Action& a, const XPoint& x,
                                    const SampledKernel& h_samples,
                                    const std::function<double(const XPoint&)>& g,
                                    const Character* tau, double L, double step) {
    const auto m = std::max<std::int64_t>(1, std::llround(2.0 * L / step));
    const double cell = 2.0 * L / static_cast<double>(m);
    Eigen::MatrixXcd M(m, m);
    const GroupDescriptor gd = a.group();
    for (std::int64_t i = 0; i < m; ++i) {
        GroupElement si = zero_element(gd);
        si.real[0] = -L + (static_cast<double>(i) + 0.5) * cell;
        const double gi = g(a.apply(si, x));
        for (std::int64_t j = 0; j < m; ++j) {
            const double delta = static_cast<double>(i - j) * cell;
            Complex v = h_samples.at(delta) * gi * cell;
            if (tau != nullptr) {
                GroupElement d = zero_element(gd);
                d.real[0] = delta;
                v *= character_eval(*tau, d);
            }
            M(i, j) = v;
        }
    }
    return M;
}

// ---- multiplicity sandwich ----------------------------------------------------

namespace {

double tail_min(const std::vector<double>& values) {
    if (values.empty()) return 0.0;
    const std::size_t start = values.size() / 2;
    double m = values[start];
    for (std::size_t i = start; i < values.size(); ++i) m = std::min(m, values[i]);
    return m;
}

double snap_to_integer(double v, double tol) {
    const double r = std::round(v);
    return std::abs(v - r) <= tol * std::max(1.0, std::abs(v)) ? r : v;
}

}  // namespace

MultiplicityBoundReport multiplicity_report(const Scenario& sc, int k, double measured_M,
                                            const std::vector<double>& ratio_series,
                                            int ratio_first_index,
                                            const std::vector<double>& trace_series,
                                            double trace_at_limit, bool trace_available,
                                            double ratio_tol) {
    (void)sc;
    MultiplicityBoundReport report;
    report.k_hypothesis = k;
    report.measured_M = measured_M;
    report.snapped_M = snap_to_integer(measured_M, ratio_tol);
    report.floor_M = static_cast<int>(std::floor(report.snapped_M + 1e-12));
    report.floor_M_squared =
        static_cast<int>(std::floor(report.snapped_M * report.snapped_M + 1e-12));
    report.trace_available = trace_available;
    report.trace_at_limit = trace_at_limit;

    for (std::size_t i = 0; i < ratio_series.size(); ++i)
        if (ratio_series[i] <= report.snapped_M * (1.0 + 1e-9) + 1e-12)
            report.frequency_set.push_back(ratio_first_index + static_cast<int>(i));

    if (trace_available && trace_at_limit > 0.0) {
        report.lower_evidence = tail_min(trace_series) / trace_at_limit;
        report.snapped_lower = snap_to_integer(report.lower_evidence, 3.0 * ratio_tol);
        if (report.snapped_lower > static_cast<double>(report.floor_M) + ratio_tol) {
            report.sandwich_fault = true;
            report.verdict = "fault";
            return report;
        }
        if (report.floor_M < k) {
            report.verdict = "refuted";
        } else if (report.snapped_lower >= static_cast<double>(k) * (1.0 - ratio_tol)) {
            report.verdict = "consistent";
        } else {
            report.verdict = "inconclusive";
        }
    } else {
        report.lower_evidence = 0.0;
        report.verdict = report.floor_M < k ? "refuted" : "not-applicable";
    }
    return report;
}

// ---- kernel-sum bound ----------------------------------------------------------

UpsilonReport upsilon_bound_report(const Scenario& sc, double eps, int fell_threshold,
                                   int sample_count) {
    UpsilonReport report;
    report.bound = 2.0 * (1.0 + eps);
    report.first_index = std::max(sc.index_first, fell_threshold);
    report.last_index = report.first_index + std::max(1, sample_count) - 1;

    const ClosedSubgroup Sz = sc.limit_stabilizer();
    if (Sz.is_trivial()) {
        // direct sampling of the kernel sums on the trace grid
        const KernelSpec spec = build_kernel_spec(sc, sc.neighborhoods.front());
        double max_value = 0.0;
        const int last = std::min(report.last_index, sc.index_last);
        for (int n = report.first_index; n <= last; ++n) {
            const auto est = trace_estimate(sc, spec, n);
            max_value = std::max(max_value, est.max_upsilon);
        }
        report.last_index = last;
        report.max_value = max_value;
        report.surrogate = false;
    } else {
        // Haar-continuity form: subgroup integrals of a plateau against the
        // limit integral; the kernel-sum bound is twice this ratio
        const GroupDescriptor gd = sc.action->group();
        const PlateauShape eta{2.0, 0.5};
        const double radius = eta.support_radius() + 0.5;
        const auto eta_fn = [&](const GroupElement& t) {
            double v = 1.0;
            for (Eigen::Index i = 0; i < t.real.size(); ++i) v *= eta(t.real[i]);
            for (Eigen::Index i = 0; i < t.lattice.size(); ++i)
                v *= eta(static_cast<double>(t.lattice[i]));
            return v;
        };
        const Window w = centered_window(gd, radius);
        const double limit_integral = integrate_H(Sz, w, sc.step, eta_fn);
        double max_ratio = 0.0;
        for (int n = report.first_index; n <= report.last_index; ++n) {
            const ClosedSubgroup S = sc.stabilizer_at(sc.sequence(n));
            const double v = integrate_H(S, w, sc.step, eta_fn);
            max_ratio = std::max(max_ratio, v / limit_integral);
        }
        report.max_value = 2.0 * max_ratio;
        report.surrogate = true;
    }
    report.satisfied = report.max_value <= report.bound;
    return report;
}

}  // namespace tglab
