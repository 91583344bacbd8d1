#include "tglab/convergence.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace tglab {

namespace {

// per-axis escape deficit of the coset (delta + S) against a symmetric window
// of half-width r: positive means the axis factor misses the window
double axis_deficit(const AxisStructure& view, int axis, double delta, double r) {
    switch (view.kind[axis]) {
        case AxisStructure::Kind::Line:
            return 0.0;
        case AxisStructure::Kind::Free:
            return std::max(0.0, std::abs(delta) - r);
        case AxisStructure::Kind::Spaced: {
            const double c = view.spacing[axis];
            double fold = std::fmod(delta, c);
            if (fold < 0.0) fold += c;
            fold = std::min(fold, c - fold);
            return std::max(0.0, fold - r);
        }
    }
    return 0.0;
}

// max of the deficit over delta in [lo, hi] (piecewise-linear analysis)
double axis_deficit_max(const AxisStructure& view, int axis, double lo, double hi,
                        double r) {
    switch (view.kind[axis]) {
        case AxisStructure::Kind::Line:
            return 0.0;
        case AxisStructure::Kind::Free:
            return std::max(axis_deficit(view, axis, lo, r),
                            axis_deficit(view, axis, hi, r));
        case AxisStructure::Kind::Spaced: {
            const double c = view.spacing[axis];
            if (hi - lo >= c) return std::max(0.0, 0.5 * c - r);
            const double end =
                std::max(axis_deficit(view, axis, lo, r), axis_deficit(view, axis, hi, r));
            // interior peak at the midpoint between lattice translates
            const double k = std::ceil((lo - 0.5 * c) / c);
            const double peak = (k + 0.5) * c;
            if (peak >= lo && peak <= hi) return std::max(end, std::max(0.0, 0.5 * c - r));
            return end;
        }
    }
    return 0.0;
}

double conv_tolerance(const Scenario& sc) {
    double smallest = 1e300;
    for (const auto& v : sc.neighborhoods)
        smallest = std::min(smallest, static_cast<double>(v.half_widths.maxCoeff()));
    return smallest + 2.0 * sc.step;
}

}  // namespace

std::string KTimesVerdict::statement() const {
    std::ostringstream os;
    if (certified)
        os << "certified on windows up to radius " << largest_window;
    else
        os << "not certified on the tested windows (largest radius "
           << largest_window << ")";
    return os.str();
}

KTimesVerdict check_k_times(const Scenario& sc, TranslatorCertificate& cert) {
    KTimesVerdict verdict;
    verdict.conv_tolerance = conv_tolerance(sc);
    verdict.windows_tested = static_cast<int>(sc.window_radii.size());
    verdict.largest_window = sc.window_radii.empty() ? 0.0 : sc.window_radii.back();

    const int first = cert.index_first, last = cert.index_last;
    if (last - first < 4) {
        verdict.failures.push_back("index range too short to exhibit tails");
        return verdict;
    }
    if (static_cast<int>(cert.translators.size()) != cert.k) {
        verdict.failures.push_back("certificate carries the wrong number of families");
        return verdict;
    }

    // (1) translated sequences converge to the limit
    cert.convergence_evidence.assign(static_cast<std::size_t>(cert.k), {});
    const int tail_start = first + (last - first) / 2;
    for (int i = 0; i < cert.k; ++i) {
        auto& evidence = cert.convergence_evidence[static_cast<std::size_t>(i)];
        for (int n = first; n <= last; ++n) {
            const XPoint moved =
                sc.action->apply(cert.translator(i, n), sc.sequence(n));
            evidence.push_back(space_distance(moved, sc.limit));
        }
        double tail = 0.0;
        for (int n = tail_start; n <= last; ++n)
            tail = std::max(tail, evidence[static_cast<std::size_t>(n - first)]);
        verdict.tail_distance = std::max(verdict.tail_distance, tail);
        if (tail > verdict.conv_tolerance) {
            std::ostringstream os;
            os << "family " << i + 1 << " tail distance " << tail
               << " exceeds tolerance " << verdict.conv_tolerance;
            verdict.failures.push_back(os.str());
        }
    }

    // (2) pairwise coset escape from every configured window
    std::vector<ClosedSubgroup> stab;
    stab.reserve(static_cast<std::size_t>(last - first + 1));
    for (int n = first; n <= last; ++n) stab.push_back(sc.stabilizer_at(sc.sequence(n)));

    cert.escape_table.clear();
    for (int i = 0; i < cert.k; ++i) {
        for (int j = i + 1; j < cert.k; ++j) {
            TranslatorCertificate::PairEscape pair;
            pair.i = i;
            pair.j = j;
            for (double radius : sc.window_radii) {
                int threshold = -1;
                for (int n = last; n >= first; --n) {
                    const GroupElement delta =
                        group_sub(cert.translator(j, n), cert.translator(i, n));
                    const ClosedSubgroup& S =
                        stab[static_cast<std::size_t>(n - first)];
                    const GBox K = GBox::around(zero_element(S.descriptor), radius);
                    if (coset_box_distance(S, delta, K) > 1e-12)
                        threshold = n;
                    else
                        break;
                }
                pair.thresholds.push_back(threshold);
                if (threshold < 0) {
                    std::ostringstream os;
                    os << "pair (" << i + 1 << "," << j + 1
                       << ") never escapes the window of radius " << radius;
                    verdict.failures.push_back(os.str());
                }
            }
            cert.escape_table.push_back(std::move(pair));
        }
    }

    verdict.certified = verdict.failures.empty();
    return verdict;
}

TranslatorSearchResult search_translators(const Scenario& sc, int k) {
    TranslatorSearchResult result;
    if (k < 1) throw std::invalid_argument("k must be positive");
    const GroupDescriptor gd = sc.action->group();
    const int first = sc.index_first, last = sc.index_last;
    const int stages = static_cast<int>(
        std::min(sc.neighborhoods.size(), sc.window_radii.size()));

    // limit-side data per stage: padded neighborhood mass and margin
    std::vector<double> nu_z_padded(static_cast<std::size_t>(stages), 0.0);
    std::vector<double> eps(static_cast<std::size_t>(stages), 0.0);
    const ClosedSubgroup Sz = sc.limit_stabilizer();
    for (int m = 0; m < stages; ++m) {
        const XBox& Wm = sc.neighborhoods[static_cast<std::size_t>(m)];
        const Window zw = centered_window(gd, sc.search_radius(-1));
        const auto z_pre = orbit_preimage(*sc.action, sc.limit, Wm, zw, sc.step);
        const double pad = 0.05 * Wm.min_half_width();
        BoxSet padded(gd);
        for (auto box : z_pre.outer.boxes()) {
            for (int axis = 0; axis < gd.dim(); ++axis) {
                box.lo[axis] -= pad;
                box.hi[axis] += pad;
            }
            padded.add(box);
        }
        const QuotientMeasure nu{gd, Sz, QuotientMethod::CoordinateSplit};
        nu_z_padded[static_cast<std::size_t>(m)] =
            quotient_measure_of_set(nu, padded).value;
        eps[static_cast<std::size_t>(m)] =
            0.05 * nu_z_padded[static_cast<std::size_t>(m)];
    }

    // per index data: stabilizer, preimage brackets per stage
    const int count = last - first + 1;
    std::vector<ClosedSubgroup> stab;
    stab.reserve(static_cast<std::size_t>(count));
    for (int n = first; n <= last; ++n) stab.push_back(sc.stabilizer_at(sc.sequence(n)));

    std::vector<std::vector<BoxSet>> pre(static_cast<std::size_t>(stages));
    for (int m = 0; m < stages; ++m) {
        pre[static_cast<std::size_t>(m)].reserve(static_cast<std::size_t>(count));
        for (int n = first; n <= last; ++n) {
            const Window w = centered_window(gd, sc.search_radius(n));
            pre[static_cast<std::size_t>(m)].push_back(
                orbit_preimage(*sc.action, sc.sequence(n),
                               sc.neighborhoods[static_cast<std::size_t>(m)], w, sc.step)
                    .outer);
        }
    }

    // stage inequalities: measure growth and excised-window control
    const auto stage_ok = [&](int m, int n) -> StageInequalityRow {
        StageInequalityRow row;
        row.stage = m;
        row.n = n;
        const auto mi = static_cast<std::size_t>(m);
        const auto ni = static_cast<std::size_t>(n - first);
        const ClosedSubgroup& S = stab[ni];
        const BoxSet& E = pre[mi][ni];
        const QuotientMeasure nu{gd, S, QuotientMethod::CoordinateSplit};
        row.measure_lhs = quotient_measure_of_set(nu, E).value;
        row.measure_rhs =
            static_cast<double>(k - 1) * nu_z_padded[mi] + eps[mi];
        row.excised_rhs = nu_z_padded[mi] + eps[mi] / static_cast<double>(k);
        row.excised_lhs = 0.0;
        const double radius = sc.window_radii[mi];
        // nu(q((K_m + s + S) ∩ E)): both sets are S-saturated, so the quotient
        // mass is the measure of the intersection of their FD reductions
        const BoxSet E_reduced = reduce_to_fundamental_domain(S, E);
        const auto& eboxes = E.boxes();
        const std::size_t stride = std::max<std::size_t>(1, eboxes.size() / 16);
        for (std::size_t bi = 0; bi < eboxes.size(); bi += stride) {
            const auto& box = eboxes[bi];
            GroupElement corner = box.lower_corner();
            GroupElement middle = corner;
            for (int axis = 0; axis < gd.real_rank; ++axis)
                middle.real[axis] = 0.5 * (box.lo[axis] + box.hi[axis]);
            for (const GroupElement& s : {corner, middle}) {
                const BoxSet K_reduced = reduce_to_fundamental_domain(
                    S, BoxSet{GBox::around(s, radius)});
                const double mass =
                    E_reduced.intersect(K_reduced).measure() / S.haar_scale;
                row.excised_lhs = std::max(row.excised_lhs, mass);
            }
        }
        row.ok = row.measure_lhs > row.measure_rhs &&
                 row.excised_lhs <= row.excised_rhs;
        return row;
    };

    // open each stage at the first index from which its inequalities hold on
    // the whole suffix, strictly increasing in m
    std::vector<int> stage_start;
    int prev_start = first;
    for (int m = 0; m < stages; ++m) {
        std::vector<StageInequalityRow> rows;
        int start = -1;
        for (int n = last; n >= prev_start; --n) {
            auto row = stage_ok(m, n);
            rows.push_back(row);
            if (row.ok)
                start = n;
            else
                break;
        }
        for (auto it = rows.rbegin(); it != rows.rend(); ++it)
            result.trace.push_back(*it);
        if (start < 0) {
            if (m == 0) {
                result.failure_reason =
                    "stage inequalities fail on the whole index range";
                return result;
            }
            break;  // later stages never open; work with what already holds
        }
        if (m > 0) start = std::max(start, stage_start.back() + 1);
        if (start > last) break;
        stage_start.push_back(start);
        prev_start = start;
    }
    if (stage_start.empty()) {
        result.failure_reason = "no stage schedule satisfies the measure inequalities";
        return result;
    }
    result.stage_start = stage_start;

    // greedy translator selection per index
    TranslatorCertificate cert;
    cert.k = k;
    cert.index_first = first;
    cert.index_last = last;
    cert.translators.assign(static_cast<std::size_t>(k), {});

    std::vector<std::optional<AxisStructure>> stab_view;
    stab_view.reserve(stab.size());
    for (const auto& S : stab) stab_view.push_back(axis_structure(S));

    for (int n = first; n <= last; ++n) {
        int m = -1;
        for (std::size_t i = 0; i < stage_start.size(); ++i)
            if (n >= stage_start[i]) m = static_cast<int>(i);
        if (m < 0) {
            for (int i = 0; i < k; ++i)
                cert.translators[static_cast<std::size_t>(i)].push_back(
                    zero_element(gd));  // pre-schedule prefix: identity
            continue;
        }
        const auto ni = static_cast<std::size_t>(n - first);
        const BoxSet& E = pre[static_cast<std::size_t>(m)][ni];
        if (!stab_view[ni])
            throw UnsupportedSubgroup("greedy selection needs an axis-structured "
                                      "stabilizer");
        const AxisStructure& view = *stab_view[ni];
        const double radius = sc.window_radii[static_cast<std::size_t>(m)];

        // candidates in lexicographic order: per box (sorted), grid at step
        std::vector<GBox> boxes = E.boxes();
        std::sort(boxes.begin(), boxes.end(), [](const GBox& x, const GBox& y) {
            return lex_less(x.lower_corner(), y.lower_corner());
        });

        std::vector<GroupElement> chosen;
        // candidate escapes t iff some axis deficit of (cand - t + S) vs K_m
        // is strictly positive
        const auto cand_admissible = [&](const Vec& cand) {
            for (const auto& t : chosen) {
                double deficit = 0.0;
                for (int axis = 0; axis < gd.dim(); ++axis)
                    deficit = std::max(
                        deficit,
                        axis_deficit(view, axis, cand[axis] - t.real[axis], radius));
                if (deficit <= 1e-12) return false;
            }
            return true;
        };
        // can any candidate with these per-axis ranges escape t?
        const auto range_possible = [&](const GBox& box, int fixed_axis,
                                        double fixed_value) {
            for (const auto& t : chosen) {
                double best = 0.0;
                for (int axis = 0; axis < gd.dim(); ++axis) {
                    if (axis == fixed_axis)
                        best = std::max(best, axis_deficit(view, axis,
                                                           fixed_value - t.real[axis],
                                                           radius));
                    else
                        best = std::max(best, axis_deficit_max(
                                                  view, axis, box.lo[axis] - t.real[axis],
                                                  box.hi[axis] - t.real[axis], radius));
                }
                if (best <= 1e-12) return false;
            }
            return true;
        };

        const auto pick = [&]() -> std::optional<GroupElement> {
            for (const auto& box : boxes) {
                if (!range_possible(box, -1, 0.0)) continue;
                const auto count0 = std::max<std::int64_t>(
                    1, static_cast<std::int64_t>(
                           std::floor((box.hi[0] - box.lo[0]) / sc.step)) + 1);
                for (std::int64_t i0 = 0; i0 < count0; ++i0) {
                    const double c0 = box.lo[0] + static_cast<double>(i0) * sc.step;
                    if (gd.dim() == 1) {
                        Vec cand(1);
                        cand << c0;
                        if (cand_admissible(cand)) {
                            GroupElement t = zero_element(gd);
                            t.real = cand;
                            return t;
                        }
                        continue;
                    }
                    if (!range_possible(box, 0, c0)) continue;  // row cannot escape
                    const auto count1 = std::max<std::int64_t>(
                        1, static_cast<std::int64_t>(
                               std::floor((box.hi[1] - box.lo[1]) / sc.step)) + 1);
                    for (std::int64_t i1 = 0; i1 < count1; ++i1) {
                        Vec cand(2);
                        cand << c0, box.lo[1] + static_cast<double>(i1) * sc.step;
                        if (cand_admissible(cand)) {
                            GroupElement t = zero_element(gd);
                            t.real = cand;
                            return t;
                        }
                    }
                }
            }
            return std::nullopt;
        };

        for (int i = 0; i < k; ++i) {
            auto cand = pick();
            if (!cand) {
                std::ostringstream os;
                os << "greedy selection exhausted candidates at index " << n
                   << " for family " << i + 1 << " (stage " << m << ")";
                result.failure_reason = os.str();
                return result;
            }
            chosen.push_back(*cand);
            cert.translators[static_cast<std::size_t>(i)].push_back(*cand);
        }
    }

    result.certificate = std::move(cert);
    result.verdict = check_k_times(sc, result.certificate);
    result.found = result.verdict.certified;
    if (!result.found && result.failure_reason.empty())
        result.failure_reason = "constructed certificate failed validation";
    return result;
}

DiagnosticsReport locally_closed_diagnostics(const Scenario& sc) {
    DiagnosticsReport report;
    const GroupDescriptor gd = sc.action->group();
    const ClosedSubgroup Sz = sc.limit_stabilizer();
    const QuotientMeasure nu{gd, Sz, QuotientMethod::CoordinateSplit};

    for (const auto& V : sc.neighborhoods) {
        std::vector<double> series;
        for (double radius : sc.window_radii) {
            const Window w = centered_window(gd, radius);
            const auto bracket = orbit_preimage(*sc.action, sc.limit, V, w, sc.step);
            series.push_back(quotient_measure_of_set(nu, bracket.outer).value);
        }
        report.neighborhood_values.push_back(series.back());
        report.window_series.push_back(std::move(series));
    }

    bool growing = false;
    for (const auto& series : report.window_series) {
        if (series.size() < 2) continue;
        const double first = series.front(), lastv = series.back();
        const double prev = series[series.size() - 2];
        if (lastv > 1.5 * std::max(first, 1e-12) &&
            lastv > prev * (1.0 + 0.05))
            growing = true;
    }
    report.stabilizing = !growing;
    report.verdict =
        growing ? "growth-with-window" : "consistent-with-locally-closed";
    report.declared_fact = sc.has_fact(facts::kOrbitLocallyClosed)
                               ? facts::kOrbitLocallyClosed
                               : "(none declared)";
    return report;
}

}  // namespace tglab
