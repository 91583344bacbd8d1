#include "tglab/quotient.hpp"

#include "doctest.h"
#include "test_helpers.hpp"

#include <cmath>

using namespace tglab;

namespace {
const GroupDescriptor kLine{1, 0};
const GroupDescriptor kPlane{2, 0};

BoxSet single_interval(double lo, double hi) {
    return BoxSet{GBox::interval(lo, hi)};
}
}

TEST_CASE("bruhat section: trivial subgroup gives the constant section") {
    const auto H = trivial_subgroup(kLine);
    const auto section = build_bruhat_section(H, centered_window(kLine, 1.0));
    CHECK(section.unity_defect < 1e-9);
    for (double x : {-0.9, -0.3, 0.0, 0.4, 1.0})
        CHECK(section(make_real_element({x})) == doctest::Approx(1.0));
}

TEST_CASE("bruhat section: full line forces unit H-integral") {
    const auto H = real_axis_line(kLine, 0);
    const auto section = build_bruhat_section(H, centered_window(kLine, 1.0));
    CHECK(section.unity_defect < 1e-4);
}

TEST_CASE("bruhat section: half-integer lattice partition of unity") {
    const auto H = real_axis_lattice(kLine, 0, 0.5);
    const auto section = build_bruhat_section(H, centered_window(kLine, 1.0));
    // grid check of sum_k 0.5 * b(r + 0.5k) (the Haar weights) against 1
    for (double r : {-1.0, -0.63, -0.2, 0.0, 0.17, 0.5, 0.99}) {
        double s = 0.0;
        for (int k = -40; k <= 40; ++k)
            s += section(make_real_element({r + 0.5 * k}));
        CHECK(std::abs(H.haar_scale * s - 1.0) < 1e-4);
    }
}

TEST_CASE("quotient measure: trivial subgroup recovers Lebesgue measure") {
    const auto H = trivial_subgroup(kLine);
    const QuotientMeasure nu{kLine, H, QuotientMethod::CoordinateSplit};
    const auto est = quotient_measure_of_set(nu, single_interval(0.0, 2.0));
    CHECK(est.value == doctest::Approx(2.0).epsilon(1e-9));

    const auto section = build_bruhat_section(H, centered_window(kLine, 2.5));
    const QuotientMeasure nub{kLine, H, QuotientMethod::BruhatSection};
    const auto estb = quotient_measure_of_set(nub, single_interval(0.0, 2.0), &section, 1e-2);
    CHECK(std::abs(estb.value - 2.0) < 0.01);
}

TEST_CASE("quotient measure: full group carries unit point mass") {
    const auto H = real_axis_line(kLine, 0);
    const QuotientMeasure nu{kLine, H, QuotientMethod::CoordinateSplit};
    for (auto [lo, hi] : {std::pair{-0.5, 0.5}, std::pair{2.0, 2.25}, std::pair{-9.0, 7.0}}) {
        const auto est = quotient_measure_of_set(nu, single_interval(lo, hi));
        CHECK(est.value == doctest::Approx(1.0));
    }
}

TEST_CASE("quotient measure: half-integer lattice fundamental domain") {
    // oracle: (0.5 length) x (density 1/haar_scale = 2) = 1
    const auto H = real_axis_lattice(kLine, 0, 0.5);
    const QuotientMeasure nu{kLine, H, QuotientMethod::CoordinateSplit};
    const auto est = quotient_measure_of_set(nu, single_interval(0.0, 0.5));
    CHECK(est.value == doctest::Approx(1.0).epsilon(1e-9));

    const auto section = build_bruhat_section(H, centered_window(kLine, 1.0));
    const QuotientMeasure nub{kLine, H, QuotientMethod::BruhatSection};
    const auto estb =
        quotient_measure_of_set(nub, single_interval(0.0, 0.5), &section, 5e-3);
    CHECK(std::abs(estb.value - 1.0) < 5e-3);
    CHECK(quotient_total_mass(H) == doctest::Approx(1.0));
}

TEST_CASE("quotient measure: vertical line in the plane projects") {
    const auto H = real_axis_line(kPlane, 1);  // {0} x R
    const QuotientMeasure nu{kPlane, H, QuotientMethod::CoordinateSplit};
    GBox box{kPlane, Vec(2), Vec(2)};
    box.lo << 0.0, 0.0;
    box.hi << 1.0, 1.0;
    const auto est = quotient_measure_of_set(nu, BoxSet{box});
    CHECK(est.value == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("method agreement on a shared corpus") {
    struct Case {
        ClosedSubgroup H;
        double lo, hi;
    };
    const std::vector<Case> cases{
        {trivial_subgroup(kLine), -0.75, 1.25},
        {real_axis_lattice(kLine, 0, 0.5), -0.2, 0.9},
        {real_axis_lattice(kLine, 0, 2.0), -0.4, 1.1},
        {real_axis_line(kLine, 0), -1.0, 1.0},
    };
    for (const auto& c : cases) {
        const auto E = single_interval(c.lo, c.hi);
        const QuotientMeasure split{kLine, c.H, QuotientMethod::CoordinateSplit};
        const auto section =
            build_bruhat_section(c.H, centered_window(kLine, std::abs(c.lo) + std::abs(c.hi)));
        const QuotientMeasure bruhat{kLine, c.H, QuotientMethod::BruhatSection};
        const double a = quotient_measure_of_set(split, E).value;
        const double b = quotient_measure_of_set(bruhat, E, &section, 5e-3).value;
        CHECK(std::abs(a - b) <= 1e-3 * std::max(1.0, std::abs(a)));
    }
}

TEST_CASE("quotient measure is translation invariant") {
    testing::Rng rng(47);
    const auto H = real_axis_lattice(kLine, 0, 0.7);
    const QuotientMeasure nu{kLine, H, QuotientMethod::CoordinateSplit};
    for (int i = 0; i < 20; ++i) {
        const double lo = rng.uniform(-2, 0), hi = lo + rng.uniform(0.05, 0.6);
        const double shift = rng.uniform(-5, 5);
        const double base = quotient_measure_of_set(nu, single_interval(lo, hi)).value;
        const double moved =
            quotient_measure_of_set(nu, single_interval(lo + shift, hi + shift)).value;
        CHECK(std::abs(base - moved) < 1e-9);
    }
}

TEST_CASE("quotient measure is monotone in the set") {
    testing::Rng rng(53);
    const auto H = real_axis_lattice(kLine, 0, 0.5);
    const QuotientMeasure nu{kLine, H, QuotientMethod::CoordinateSplit};
    for (int i = 0; i < 20; ++i) {
        const double lo = rng.uniform(-2, 0), hi = lo + rng.uniform(0.01, 1.0);
        const double pad = rng.uniform(0.0, 0.5);
        const double inner = quotient_measure_of_set(nu, single_interval(lo, hi)).value;
        const double outer =
            quotient_measure_of_set(nu, single_interval(lo - pad, hi + pad)).value;
        CHECK(inner <= outer + 1e-12);
    }
}

TEST_CASE("weil consistency: integer lattice") {
    const auto H = real_axis_lattice(kLine, 0, 2.0);
    const BumpFunction f0;
    const Window supp = centered_window(kLine, 1.0);
    const double res =
        weil_consistency(H, supp, 1e-3, [&](const GroupElement& g) { return f0(g); });
    CHECK(std::abs(res) <= 1e-3 * 1.0 * 2.0);
}

TEST_CASE("weil consistency: trivial subgroup degenerates to the same integral") {
    const auto H = trivial_subgroup(kLine);
    const BumpFunction f0;
    const Window supp = centered_window(kLine, 1.0);
    const double res =
        weil_consistency(H, supp, 1e-3, [&](const GroupElement& g) { return f0(g); });
    CHECK(std::abs(res) <= 1e-9);
}

TEST_CASE("weil consistency: vertical line in the plane (Fubini)") {
    const auto H = real_axis_line(kPlane, 1);
    const BumpFunction f0;
    const Window supp = centered_window(kPlane, 1.0);
    const double res =
        weil_consistency(H, supp, 5e-3, [&](const GroupElement& g) { return f0(g); });
    CHECK(std::abs(res) <= 1e-3 * 1.0 * 4.0);
}

TEST_CASE("weil consistency: mixed lattice factor") {
    const GroupDescriptor mixed{1, 1};
    const auto H = full_group(mixed);  // R x Z itself
    const BumpFunction wide{BumpFunction::Kind::TriangularProduct, 1.5};
    const Window supp = centered_window(mixed, 1.5);
    const double res =
        weil_consistency(H, supp, 1e-3, [&](const GroupElement& g) { return wide(g); });
    CHECK(std::abs(res) <= 1e-3 * 1.0 * 9.0);
}

TEST_CASE("smoothed indicators agree with the weil route") {
    // chi-extension: measure of a box equals the Weil integral of its smoothed
    // indicator within the documented ramp error
    const auto H = real_axis_lattice(kLine, 0, 2.0);
    const QuotientMeasure nu{kLine, H, QuotientMethod::CoordinateSplit};
    const double lo = -0.4, hi = 0.8;
    const double measure = quotient_measure_of_set(nu, single_interval(lo, hi)).value;

    const double step = 1e-3, ramp = 2.0 * step;
    const auto smoothed = [&](const GroupElement& g) {
        const double inside = std::min(g.real[0] - lo, hi - g.real[0]);
        return std::clamp(0.5 + inside / ramp, 0.0, 1.0);
    };
    // with E inside one fundamental domain the quotient measure equals the
    // plain integral of the indicator scaled by the Haar density
    const Window supp = centered_window(kLine, 1.0);
    const double integral = integrate_G(supp, step, smoothed);
    CHECK(std::abs(measure - integral / H.haar_scale) <= ramp + 1e-6);
}

TEST_CASE("tail comparison: shrinking lattices against the full line") {
    const auto line = real_axis_line(kLine, 0);
    const SubgroupFamily family = [](int n) {
        return real_axis_lattice(kLine, 0, 1.0 / (n + 0.5));
    };
    const auto cert = fell_converges(family, 1, 240, line, {1.0, 3.0}, 5e-3);
    REQUIRE(cert.certified);
    const auto report = limsup_comparison(family, 1, 40, line, cert,
                                          GBox::interval(-1.0, 1.0));
    CHECK(report.limit_value == doctest::Approx(1.0));
    CHECK(report.satisfied);
    // oracle: value at n is 1 + 0.25/(n^2 + n + 0.25), strictly decreasing
    for (std::size_t i = 0; i + 1 < report.values.size(); ++i)
        CHECK(report.values[i] >= report.values[i + 1] - 1e-12);
    const double v10 = report.values[9];
    CHECK(v10 == doctest::Approx(1.0 + 0.25 / (100.0 + 10.0 + 0.25)).epsilon(1e-9));
}

TEST_CASE("tail comparison: constant family sits at equality") {
    const auto H = real_axis_lattice(kLine, 0, 0.5);
    const SubgroupFamily family = [&](int) { return H; };
    const auto cert = fell_converges(family, 1, 20, H, {1.0}, 1e-3);
    REQUIRE(cert.certified);
    const auto report =
        limsup_comparison(family, 1, 20, H, cert, GBox::interval(-1.0, 1.0));
    CHECK(report.tail_max == doctest::Approx(report.limit_value));
    CHECK(report.satisfied);
}

TEST_CASE("tail comparison refuses an uncertified family") {
    const auto line = real_axis_line(kLine, 0);
    const SubgroupFamily family = [](int n) {
        return real_axis_lattice(kLine, 0, 1.0 + 1.0 / n);
    };
    FellCertificate bogus;
    bogus.certified = false;
    CHECK_THROWS_AS(
        limsup_comparison(family, 1, 10, line, bogus, GBox::interval(-1.0, 1.0)),
        std::invalid_argument);
}

TEST_CASE("coordinate split rejects non-axis subgroups") {
    Vec diag(2);
    diag << 1.0, 1.0;
    const auto H = make_subgroup(kPlane, {diag}, {});
    const QuotientMeasure nu{kPlane, H, QuotientMethod::CoordinateSplit};
    GBox box{kPlane, Vec(2), Vec(2)};
    box.lo << 0.0, 0.0;
    box.hi << 1.0, 1.0;
    CHECK_THROWS_AS(quotient_measure_of_set(nu, BoxSet{box}), UnsupportedSubgroup);
}

TEST_CASE("bruhat section reports a too-narrow bump") {
    const auto H = real_axis_lattice(kLine, 0, 2.0);
    // caller-forced radius below the lattice spacing starves the denominator
    CHECK_THROWS_AS(build_bruhat_section(H, centered_window(kLine, 1.0), 1e-2, 0.8),
                    std::runtime_error);
}

TEST_CASE("bruhat measure rejects sets outside the coverage window") {
    const auto H = trivial_subgroup(kLine);
    const auto section = build_bruhat_section(H, centered_window(kLine, 1.0));
    const QuotientMeasure nu{kLine, H, QuotientMethod::BruhatSection};
    CHECK_THROWS_AS(
        quotient_measure_of_set(nu, single_interval(0.0, 40.0), &section, 1e-2),
        std::runtime_error);
}

TEST_CASE("saturated window masses agree across both methods") {
    // the normalization constant of the window vectors: nu(q(W + S)) for the
    // winding stabilizers, W = [-1, 1]; the wrapped set has full quotient mass
    for (int n : {4, 9, 15}) {
        const double w = 1.0 / (n + 0.5);
        const auto H = real_axis_lattice(kLine, 0, w);
        const QuotientMeasure split{kLine, H, QuotientMethod::CoordinateSplit};
        const auto saturated = single_interval(-1.0, 1.0);
        const double a = quotient_measure_of_set(split, saturated).value;
        CHECK(a == doctest::Approx(quotient_total_mass(H)).epsilon(1e-12));

        const auto section = build_bruhat_section(H, centered_window(kLine, 2.0));
        const QuotientMeasure bruhat{kLine, H, QuotientMethod::BruhatSection};
        const double b = quotient_measure_of_set(bruhat, saturated, &section, 5e-3).value;
        CHECK(std::abs(a - b) <= 1e-3 * a);
    }
}
