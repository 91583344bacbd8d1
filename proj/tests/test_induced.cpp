#include "tglab/induced.hpp"

#include "doctest.h"
#include "test_helpers.hpp"

#include <cmath>

using namespace tglab;

namespace {
const double kPi = 3.14159265358979323846;

ElementaryTensor bump_tensor(double g_radius) {
    ElementaryTensor f;
    f.h_radius = 1.0;
    f.h = [](const GroupElement& g) {
        return std::max(0.0, 1.0 - std::abs(g.real[0]));
    };
    f.g = [g_radius](const XPoint& p) {
        double v = 1.0;
        for (Eigen::Index i = 0; i < p.size(); ++i)
            v *= std::max(0.0, 1.0 - std::abs(p[i]) / g_radius);
        return v;
    };
    return f;
}

// independent oracle: direct double-integral matrix coefficient at the limit
// of a scenario with trivial stabilizer, eta = uniform window vector
double psi_direct_at_limit(const Scenario& sc, const ElementaryTensor& f, double W,
                           double step) {
    const GroupDescriptor gd = sc.action->group();
    const double C = 1.0 / (2.0 * W);
    const auto m = std::llround(2.0 * W / step);
    const double cell = 2.0 * W / static_cast<double>(m);
    CompensatedSum outer;
    for (std::int64_t i = 0; i < m; ++i) {
        const double v = -W + (static_cast<double>(i) + 0.5) * cell;
        GroupElement gv = zero_element(gd);
        gv.real[0] = v;
        const double gx = f.g(sc.action->apply(gv, sc.limit));
        CompensatedSum inner;
        for (std::int64_t j = 0; j < m; ++j) {
            const double u = -W + (static_cast<double>(j) + 0.5) * cell;
            GroupElement gu = zero_element(gd);
            gu.real[0] = v - u;
            inner.add(f.h(gu) * cell);
        }
        outer.add(gx * inner.value() * cell);
    }
    return C * outer.value();
}
}

TEST_CASE("kernel spec: translation trapezoid norm (closed form)") {
    const auto sc = builtin_scenario("translation");
    const auto spec = build_kernel_spec(sc, sc.neighborhoods[0]);
    // oracle: square integral of the plateau/ramp profile is 2(p + r/3)
    const double h = 0.5;
    const double expected = 1.0 / std::sqrt(2.0 * (0.6 * h + 0.2 * h / 3.0));
    CHECK(spec.normalization == doctest::Approx(expected).epsilon(1e-3));
    CHECK(spec.norm_defect <= 1e-4);
    CHECK(spec.orbit_axis == 0);
}

TEST_CASE("kernel spec: winding at the fixed point is rejected") {
    const auto sc = builtin_scenario("winding");
    CHECK_THROWS_WITH_AS(build_kernel_spec(sc, sc.neighborhoods[0]),
                         "S_z not compact", std::invalid_argument);
}

TEST_CASE("kernel spec: product scenarios are rejected the same way") {
    const auto sc = builtin_scenario("green_x_winding");
    CHECK_THROWS_AS(build_kernel_spec(sc, sc.neighborhoods[0]), std::invalid_argument);
}

TEST_CASE("kernel spec: green support sits on a single strand at the limit") {
    const auto sc = builtin_scenario("green");
    const auto spec = build_kernel_spec(sc, sc.neighborhoods[0]);
    CHECK(spec.orbit_axis == 1);
    CHECK(spec.norm_defect <= 1e-4);
    // F vanishes off the configured neighborhood
    XPoint far(3);
    far << 0.0, 0.45, 0.0;
    CHECK(spec.F(far) == 0.0);
    XPoint near(3);
    near << 0.0, 0.1, 0.0;
    CHECK(spec.F(near) > 0.0);
}

TEST_CASE("trace at the limit is the rank-one value") {
    for (const auto& name : {"green", "translation"}) {
        const auto sc = builtin_scenario(name);
        const auto spec = build_kernel_spec(sc, sc.neighborhoods[0]);
        const auto est = trace_estimate(sc, spec, -1);
        INFO(name);
        CHECK(std::abs(est.value - 1.0) <= 1e-3);
        CHECK(est.kernel_norm_sq == est.value);
        CHECK(est.symmetry_defect <= 1e-9);
    }
}

TEST_CASE("trace tail on the green scenario approaches two strands") {
    const auto sc = builtin_scenario("green");
    const auto spec = build_kernel_spec(sc, sc.neighborhoods[0]);
    for (int n : {10, 14, 18, 24}) {
        const auto est = trace_estimate(sc, spec, n);
        CHECK(est.value >= 1.8);
        CHECK(est.value <= 2.2);
        CHECK(est.max_upsilon <= 2.0 * 1.02);
    }
}

TEST_CASE("trace of the zero operator vanishes") {
    const auto sc = builtin_scenario("translation");
    auto spec = build_kernel_spec(sc, sc.neighborhoods[0]);
    spec.scale = 0.0;
    const auto est = trace_estimate(sc, spec, 5);
    CHECK(est.value == 0.0);
}

TEST_CASE("matrix coefficient at the limit matches the direct oracle") {
    for (const auto& name : {"translation", "green"}) {
        const auto sc = builtin_scenario(name);
        const auto f = bump_tensor(0.6);
        const double W = 1.0;
        const Complex via_reduction =
            psi_functional(sc, sc.limit, zero_element(sc.action->group()), f, W, 5e-3);
        const double direct = psi_direct_at_limit(sc, f, W, 5e-3);
        INFO(name);
        CHECK(std::abs(via_reduction.real() - direct) <= 1e-3);
        CHECK(std::abs(via_reduction.imag()) == 0.0);
    }
}

TEST_CASE("matrix coefficient of the zero tensor vanishes") {
    const auto sc = builtin_scenario("green");
    auto f = bump_tensor(0.6);
    f.scale = 0.0;
    const Complex v =
        psi_functional(sc, sc.limit, zero_element(sc.action->group()), f, 1.0, 1e-2);
    CHECK(v == Complex{0.0, 0.0});
}

TEST_CASE("matrix coefficients along both translator families converge") {
    const auto sc = builtin_scenario("green");
    const auto f = bump_tensor(0.6);
    const double W = 1.0;
    const double at_limit =
        psi_functional(sc, sc.limit, zero_element(sc.action->group()), f, W, 1e-2)
            .real();

    double prev1 = 1e9, prev2 = 1e9;
    for (int n : {2, 3, 4, 6, 8}) {
        GroupElement t1 = zero_element(sc.action->group());
        GroupElement t2 = zero_element(sc.action->group());
        t2.real[0] = 2.0 * n + kPi;  // the worked second family
        const double p1 = psi_functional(sc, sc.sequence(n), t1, f, W, 1e-2).real();
        const double p2 = psi_functional(sc, sc.sequence(n), t2, f, W, 1e-2).real();
        const double e1 = std::abs(p1 - at_limit), e2 = std::abs(p2 - at_limit);
        CHECK(e1 <= prev1 + 1e-9);
        CHECK(e2 <= prev2 + 1e-9);
        prev1 = e1;
        prev2 = e2;
    }
    CHECK(prev1 <= 2e-3);
    CHECK(prev2 <= 2e-3);
}

TEST_CASE("translated window vectors are exactly orthogonal past the threshold") {
    const auto sc = builtin_scenario("green_x_winding");
    TranslatorCertificate cert;
    cert.k = 2;
    cert.index_first = sc.index_first;
    cert.index_last = sc.index_last;
    cert.translators.resize(2);
    for (int n = sc.index_first; n <= sc.index_last; ++n) {
        cert.translators[0].push_back(zero_element(sc.action->group()));
        GroupElement t2 = zero_element(sc.action->group());
        t2.real[0] = 2.0 * n + kPi;
        cert.translators[1].push_back(t2);
    }
    for (int n = 1; n <= sc.index_last; ++n)
        CHECK(translator_vectors_orthogonal(sc, cert, n, 1.0));
}

TEST_CASE("dual twist: trivial character is the identity") {
    const auto k = sample_line_kernel(
        [](double r) { return std::max(0.0, 1.0 - std::abs(r)); }, 2.0, 0.05);
    Character one{Vec::Zero(1), Vec::Zero(0)};
    const auto twisted = dual_twist(k, one);
    for (std::size_t i = 0; i < k.values.size(); ++i)
        CHECK(std::abs(twisted.values[i] - k.values[i]) < 1e-15);
}

TEST_CASE("dual twist: half frequency flips the sign at one") {
    SampledKernel k;
    k.step = 0.5;
    k.offset = 4;
    k.values.assign(9, Complex{0.0, 0.0});
    k.values[6] = Complex{1.0, 0.0};  // mass at r = 1
    Character tau{Vec::Constant(1, 0.5), Vec::Zero(0)};
    const auto twisted = dual_twist(k, tau);
    CHECK(std::abs(twisted.values[6] - Complex{-1.0, 0.0}) < 1e-12);
}

TEST_CASE("dual twist: operator identity on the translation grid") {
    const auto sc = builtin_scenario("translation");
    const XPoint x = sc.sequence(3);
    const auto g = [](const XPoint& p) {
        return std::max(0.0, 1.0 - std::abs(p[0]) / 1.5);
    };
    const auto h = [](double r) { return std::max(0.0, 1.0 - std::abs(r)); };
    Character tau{Vec::Constant(1, 0.35), Vec::Zero(0)};
    const double L = 2.0, step = 0.1;

    const auto samples = sample_line_kernel(h, 2.0 * L, step);
    const auto direct =
        induced_rep_matrix(*sc.action, x, samples, g, &tau, L, step);
    const auto twisted =
        induced_rep_matrix(*sc.action, x, dual_twist(samples, tau), g, nullptr, L, step);

    // matrix elements against a few deterministic sample vectors
    testing::Rng rng(271);
    double max_dev = 0.0;
    const auto m = direct.rows();
    for (int trial = 0; trial < 6; ++trial) {
        Eigen::VectorXcd xi(m), zeta(m);
        for (Eigen::Index i = 0; i < m; ++i) {
            xi[i] = Complex{rng.uniform(-1, 1), rng.uniform(-1, 1)};
            zeta[i] = Complex{rng.uniform(-1, 1), rng.uniform(-1, 1)};
        }
        const Complex lhs = zeta.dot(direct * xi);
        const Complex rhs = zeta.dot(twisted * xi);
        max_dev = std::max(max_dev, std::abs(lhs - rhs));
    }
    CHECK(max_dev <= 1e-6);
}

TEST_CASE("multiplicity sandwich on the green scenario") {
    const auto sc = builtin_scenario("green");
    // measured accumulation ratios on the smallest neighborhood
    const XBox& V = sc.neighborhoods[2];
    const double limit_value = accumulation_at_limit(sc, V).value;
    std::vector<double> ratios;
    for (int n = sc.index_first; n <= sc.index_last; ++n)
        ratios.push_back(accumulation_functional(sc, V, n).value / limit_value);
    double tail = 1e300;
    for (std::size_t i = ratios.size() / 2; i < ratios.size(); ++i)
        tail = std::min(tail, ratios[i]);

    const auto spec = build_kernel_spec(sc, sc.neighborhoods[0]);
    std::vector<double> traces;
    for (int n = 10; n <= sc.index_last; n += 2)
        traces.push_back(trace_estimate(sc, spec, n).value);
    const double tr_limit = trace_estimate(sc, spec, -1).value;

    const auto report = multiplicity_report(sc, 2, tail, ratios, sc.index_first,
                                            traces, tr_limit, true, 0.05);
    CHECK(report.snapped_M == doctest::Approx(2.0));
    CHECK(report.floor_M == 2);
    CHECK(report.floor_M_squared == 4);
    CHECK(report.verdict == "consistent");
    CHECK_FALSE(report.sandwich_fault);
    CHECK_FALSE(report.frequency_set.empty());

    const auto refuted = multiplicity_report(sc, 3, tail, ratios, sc.index_first,
                                             traces, tr_limit, true, 0.05);
    CHECK(refuted.verdict == "refuted");
}

TEST_CASE("multiplicity sandwich on the translation scenario") {
    const auto sc = builtin_scenario("translation");
    const XBox& V = sc.neighborhoods[2];
    const double limit_value = accumulation_at_limit(sc, V).value;
    std::vector<double> ratios;
    for (int n = sc.index_first; n <= sc.index_last; ++n)
        ratios.push_back(accumulation_functional(sc, V, n).value / limit_value);
    const auto spec = build_kernel_spec(sc, sc.neighborhoods[0]);
    std::vector<double> traces;
    for (int n = 10; n <= sc.index_last; n += 4)
        traces.push_back(trace_estimate(sc, spec, n).value);
    const double tr_limit = trace_estimate(sc, spec, -1).value;
    const auto report = multiplicity_report(sc, 1, ratios.back(), ratios,
                                            sc.index_first, traces, tr_limit, true, 0.05);
    CHECK(report.floor_M == 1);
    CHECK(report.verdict == "consistent");
}

TEST_CASE("kernel-sum bound: direct sampling on green") {
    const auto sc = builtin_scenario("green");
    const auto report = upsilon_bound_report(sc, 0.02, 1, 8);
    CHECK_FALSE(report.surrogate);
    CHECK(report.satisfied);
    CHECK(report.max_value <= report.bound);
}

TEST_CASE("kernel-sum bound: surrogate ratio on the product scenarios") {
    for (const auto& name : {"green_x_winding", "green_x_trivial"}) {
        const auto sc = builtin_scenario(name);
        const auto report = upsilon_bound_report(sc, 0.02, 25, 12);
        INFO(name);
        CHECK(report.surrogate);
        CHECK(report.satisfied);
        CHECK(report.max_value <= 2.0 * 1.02);
        CHECK(report.max_value >= 1.0);  // sanity: ratios hover near one
    }
}

TEST_CASE("kernel spec rejects neighborhoods below the ramp scale") {
    auto sc = builtin_scenario("translation");
    sc.step = 0.05;  // 16 steps exceed the smallest configured half-width
    CHECK_THROWS_AS(build_kernel_spec(sc, sc.neighborhoods[2]), std::invalid_argument);
}

TEST_CASE("inconsistent sandwiches are flagged, never clipped") {
    const auto sc = builtin_scenario("translation");
    const std::vector<double> ratios{1.0, 1.0, 1.0, 1.0};
    const std::vector<double> traces{5.0, 5.0, 5.0};  // far above the upper bound
    const auto report =
        multiplicity_report(sc, 1, 1.0, ratios, 1, traces, 1.0, true, 0.05);
    CHECK(report.sandwich_fault);
    CHECK(report.verdict == "fault");
}

TEST_CASE("trace estimates carry their construction parameters") {
    const auto sc = builtin_scenario("translation");
    const auto spec = build_kernel_spec(sc, sc.neighborhoods[0]);
    const auto est = trace_estimate(sc, spec, 5);
    CHECK(est.construction.normalization == spec.normalization);
    CHECK(est.construction.orbit_axis == spec.orbit_axis);
}

TEST_CASE("trace at an early index matches the strand decomposition") {
    // oracle: with transverse cutoff plateau 0.2 and ramp to 0.4, the strand
    // at height x contributes cutoff(x)^4; at n = 1 the strands sit at
    // x = 0.25 and x = 0.125, giving 0.75^4 + 1
    const auto sc = builtin_scenario("green");
    const auto spec = build_kernel_spec(sc, sc.neighborhoods[0]);
    const auto est = trace_estimate(sc, spec, 1);
    const double oracle = std::pow(0.75, 4) + 1.0;
    CHECK(est.value == doctest::Approx(oracle).epsilon(2e-3));
}
