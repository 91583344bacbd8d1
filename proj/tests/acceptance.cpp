// Acceptance battery: one pass/fail line per criterion. Exit code 0 only if
// every criterion holds. An optional argument names the CLI binary used for
// the byte-determinism criterion; without it that criterion runs through the
// same emission code path the CLI wraps.

#include "tglab/harness.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace tglab;
namespace fs = std::filesystem;

namespace {

const double kPi = 3.14159265358979323846;
int failures = 0;

void verdict(int id, const std::string& name, bool pass, const std::string& detail) {
    std::printf("[%s] criterion %2d: %s  (%s)\n", pass ? "PASS" : "FAIL", id,
                name.c_str(), detail.c_str());
    if (!pass) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

double triangle(double x, double r) { return std::max(0.0, 1.0 - std::abs(x) / r); }

// ---- criterion 1: Weil-formula consistency ---------------------------------

struct WeilCase {
    std::string label;
    ClosedSubgroup H;
    Window support;
    double step;
    double volume;  // of the support of f
    std::function<double(const GroupElement&)> f;
};

std::vector<WeilCase> weil_cases() {
    const GroupDescriptor line{1, 0};
    const GroupDescriptor plane{2, 0};
    const GroupDescriptor mixed{1, 1};
    const BumpFunction f0;
    const BumpFunction wide{BumpFunction::Kind::TriangularProduct, 1.5};

    std::vector<WeilCase> cases;
    const auto line_bump = [f0](const GroupElement& g) { return f0(g); };
    const auto line_off = [](const GroupElement& g) {
        return triangle(g.real[0] - 0.2, 1.1);
    };
    cases.push_back({"R / trivial", trivial_subgroup(line),
                     centered_window(line, 1.5), 5e-3, 2.0, line_bump});
    cases.push_back({"R / full line", real_axis_line(line, 0),
                     centered_window(line, 1.5), 5e-3, 2.0, line_bump});
    cases.push_back({"R / 2Z", real_axis_lattice(line, 0, 2.0),
                     centered_window(line, 1.5), 5e-3, 2.0, line_bump});
    cases.push_back({"R / 0.5Z", real_axis_lattice(line, 0, 0.5),
                     centered_window(line, 1.5), 5e-3, 2.0, line_bump});
    cases.push_back({"R / 0.7Z shifted f", real_axis_lattice(line, 0, 0.7),
                     centered_window(line, 1.5), 5e-3, 2.2, line_off});

    const auto plane_bump = [f0](const GroupElement& g) { return f0(g); };
    cases.push_back({"R2 / trivial", trivial_subgroup(plane),
                     centered_window(plane, 1.2), 1e-2, 4.0, plane_bump});
    cases.push_back({"R2 / {0}xR", real_axis_line(plane, 1),
                     centered_window(plane, 1.2), 1e-2, 4.0, plane_bump});
    cases.push_back({"R2 / full", full_group(plane), centered_window(plane, 1.2),
                     1e-2, 4.0, plane_bump});
    cases.push_back({"R2 / {0}x0.5Z", real_axis_lattice(plane, 1, 0.5),
                     centered_window(plane, 1.2), 1e-2, 4.0, plane_bump});
    cases.push_back({"R2 / 0.8Zx{0}", real_axis_lattice(plane, 0, 0.8),
                     centered_window(plane, 1.2), 1e-2, 4.0, plane_bump});

    const auto mixed_wide = [wide](const GroupElement& g) { return wide(g); };
    cases.push_back({"RxZ / full", full_group(mixed), centered_window(mixed, 2.0),
                     5e-3, 9.0, mixed_wide});
    {
        GroupElement gen = zero_element(mixed);
        gen.lattice[0] = 2;
        cases.push_back({"RxZ / {0}x2Z", make_subgroup(mixed, {}, {gen}),
                         centered_window(mixed, 2.0), 5e-3, 9.0, mixed_wide});
    }
    {
        Vec e = Vec::Zero(1);
        e[0] = 1.0;
        cases.push_back({"RxZ / Rx{0}", make_subgroup(mixed, {e}, {}),
                         centered_window(mixed, 2.0), 5e-3, 9.0, mixed_wide});
    }
    return cases;
}

void criterion_1() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto cases = weil_cases();
    bool ok = cases.size() >= 10;
    std::string worst;
    double worst_ratio = 0.0;
    for (const auto& c : cases) {
        const double res = weil_consistency(c.H, c.support, c.step, c.f);
        const double bound = 1e-3 * 1.0 * c.volume;
        const double ratio = std::abs(res) / bound;
        if (ratio > worst_ratio) {
            worst_ratio = ratio;
            worst = c.label;
        }
        if (std::abs(res) > bound) ok = false;
    }
    const double elapsed = seconds_since(t0);
    if (elapsed >= 10.0) ok = false;
    std::ostringstream os;
    os << cases.size() << " pairs, worst |residual|/bound " << worst_ratio << " ("
       << worst << "), " << elapsed << " s";
    verdict(1, "Weil-formula consistency", ok, os.str());
}

// ---- criterion 2: Haar normalization ----------------------------------------

void criterion_2() {
    const GroupDescriptor line{1, 0};
    const GroupDescriptor plane{2, 0};
    bool ok = true;
    std::ostringstream os;

    // the four closed-form scales
    const double s_line = real_axis_line(line, 0).haar_scale;
    const double s_triv = trivial_subgroup(line).haar_scale;
    const double s_two = real_axis_lattice(line, 0, 2.0).haar_scale;
    const double s_half = real_axis_lattice(line, 0, 0.5).haar_scale;
    ok = ok && std::abs(s_line - 1.0) <= 1e-6 && std::abs(s_triv - 1.0) <= 1e-12 &&
         std::abs(s_two - 1.0) <= 1e-12 && std::abs(s_half - 0.5) <= 1e-12;

    // normalization invariant over a corpus including scenario stabilizers
    std::vector<ClosedSubgroup> corpus{
        trivial_subgroup(line),          real_axis_line(line, 0),
        real_axis_lattice(line, 0, 2.0), real_axis_lattice(line, 0, 0.5),
        real_axis_lattice(line, 0, 0.7), trivial_subgroup(plane),
        real_axis_line(plane, 1),        real_axis_lattice(plane, 1, 0.5),
        full_group(plane),               full_group({1, 1}),
    };
    Vec diag(2);
    diag << 1.0, 1.0;
    corpus.push_back(make_subgroup(plane, {diag}, {}));
    const auto winding = builtin_scenario("winding");
    const auto product = builtin_scenario("green_x_winding");
    for (int n : {1, 10, 40}) corpus.push_back(winding.stabilizer_at(winding.sequence(n)));
    for (int n : {1, 10}) corpus.push_back(product.stabilizer_at(product.sequence(n)));

    const BumpFunction f0;
    double worst = 0.0;
    for (const auto& H : corpus) {
        const Window w = centered_window(H.descriptor, 2.0);
        const double mass =
            integrate_H(H, w, 1e-3, [&](const GroupElement& g) { return f0(g); });
        worst = std::max(worst, std::abs(mass - 1.0));
        if (std::abs(mass - 1.0) > 1e-6) ok = false;
    }
    os << corpus.size() << " subgroups, worst |mass-1| " << worst << ", scales "
       << s_line << "/" << s_triv << "/" << s_two << "/" << s_half;
    verdict(2, "Haar normalization", ok, os.str());
}

// ---- criterion 3: Fell certification ----------------------------------------

void criterion_3() {
    const auto t0 = std::chrono::steady_clock::now();
    const GroupDescriptor line{1, 0};
    const auto full = real_axis_line(line, 0);
    const std::vector<double> windows{1.0, 3.0, 10.0};

    const SubgroupFamily winding_stabs = [&](int n) {
        return real_axis_lattice(line, 0, 1.0 / (n + 0.5));
    };
    const SubgroupFamily reciprocal = [&](int n) {
        return real_axis_lattice(line, 0, 1.0 / n);
    };
    const SubgroupFamily counterexample = [&](int n) {
        return real_axis_lattice(line, 0, 1.0 + 1.0 / n);
    };
    const auto target = real_axis_lattice(line, 0, 2.0);

    const auto cert_w = fell_converges(winding_stabs, 1, 1200, full, windows, 1e-3);
    const auto cert_r = fell_converges(reciprocal, 1, 1200, full, windows, 1e-3);
    const auto cert_c = fell_converges(counterexample, 1, 1200, target, {3.0}, 1e-3);
    const double elapsed = seconds_since(t0);

    bool ok = cert_w.certified && cert_r.certified && !cert_c.certified &&
              elapsed < 5.0;
    std::ostringstream os;
    os << "thresholds " << cert_w.max_threshold() << "/" << cert_r.max_threshold()
       << ", counterexample violations "
       << (cert_c.windows.empty() ? 0 : cert_c.windows[0].violations.size()) << ", "
       << elapsed << " s";
    verdict(3, "Fell certification", ok, os.str());
}

// ---- criterion 4: quotient-measure tail bound --------------------------------

void criterion_4() {
    const GroupDescriptor line{1, 0};
    const auto full = real_axis_line(line, 0);
    const GBox W = GBox::interval(-1.0, 1.0);
    bool ok = true;
    std::ostringstream os;
    const std::vector<std::pair<std::string, SubgroupFamily>> families{
        {"winding-stabilizers",
         [&](int n) { return real_axis_lattice(line, 0, 1.0 / (n + 0.5)); }},
        {"reciprocal", [&](int n) { return real_axis_lattice(line, 0, 1.0 / n); }},
    };
    for (const auto& [label, family] : families) {
        const auto cert = fell_converges(family, 1, 320, full, {1.0, 3.0}, 5e-3);
        if (!cert.certified) {
            ok = false;
            continue;
        }
        const auto report = limsup_comparison(family, 1, 40, full, cert, W, 5e-3);
        ok = ok && report.satisfied;
        os << label << " tail " << report.tail_max << " vs bound " << report.bound
           << "; ";
    }
    verdict(4, "quotient-measure tail bound", ok, os.str());
}

// ---- criterion 5: the flagship scenario ---------------------------------------

void criterion_5() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto sc = builtin_scenario("green");
    bool ok = sc.step == 1e-2;
    std::ostringstream os;

    // accumulation ratio on every shrinking box: within 5% of 2 for n >= 10
    double worst_ratio_dev = 0.0;
    for (const auto& V : sc.neighborhoods) {
        const double limit_value = accumulation_at_limit(sc, V).value;
        for (int n = 10; n <= sc.index_last; ++n) {
            const double ratio =
                accumulation_functional(sc, V, n).value / limit_value;
            worst_ratio_dev = std::max(worst_ratio_dev, std::abs(ratio - 2.0));
        }
    }
    ok = ok && worst_ratio_dev <= 0.05 * 2.0;

    // translator search reproduces the worked difference 2n + pi within 1%
    const auto search = search_translators(sc, 2);
    ok = ok && search.found;
    double worst_gap_dev = 1.0;
    if (search.found) {
        worst_gap_dev = 0.0;
        for (int n = 10; n <= sc.index_last; ++n) {
            const GroupElement d = group_sub(search.certificate.translator(1, n),
                                             search.certificate.translator(0, n));
            const double expected = 2.0 * n + kPi;
            worst_gap_dev =
                std::max(worst_gap_dev, std::abs(d.real[0] - expected) / expected);
        }
        ok = ok && worst_gap_dev <= 0.01;
    }

    // trace tail inside [1.8, 2.2]
    const auto spec = build_kernel_spec(sc, sc.neighborhoods[0]);
    double trace_lo = 1e300, trace_hi = 0.0;
    for (int n = 10; n <= sc.index_last; ++n) {
        const double tr = trace_estimate(sc, spec, n).value;
        trace_lo = std::min(trace_lo, tr);
        trace_hi = std::max(trace_hi, tr);
    }
    ok = ok && trace_lo >= 1.8 && trace_hi <= 2.2;

    // full battery: k = 2 certified, k = 3 consistently refuted
    RunConfig cfg;
    const auto report2 = run_equivalence(sc, 2, cfg);
    const auto report3 = run_equivalence(sc, 3, cfg);
    ok = ok && report2.exit_code == 0 && report2.consistency == "consistent";
    ok = ok && report3.exit_code == 2 && report3.consistency == "refuted";
    for (const auto& [name, result] : report2.conditions) {
        (void)name;
        ok = ok && result.status == ConditionStatus::Certified;
    }

    const double elapsed = seconds_since(t0);
    ok = ok && elapsed < 120.0;
    os << "ratio dev " << worst_ratio_dev << ", gap dev " << worst_gap_dev
       << ", trace [" << trace_lo << ", " << trace_hi << "], k2 exit "
       << report2.exit_code << ", k3 exit " << report3.exit_code << ", " << elapsed
       << " s";
    verdict(5, "green flagship battery", ok, os.str());
}

// ---- criterion 6: rank-one limit ----------------------------------------------

void criterion_6() {
    bool ok = true;
    std::ostringstream os;
    for (const auto& name : {"green", "translation"}) {
        const auto sc = builtin_scenario(name);
        const auto spec = build_kernel_spec(sc, sc.neighborhoods[0]);
        const double tr = trace_estimate(sc, spec, -1).value;
        os << name << " " << tr << "; ";
        if (std::abs(tr - 1.0) > 1e-3) ok = false;
    }
    verdict(6, "rank-one trace at the limit", ok, os.str());
}

// ---- criterion 7: dual-twist operator identity ---------------------------------

void criterion_7() {
    const auto sc = builtin_scenario("translation");
    const XPoint x = sc.sequence(3);
    const auto g = [](const XPoint& p) {
        return std::max(0.0, 1.0 - std::abs(p[0]) / 1.5);
    };
    const auto h = [](double r) { return std::max(0.0, 1.0 - std::abs(r)); };
    Character tau{Vec::Constant(1, 0.35), Vec::Zero(0)};
    const double L = 2.0, step = 0.1;
    const auto samples = sample_line_kernel(h, 2.0 * L, step);
    const auto direct = induced_rep_matrix(*sc.action, x, samples, g, &tau, L, step);
    const auto twisted =
        induced_rep_matrix(*sc.action, x, dual_twist(samples, tau), g, nullptr, L, step);

    double max_dev = 0.0;
    const auto m = direct.rows();
    Eigen::VectorXcd xi(m), zeta(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        xi[i] = Complex{std::cos(0.3 * static_cast<double>(i)),
                        std::sin(0.17 * static_cast<double>(i))};
        zeta[i] = Complex{std::sin(0.23 * static_cast<double>(i)),
                          std::cos(0.11 * static_cast<double>(i))};
    }
    max_dev = std::abs(zeta.dot(direct * xi) - zeta.dot(twisted * xi));
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < m; ++j)
            max_dev = std::max(max_dev, std::abs(direct(i, j) - twisted(i, j)));

    std::ostringstream os;
    os << "max deviation " << max_dev;
    verdict(7, "dual-twist operator identity", max_dev <= 1e-6, os.str());
}

// ---- criterion 8: kernel-sum bound ---------------------------------------------

void criterion_8() {
    bool ok = true;
    std::ostringstream os;
    {
        const auto sc = builtin_scenario("green");
        const auto report = upsilon_bound_report(sc, 0.02, 1, 8);
        ok = ok && report.satisfied && !report.surrogate;
        os << "green " << report.max_value << "; ";
    }
    for (const auto& name : {"green_x_winding", "green_x_trivial"}) {
        const auto sc = builtin_scenario(name);
        const SubgroupFamily family = [&sc](int n) {
            return sc.stabilizer_at(sc.sequence(n));
        };
        const auto cert = fell_converges(family, 1, sc.fell_index_last,
                                         sc.limit_stabilizer(), sc.window_radii, 1e-3);
        ok = ok && cert.certified;
        const auto report =
            upsilon_bound_report(sc, 0.02, cert.max_threshold(), 12);
        ok = ok && report.satisfied && report.surrogate;
        os << name << " " << report.max_value << " (threshold "
           << cert.max_threshold() << "); ";
    }
    os << "bound " << 2.0 * 1.02;
    verdict(8, "kernel-sum bound past the Fell threshold", ok, os.str());
}

// ---- criterion 9: byte determinism ---------------------------------------------

void criterion_9(const char* tglab_path) {
    bool ok = true;
    std::ostringstream os;
    const fs::path base = fs::temp_directory_path() / "tglab_acceptance";
    const fs::path dir_a = base / "run_a";
    const fs::path dir_b = base / "run_b";
    fs::remove_all(base);

    if (tglab_path != nullptr) {
        const std::string common =
            " run translation --k 1 --fell-tol 5e-3 --fell-index-last 300 --out ";
        const std::string cmd_a =
            std::string("\"") + tglab_path + "\"" + common + dir_a.string();
        const std::string cmd_b =
            std::string("\"") + tglab_path + "\"" + common + dir_b.string();
        const int rc_a = std::system((cmd_a + " > /dev/null").c_str());
        const int rc_b = std::system((cmd_b + " > /dev/null").c_str());
        ok = ok && rc_a == 0 && rc_b == 0;
        os << "cli exits " << rc_a << "/" << rc_b << ", ";
    } else {
        RunConfig cfg;
        cfg.fell_tol = 5e-3;
        cfg.fell_index_last = 300;
        const auto sc = builtin_scenario("translation");
        for (const auto& dir : {dir_a, dir_b}) {
            cfg.out_dir = dir.string();
            emit_report(run_equivalence(sc, 1, cfg), cfg);
        }
        os << "library emission, ";
    }
    for (const char* file : {"translation_k1.csv", "translation_k1.json"}) {
        const std::string a = read_file((dir_a / file).string());
        const std::string b = read_file((dir_b / file).string());
        if (a.empty() || a != b) ok = false;
        os << file << " " << a.size() << "B ";
    }
    verdict(9, "byte-identical reruns", ok, os.str());
}

// ---- criterion 10: no-contradiction battery -------------------------------------

void criterion_10() {
    bool ok = true;
    int contradictions = 0;
    std::ostringstream os;
    for (const auto& name :
         {"green", "winding", "green_x_winding", "green_x_trivial"}) {
        for (int k : {1, 2, 3}) {
            RunConfig cfg;
            const auto report = run_equivalence(builtin_scenario(name), k, cfg);
            if (report.exit_code == 3) {
                ++contradictions;
                ok = false;
            }
            os << name << ":k" << k << "=" << report.exit_code << " ";
        }
    }
    std::ostringstream head;
    head << contradictions << " contradictions; " << os.str();
    verdict(10, "no-contradiction battery", ok, head.str());
}

}  // namespace

int main(int argc, char** argv) {
    const char* tglab_path = argc > 1 ? argv[1] : nullptr;
    const auto t0 = std::chrono::steady_clock::now();
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9(tglab_path);
    criterion_10();
    std::printf("acceptance: %d failure(s), %.1f s total\n", failures,
                seconds_since(t0));
    return failures == 0 ? 0 : 1;
}
