#include "tglab/harness.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace tglab {

using nlohmann::ordered_json;

namespace {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

double tail_min(const std::vector<double>& values, double tail_fraction) {
    if (values.empty()) return 0.0;
    const auto start = static_cast<std::size_t>(
        static_cast<double>(values.size()) * (1.0 - tail_fraction));
    double m = values[std::min(start, values.size() - 1)];
    for (std::size_t i = start; i < values.size(); ++i) m = std::min(m, values[i]);
    return m;
}

Scenario configured_scenario(const Scenario& base, const RunConfig& cfg) {
    Scenario sc = base;
    if (cfg.step > 0.0) sc.step = cfg.step;
    if (!cfg.window_radii.empty()) sc.window_radii = cfg.window_radii;
    if (cfg.index_last > 0) sc.index_last = cfg.index_last;
    if (cfg.fell_index_last > 0) sc.fell_index_last = cfg.fell_index_last;
    return sc;
}

}  // namespace

ordered_json RunConfig::to_json() const {
    ordered_json j;
    j["step"] = step;
    j["fell_tol"] = fell_tol;
    j["window_radii"] = window_radii;
    j["index_last"] = index_last;
    j["fell_index_last"] = fell_index_last;
    j["epsilon"] = epsilon;
    j["delta"] = delta;
    j["ratio_tol"] = ratio_tol;
    j["tail_fraction"] = tail_fraction;
    return j;
}

std::string to_string(ConditionStatus s) {
    switch (s) {
        case ConditionStatus::Certified: return "certified";
        case ConditionStatus::Refuted: return "refuted";
        case ConditionStatus::Inconclusive: return "inconclusive";
        case ConditionStatus::NotApplicable: return "not-applicable";
    }
    return "inconclusive";
}

ConditionStatus condition_status_from_string(const std::string& s) {
    if (s == "certified") return ConditionStatus::Certified;
    if (s == "refuted") return ConditionStatus::Refuted;
    if (s == "not-applicable") return ConditionStatus::NotApplicable;
    return ConditionStatus::Inconclusive;
}

const ConditionResult* EquivalenceReport::condition(const std::string& key) const {
    for (const auto& [name, result] : conditions)
        if (name == key) return &result;
    return nullptr;
}

EquivalenceReport run_equivalence(const Scenario& base, int k, const RunConfig& cfg) {
    if (k < 1) throw std::invalid_argument("k must be positive");
    if (cfg.step < 0.0 || cfg.fell_tol <= 0.0 || cfg.epsilon <= 0.0 ||
        cfg.ratio_tol <= 0.0 || cfg.tail_fraction <= 0.0 || cfg.tail_fraction > 1.0)
        throw std::invalid_argument("run configuration values must be positive");
    const Scenario sc = configured_scenario(base, cfg);

    // hypothesis gates: the battery refuses to run without the declared facts
    std::vector<std::string> missing;
    for (const char* fact : {facts::kOrbitLocallyClosed, facts::kStabilizersFellConverge})
        if (!sc.has_fact(fact)) missing.push_back(fact);
    if (!(sc.has_fact(facts::kPreimageRelativelyCompact) ||
          sc.has_fact(facts::kQuotientPreimageFinite)))
        missing.push_back(facts::kPreimageRelativelyCompact);
    if (!missing.empty()) {
        std::string what = "missing declared facts:";
        for (const auto& f : missing) what += " " + f;
        throw std::invalid_argument(what);
    }

    EquivalenceReport report;
    report.scenario = sc.name;
    report.k = k;
    report.config = cfg.to_json();
    report.config["scenario_step"] = sc.step;
    report.config["scenario_windows"] = sc.window_radii;
    report.config["index_first"] = sc.index_first;
    report.config["scenario_index_last"] = sc.index_last;
    report.fingerprint =
        [&] {
            std::ostringstream os;
            os << std::hex << fnv1a(report.config.dump() + scenario_to_json(sc));
            return os.str();
        }();

    // certified stabilizer convergence (hypothesis of every condition)
    const ClosedSubgroup Sz = sc.limit_stabilizer();
    const SubgroupFamily family = [&sc](int n) {
        return sc.stabilizer_at(sc.sequence(n));
    };
    const auto fell = fell_converges(family, sc.index_first, sc.fell_index_last, Sz,
                                     sc.window_radii, cfg.fell_tol);
    if (!fell.certified)
        throw std::runtime_error(
            "stabilizer family failed Fell certification; the battery's "
            "hypotheses do not hold on this configuration");

    ordered_json fell_evidence;
    fell_evidence["tolerance"] = fell.tolerance;
    fell_evidence["index_last"] = fell.index_last;
    fell_evidence["max_threshold"] = fell.max_threshold();

    // ---- condition (1): k-times convergence by translator search ------------
    const auto search = search_translators(sc, k);
    {
        ConditionResult r;
        r.status = search.found ? ConditionStatus::Certified : ConditionStatus::Refuted;
        ordered_json ev;
        ev["found"] = search.found;
        ev["stage_start"] = search.stage_start;
        if (!search.failure_reason.empty()) ev["failure_reason"] = search.failure_reason;
        if (search.found) {
            ev["statement"] = search.verdict.statement();
            ev["conv_tolerance"] = search.verdict.conv_tolerance;
            ev["tail_distance"] = search.verdict.tail_distance;
            ordered_json escapes = ordered_json::array();
            for (const auto& pair : search.certificate.escape_table) {
                ordered_json p;
                p["i"] = pair.i + 1;
                p["j"] = pair.j + 1;
                p["thresholds"] = pair.thresholds;
                escapes.push_back(p);
            }
            ev["escape_table"] = escapes;
            // translator gap samples for the report series
            for (int n = sc.index_first; n <= sc.index_last; ++n) {
                if (k < 2) break;
                const GroupElement d = group_sub(search.certificate.translator(1, n),
                                                 search.certificate.translator(0, n));
                report.series.push_back({n, "translator_gap", norm_two(d), sc.step});
            }
        } else {
            ordered_json trace = ordered_json::array();
            for (const auto& row : search.trace) {
                ordered_json t;
                t["stage"] = row.stage;
                t["n"] = row.n;
                t["measure_lhs"] = row.measure_lhs;
                t["measure_rhs"] = row.measure_rhs;
                t["excised_lhs"] = row.excised_lhs;
                t["excised_rhs"] = row.excised_rhs;
                t["ok"] = row.ok;
                trace.push_back(t);
            }
            ev["inequality_trace"] = trace;
        }
        ev["fell"] = fell_evidence;
        r.evidence = std::move(ev);
        report.conditions.emplace_back("k_times", std::move(r));
    }

    // ---- accumulation ratios across the neighborhood list -------------------
    std::vector<std::vector<double>> ratios(sc.neighborhoods.size());
    std::vector<double> liminfs(sc.neighborhoods.size());
    std::vector<double> limit_values(sc.neighborhoods.size());
    for (std::size_t v = 0; v < sc.neighborhoods.size(); ++v) {
        const XBox& V = sc.neighborhoods[v];
        const auto at_limit = accumulation_at_limit(sc, V);
        limit_values[v] = at_limit.value;
        const std::string tag = "_V" + std::to_string(v);
        report.series.push_back(
            {-1, "nu_z" + tag, at_limit.value, at_limit.error_bound});
        for (int n = sc.index_first; n <= sc.index_last; ++n) {
            const auto est = accumulation_functional(sc, V, n);
            const double ratio = est.value / at_limit.value;
            ratios[v].push_back(ratio);
            report.series.push_back({n, "nu_xn" + tag, est.value, est.error_bound});
            report.series.push_back(
                {n, "nu_ratio" + tag, ratio,
                 est.error_bound / std::max(at_limit.value, 1e-12)});
        }
        liminfs[v] = tail_min(ratios[v], cfg.tail_fraction);
    }
    const double min_liminf = *std::min_element(liminfs.begin(), liminfs.end());

    const auto ratio_evidence = [&] {
        ordered_json ev;
        ev["liminf_per_neighborhood"] = liminfs;
        ev["limit_values"] = limit_values;
        ev["tail_fraction"] = cfg.tail_fraction;
        ev["tail_start_index"] =
            sc.index_first +
            static_cast<int>(static_cast<double>(sc.index_last - sc.index_first + 1) *
                             (1.0 - cfg.tail_fraction));
        return ev;
    }();

    // ---- condition (5): liminf ratios at least k ----------------------------
    {
        ConditionResult r;
        const double threshold = static_cast<double>(k) * (1.0 - cfg.ratio_tol);
        r.status = min_liminf >= threshold ? ConditionStatus::Certified
                                           : ConditionStatus::Refuted;
        r.evidence = ratio_evidence;
        r.evidence["threshold"] = threshold;
        report.conditions.emplace_back("liminf_ge_k", std::move(r));
    }

    // ---- condition (6): some R above k-1 works for every neighborhood -------
    {
        ConditionResult r;
        const double threshold = static_cast<double>(k - 1) * (1.0 + cfg.ratio_tol) +
                                 (k == 1 ? cfg.ratio_tol : 0.0);
        r.status = min_liminf > threshold ? ConditionStatus::Certified
                                          : ConditionStatus::Refuted;
        r.evidence = ratio_evidence;
        r.evidence["witness_R"] = min_liminf;
        r.evidence["threshold"] = threshold;
        report.conditions.emplace_back("liminf_ge_R", std::move(r));
    }

    // ---- condition (7): strict inequality on the nested neighborhoods -------
    {
        ConditionResult r;
        const double threshold = static_cast<double>(k - 1) * (1.0 + cfg.ratio_tol) +
                                 (k == 1 ? cfg.ratio_tol : 0.0);
        bool all = true;
        for (double li : liminfs) all = all && li > threshold;
        r.status = all ? ConditionStatus::Certified : ConditionStatus::Refuted;
        r.evidence = ratio_evidence;
        r.evidence["threshold"] = threshold;
        report.conditions.emplace_back("strict_nested", std::move(r));
    }

    // ---- trace sandwich ------------------------------------------------------
    bool sandwich_fault = false;
    {
        ConditionResult r;
        ordered_json ev;
        const bool admitted = sc.has_fact(facts::kStabilizerCompact) &&
                              sc.has_fact(facts::kPreimageRelativelyCompact) &&
                              sc.limit_stabilizer().is_trivial();
        std::vector<double> traces;
        double trace_limit = 0.0;
        if (admitted) {
            const KernelSpec spec = build_kernel_spec(sc, sc.neighborhoods.front());
            trace_limit = trace_estimate(sc, spec, -1).value;
            report.series.push_back({-1, "trace", trace_limit, spec.norm_defect});
            const int tail_start =
                sc.index_first +
                static_cast<int>(static_cast<double>(sc.index_last - sc.index_first + 1) *
                                 (1.0 - cfg.tail_fraction));
            for (int n = tail_start; n <= sc.index_last; ++n) {
                const auto est = trace_estimate(sc, spec, n);
                traces.push_back(est.value);
                report.series.push_back({n, "trace", est.value, est.error_bound});
            }
            const auto upsilon = upsilon_bound_report(sc, cfg.epsilon,
                                                      fell.max_threshold(), 8);
            report.series.push_back(
                {upsilon.last_index, "upsilon_max", upsilon.max_value, 0.0});
            ev["upsilon_max"] = upsilon.max_value;
            ev["upsilon_bound"] = upsilon.bound;
            ev["upsilon_surrogate"] = upsilon.surrogate;
            if (!upsilon.satisfied) sandwich_fault = true;
        } else {
            ev["reason"] = "limit stabilizer is not compact; trace battery skipped";
            // the kernel-sum surrogate still runs where stabilizers are discrete
            const auto upsilon = upsilon_bound_report(sc, cfg.epsilon,
                                                      fell.max_threshold(), 8);
            ev["upsilon_max"] = upsilon.max_value;
            ev["upsilon_bound"] = upsilon.bound;
            ev["upsilon_surrogate"] = upsilon.surrogate;
            report.series.push_back(
                {upsilon.last_index, "upsilon_max", upsilon.max_value, 0.0});
            if (!upsilon.satisfied) sandwich_fault = true;
        }

        const auto sandwich = multiplicity_report(
            sc, k, min_liminf, ratios.back(), sc.index_first, traces, trace_limit,
            admitted, cfg.ratio_tol);
        ev["measured_M"] = sandwich.measured_M;
        ev["snapped_M"] = sandwich.snapped_M;
        ev["floor_M"] = sandwich.floor_M;
        ev["floor_M_squared"] = sandwich.floor_M_squared;
        ev["lower_evidence"] = sandwich.lower_evidence;
        ev["trace_at_limit"] = sandwich.trace_at_limit;
        ev["frequency_set_size"] = sandwich.frequency_set.size();
        ev["verdict"] = sandwich.verdict;
        if (sandwich.sandwich_fault) sandwich_fault = true;
        if (sandwich.verdict == "consistent")
            r.status = ConditionStatus::Certified;
        else if (sandwich.verdict == "refuted")
            r.status = ConditionStatus::Refuted;
        else if (sandwich.verdict == "not-applicable")
            r.status = ConditionStatus::NotApplicable;
        else
            r.status = ConditionStatus::Inconclusive;
        r.evidence = std::move(ev);
        report.conditions.emplace_back("trace_sandwich", std::move(r));
    }

    // ---- cross-consistency -----------------------------------------------------
    bool any_certified = false, any_refuted = false;
    for (const auto& [name, result] : report.conditions) {
        (void)name;
        if (result.status == ConditionStatus::Certified) any_certified = true;
        if (result.status == ConditionStatus::Refuted) any_refuted = true;
    }
    if (sandwich_fault || (any_certified && any_refuted)) {
        report.consistency = "contradiction";
        report.exit_code = 3;
    } else if (any_refuted) {
        report.consistency = "refuted";
        report.exit_code = 2;
    } else {
        report.consistency = "consistent";
        report.exit_code = 0;
    }

    for (const auto& [name, result] : report.conditions)
        if (result.status == ConditionStatus::Certified && result.evidence.empty())
            throw std::logic_error("certified condition without evidence: " + name);

    // deterministic series order: quantity, then index
    std::stable_sort(report.series.begin(), report.series.end(),
                     [](const EquivalenceReport::Row& a, const EquivalenceReport::Row& b) {
                         if (a.quantity != b.quantity) return a.quantity < b.quantity;
                         return a.n < b.n;
                     });
    return report;
}

std::string report_csv(const EquivalenceReport& r) {
    std::ostringstream os;
    os << "scenario,n,quantity,value,error_bound\n";
    for (const auto& row : r.series) {
        os << r.scenario << ',' << row.n << ',' << row.quantity << ','
           << format_double(row.value) << ',' << format_double(row.error_bound) << '\n';
    }
    return os.str();
}

std::string report_json(const EquivalenceReport& r) {
    ordered_json j;
    j["scenario"] = r.scenario;
    j["k"] = r.k;
    j["config"] = r.config;
    j["fingerprint"] = r.fingerprint;
    ordered_json conditions;
    for (const auto& [name, result] : r.conditions) {
        ordered_json c;
        c["status"] = to_string(result.status);
        c["evidence"] = result.evidence;
        conditions[name] = c;
    }
    j["conditions"] = conditions;
    j["consistency"] = r.consistency;
    j["exit_code"] = r.exit_code;
    ordered_json series = ordered_json::array();
    for (const auto& row : r.series) {
        ordered_json s;
        s["n"] = row.n;
        s["quantity"] = row.quantity;
        s["value"] = row.value;
        s["error_bound"] = row.error_bound;
        series.push_back(s);
    }
    j["series"] = series;
    return j.dump(2) + "\n";
}

EquivalenceReport report_from_json(const std::string& text) {
    const ordered_json j = ordered_json::parse(text);
    EquivalenceReport r;
    r.scenario = j.at("scenario").get<std::string>();
    r.k = j.at("k").get<int>();
    r.config = j.at("config");
    r.fingerprint = j.at("fingerprint").get<std::string>();
    for (const auto& [name, c] : j.at("conditions").items()) {
        ConditionResult result;
        result.status = condition_status_from_string(c.at("status").get<std::string>());
        result.evidence = c.at("evidence");
        r.conditions.emplace_back(name, std::move(result));
    }
    r.consistency = j.at("consistency").get<std::string>();
    r.exit_code = j.at("exit_code").get<int>();
    for (const auto& s : j.at("series")) {
        EquivalenceReport::Row row;
        row.n = s.at("n").get<int>();
        row.quantity = s.at("quantity").get<std::string>();
        row.value = s.at("value").get<double>();
        row.error_bound = s.at("error_bound").get<double>();
        r.series.push_back(std::move(row));
    }
    return r;
}

std::vector<std::string> emit_report(const EquivalenceReport& r, const RunConfig& cfg) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);
    std::vector<std::string> paths;
    const std::string stem =
        (fs::path(cfg.out_dir) / (r.scenario + "_k" + std::to_string(r.k))).string();
    if (cfg.emit_csv) {
        const std::string path = stem + ".csv";
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + path);
        out << report_csv(r);
        paths.push_back(path);
    }
    if (cfg.emit_json) {
        const std::string path = stem + ".json";
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + path);
        out << report_json(r);
        paths.push_back(path);
    }
    return paths;
}

}  // namespace tglab
