#ifndef TGLAB_HARNESS_HPP
#define TGLAB_HARNESS_HPP

#include "tglab/convergence.hpp"
#include "tglab/induced.hpp"

#include "json.hpp"

#include <string>
#include <utility>
#include <vector>

// Scenario runs: the equivalence battery over the configured index range,
// cross-consistency verdicts, and byte-stable CSV/JSON report emission.
namespace tglab {

struct RunConfig {
    double step = 0.0;        // 0 = scenario default
    double fell_tol = 1e-3;
    std::vector<double> window_radii;  // empty = scenario default
    int index_last = 0;       // 0 = scenario default
    int fell_index_last = 0;  // 0 = scenario default
    double epsilon = 0.02;    // kernel-sum budget
    double delta = 0.05;      // neighborhood padding budget
    double ratio_tol = 0.05;  // margin for ratio thresholds and integer snapping
    double tail_fraction = 0.5;
    std::string out_dir = ".";
    bool emit_csv = true;
    bool emit_json = true;

    nlohmann::ordered_json to_json() const;
};

enum class ConditionStatus { Certified, Refuted, Inconclusive, NotApplicable };

std::string to_string(ConditionStatus s);
ConditionStatus condition_status_from_string(const std::string& s);

struct ConditionResult {
    ConditionStatus status = ConditionStatus::Inconclusive;
    nlohmann::ordered_json evidence;  // never empty for a certified condition
};

struct EquivalenceReport {
    std::string scenario;
    int k = 1;
    nlohmann::ordered_json config;
    std::string fingerprint;
    // fixed order: k_times, liminf_ge_k, liminf_ge_R, strict_nested, trace_sandwich
    std::vector<std::pair<std::string, ConditionResult>> conditions;
    std::string consistency;  // consistent | refuted | contradiction
    int exit_code = 0;        // 0 | 2 | 3

    struct Row {
        int n = 0;  // -1 denotes the limit point
        std::string quantity;
        double value = 0.0;
        double error_bound = 0.0;
    };
    std::vector<Row> series;

    const ConditionResult* condition(const std::string& key) const;
};

// the equivalence battery; throws on missing declared facts
EquivalenceReport run_equivalence(const Scenario& sc, int k, const RunConfig& cfg);

// byte-stable serializations (identical config => identical bytes)
std::string report_csv(const EquivalenceReport& r);
std::string report_json(const EquivalenceReport& r);
EquivalenceReport report_from_json(const std::string& text);

// writes <out_dir>/<scenario>_k<k>.{csv,json} per the config; returns paths
std::vector<std::string> emit_report(const EquivalenceReport& r, const RunConfig& cfg);

}  // namespace tglab

#endif
