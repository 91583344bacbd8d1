#ifndef TGLAB_SCENARIO_HPP
#define TGLAB_SCENARIO_HPP

#include "tglab/quotient.hpp"
#include "tglab/subgroup.hpp"

#include <memory>
#include <string>

// Transformation-group scenarios: registered closed-form actions with their
// stability-subgroup oracles, sequences x_n -> z, box neighborhoods of z,
// window exhaustions of G, and the declared analytic facts the equivalence
// battery assumes. Points of X are coordinate vectors; the metric is the
// sup norm.
namespace tglab {

using XPoint = Eigen::VectorXd;

double space_distance(const XPoint& p, const XPoint& q);

// closed box neighborhood in X
struct XBox {
    XPoint center;
    Vec half_widths;

    bool contains(const XPoint& p) const;
    bool contains_hull(const Vec& lo, const Vec& hi) const;
    bool intersects_hull(const Vec& lo, const Vec& hi) const;
    XBox factor(int offset, int dim) const;
    double min_half_width() const { return half_widths.minCoeff(); }
};

// A registered closed-form action of G = R^a (x Z^b) on a space X. Each
// action supplies exact point evaluation, an interval hull of cell images
// for the preimage sweep, and its stability-subgroup oracle.
class Action {
  public:
    virtual ~Action() = default;
    virtual std::string name() const = 0;
    virtual GroupDescriptor group() const = 0;
    virtual int space_dim() const = 0;
    virtual std::string space_name() const = 0;
    virtual bool space_contains(const XPoint& p, double tol) const = 0;
    virtual XPoint apply(const GroupElement& g, const XPoint& x) const = 0;
    // hull box of { g.x : g in cell }
    virtual void image_hull(const GBox& cell, const XPoint& x, Vec& lo, Vec& hi) const = 0;
    virtual ClosedSubgroup stabilizer(const XPoint& x) const = 0;
    // product actions expose their factors so sweeps can factorize
    virtual const Action* factor(int) const { return nullptr; }
    virtual int factor_count() const { return 0; }
};

using ActionPtr = std::shared_ptr<const Action>;

// registry of builtin actions: translation, green, winding, green_x_winding,
// green_x_trivial, torus_flow
ActionPtr make_action(const std::string& name);
std::vector<std::string> registered_actions();

XPoint act(const Action& a, const GroupElement& g, const XPoint& x);
ClosedSubgroup stability_subgroup(const Action& a, const XPoint& x);

struct DeclaredFact {
    std::string fact;
    std::string justification;
};

// well-known fact names used by the harness gates
namespace facts {
inline constexpr const char* kOrbitLocallyClosed = "orbit-locally-closed";
inline constexpr const char* kStabilizerCompact = "stabilizer-compact";
inline constexpr const char* kStabilizersFellConverge = "stabilizers-fell-converge";
inline constexpr const char* kBoundaryMeasureZero = "boundary-measure-zero";
inline constexpr const char* kPreimageRelativelyCompact = "preimage-relatively-compact";
inline constexpr const char* kQuotientPreimageFinite = "quotient-preimage-finite";
}  // namespace facts

struct Scenario {
    std::string name;
    ActionPtr action;
    std::string sequence_id;
    std::function<XPoint(int)> sequence;
    XPoint limit;
    std::vector<XBox> neighborhoods;   // nested decreasing boxes at the limit
    std::vector<double> window_radii;  // nested increasing exhaustion K_m
    int index_first = 1;
    int index_last = 24;
    int fell_index_last = 1500;
    std::vector<DeclaredFact> declared_facts;
    double step = 1e-2;
    double tolerance = 1e-3;
    std::function<double(int)> search_radius;  // sweep window per index; <0 = limit

    bool has_fact(std::string_view fact) const;
    ClosedSubgroup stabilizer_at(const XPoint& x) const { return action->stabilizer(x); }
    ClosedSubgroup limit_stabilizer() const { return action->stabilizer(limit); }
};

// builtin scenarios: green, winding, green_x_winding, green_x_trivial,
// translation, torus_flow
Scenario builtin_scenario(const std::string& name);
std::vector<std::string> builtin_scenario_names();

// JSON scenario files (schema documented in the README)
Scenario load_scenario_json(const std::string& text);
std::string scenario_to_json(const Scenario& sc);

// sampled validation of the action axioms and the stabilizer oracle
struct ScenarioValidation {
    bool ok = true;
    std::vector<std::string> errors;
    double max_identity_defect = 0.0;
    double max_additivity_defect = 0.0;
    double max_stabilizer_motion = 0.0;
};
ScenarioValidation validate_scenario(const Scenario& sc);

// outer/inner interval-sweep approximation of { g in window : g.x in V }
struct PreimageBracket {
    BoxSet outer;
    BoxSet inner;
    double gap() const { return outer.measure() - inner.measure(); }
};

PreimageBracket orbit_preimage(const Action& a, const XPoint& x, const XBox& V,
                               const Window& search_window, double step);

// nu_{x_n}(q_{x_n}(phi_{x_n}^{-1}(V))), outer and inner both reported
struct AccumulationEstimate {
    int index = 0;  // -1 denotes the limit point
    SetMeasureEstimate outer;
    SetMeasureEstimate inner;
    double value = 0.0;       // midpoint of the bracket
    double error_bound = 0.0;  // half bracket width plus measure error
};

AccumulationEstimate accumulation_functional(const Scenario& sc, const XBox& V, int n);
AccumulationEstimate accumulation_at_limit(const Scenario& sc, const XBox& V);

}  // namespace tglab

#endif
