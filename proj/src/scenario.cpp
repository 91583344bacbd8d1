#include "tglab/scenario.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace tglab {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;
}

double space_distance(const XPoint& p, const XPoint& q) {
    return (p - q).lpNorm<Eigen::Infinity>();
}

bool XBox::contains(const XPoint& p) const {
    return ((p - center).cwiseAbs().array() <= half_widths.array() + 1e-15).all();
}

bool XBox::contains_hull(const Vec& lo, const Vec& hi) const {
    for (Eigen::Index i = 0; i < center.size(); ++i) {
        if (lo[i] < center[i] - half_widths[i] - 1e-15) return false;
        if (hi[i] > center[i] + half_widths[i] + 1e-15) return false;
    }
    return true;
}

bool XBox::intersects_hull(const Vec& lo, const Vec& hi) const {
    for (Eigen::Index i = 0; i < center.size(); ++i) {
        if (hi[i] < center[i] - half_widths[i]) return false;
        if (lo[i] > center[i] + half_widths[i]) return false;
    }
    return true;
}

XBox XBox::factor(int offset, int dim) const {
    return {center.segment(offset, dim), half_widths.segment(offset, dim)};
}

// ---- Green's transformation group ------------------------------------------

namespace green {

// orbit 0 is the limit orbit {(0, t, 0)}; orbit n >= 1 is the orbit of
// y_n = (2^-2n, 0, 0)
XPoint encode(int orbit, double s) {
    XPoint p(3);
    if (orbit == 0) {
        p << 0.0, s, 0.0;
        return p;
    }
    const double x1 = std::ldexp(1.0, -2 * orbit);      // 2^-2n
    const double x2 = std::ldexp(1.0, -2 * orbit - 1);  // 2^-(2n+1)
    const double n = static_cast<double>(orbit);
    if (s <= n) {
        p << x1, s, 0.0;
    } else if (s < n + kPi) {
        const double theta = s - n;
        p << x1 - (theta / kPi) * x2, n * std::cos(theta), n * std::sin(theta);
    } else {
        p << x2, s - kPi - 2.0 * n, 0.0;
    }
    return p;
}

struct Coord {
    int orbit = 0;
    double param = 0.0;
};

std::optional<Coord> decode(const XPoint& p, double tol) {
    const double x = p[0], y = p[1], zc = p[2];
    if (zc > tol) {  // helix: the arc lives in the half-space z > 0
        const double r = std::hypot(y, zc);
        const auto n = std::llround(r);
        if (n < 1 || std::abs(r - static_cast<double>(n)) > tol * (1.0 + r))
            return std::nullopt;
        const double theta = std::atan2(zc, y);
        if (theta <= 0.0 || theta >= kPi) return std::nullopt;
        const double expected =
            std::ldexp(1.0 - theta / kTwoPi, -2 * static_cast<int>(n));
        if (std::abs(x - expected) > tol * std::max(1.0, std::abs(expected)))
            return std::nullopt;
        return Coord{static_cast<int>(n), static_cast<double>(n) + theta};
    }
    if (zc < -tol) return std::nullopt;
    if (std::abs(x) <= 1e-280) return Coord{0, y};
    if (x < 0.0) return std::nullopt;
    const auto m = std::llround(-std::log2(x));
    if (m < 2) return std::nullopt;
    if (std::abs(x * std::ldexp(1.0, static_cast<int>(m)) - 1.0) > 1e-9)
        return std::nullopt;
    if (m % 2 == 0) {
        const int n = static_cast<int>(m / 2);
        if (y > static_cast<double>(n) + tol) return std::nullopt;
        return Coord{n, std::min(y, static_cast<double>(n))};
    }
    const int n = static_cast<int>((m - 1) / 2);
    if (n < 1) return std::nullopt;
    if (y < -static_cast<double>(n) - tol) return std::nullopt;
    return Coord{n, y + kPi + 2.0 * static_cast<double>(n)};
}

// hull of { s . y_orbit : s in [a, b] }
void hull(int orbit, double a, double b, Vec& lo, Vec& hi) {
    lo = Vec::Constant(3, 1e300);
    hi = Vec::Constant(3, -1e300);
    const auto extend = [&](double x, double y, double z) {
        lo[0] = std::min(lo[0], x);
        hi[0] = std::max(hi[0], x);
        lo[1] = std::min(lo[1], y);
        hi[1] = std::max(hi[1], y);
        lo[2] = std::min(lo[2], z);
        hi[2] = std::max(hi[2], z);
    };
    if (orbit == 0) {
        extend(0.0, a, 0.0);
        extend(0.0, b, 0.0);
        return;
    }
    const double n = static_cast<double>(orbit);
    const double x1 = std::ldexp(1.0, -2 * orbit);
    const double x2 = std::ldexp(1.0, -2 * orbit - 1);
    if (a < n) {  // first vertical line
        extend(x1, a, 0.0);
        extend(x1, std::min(b, n), 0.0);
    }
    if (b > n && a < n + kPi) {  // helix arc, theta in (0, pi)
        const double t0 = std::max(a, n) - n, t1 = std::min(b, n + kPi) - n;
        const double xa = x1 - (t0 / kPi) * x2, xb = x1 - (t1 / kPi) * x2;
        extend(xa, n * std::cos(t0), n * std::sin(t0));
        extend(xb, n * std::cos(t1), n * std::sin(t1));
        if (t0 <= 0.5 * kPi && 0.5 * kPi <= t1) hi[2] = std::max(hi[2], n);
    }
    if (b >= n + kPi) {  // second vertical line
        extend(x2, std::max(a, n + kPi) - kPi - 2.0 * n, 0.0);
        extend(x2, b - kPi - 2.0 * n, 0.0);
    }
}

}  // namespace green

// ---- circle-arc hulls (winding and torus actions) ---------------------------

namespace arc {

double cos_max(double a0, double a1) {
    if (a1 - a0 >= kTwoPi) return 1.0;
    const double k = std::ceil(a0 / kTwoPi);
    if (kTwoPi * k <= a1) return 1.0;
    return std::max(std::cos(a0), std::cos(a1));
}
double cos_min(double a0, double a1) {
    if (a1 - a0 >= kTwoPi) return -1.0;
    const double k = std::ceil((a0 - kPi) / kTwoPi);
    if (kPi + kTwoPi * k <= a1) return -1.0;
    return std::min(std::cos(a0), std::cos(a1));
}
double sin_max(double a0, double a1) { return cos_max(a0 - 0.5 * kPi, a1 - 0.5 * kPi); }
double sin_min(double a0, double a1) { return cos_min(a0 - 0.5 * kPi, a1 - 0.5 * kPi); }

// hull of the rotation orbit piece of (px, py) for parameters in [s0, s1]
void hull(double px, double py, double rate, double s0, double s1, double* lo,
          double* hi) {
    const double radius = std::hypot(px, py);
    if (radius <= 0.0) {
        lo[0] = hi[0] = 0.0;
        lo[1] = hi[1] = 0.0;
        return;
    }
    const double base = std::atan2(py, px);
    const double a0 = base + rate * s0, a1 = base + rate * s1;
    const double b0 = std::min(a0, a1), b1 = std::max(a0, a1);
    lo[0] = radius * cos_min(b0, b1);
    hi[0] = radius * cos_max(b0, b1);
    lo[1] = radius * sin_min(b0, b1);
    hi[1] = radius * sin_max(b0, b1);
}

}  // namespace arc

// ---- registered actions ------------------------------------------------------

namespace {

const GroupDescriptor kRLine{1, 0};
const GroupDescriptor kRPlane{2, 0};

class TranslationAction final : public Action {
  public:
    std::string name() const override { return "translation"; }
    GroupDescriptor group() const override { return kRLine; }
    int space_dim() const override { return 1; }
    std::string space_name() const override { return "euclidean(1)"; }
    bool space_contains(const XPoint&, double) const override { return true; }
    XPoint apply(const GroupElement& g, const XPoint& x) const override {
        XPoint p(1);
        p[0] = x[0] + g.real[0];
        return p;
    }
    void image_hull(const GBox& cell, const XPoint& x, Vec& lo, Vec& hi) const override {
        lo = Vec::Constant(1, x[0] + cell.lo[0]);
        hi = Vec::Constant(1, x[0] + cell.hi[0]);
    }
    ClosedSubgroup stabilizer(const XPoint&) const override {
        return trivial_subgroup(kRLine);
    }
};

class GreenAction final : public Action {
  public:
    std::string name() const override { return "green"; }
    GroupDescriptor group() const override { return kRLine; }
    int space_dim() const override { return 3; }
    std::string space_name() const override { return "green-Y"; }
    bool space_contains(const XPoint& p, double tol) const override {
        return green::decode(p, tol).has_value();
    }
    XPoint apply(const GroupElement& g, const XPoint& x) const override {
        const auto c = green::decode(x, 1e-9);
        if (!c) throw std::invalid_argument("point is not on the green space");
        return green::encode(c->orbit, c->param + g.real[0]);
    }
    void image_hull(const GBox& cell, const XPoint& x, Vec& lo, Vec& hi) const override {
        const auto c = green::decode(x, 1e-9);
        if (!c) throw std::invalid_argument("point is not on the green space");
        green::hull(c->orbit, c->param + cell.lo[0], c->param + cell.hi[0], lo, hi);
    }
    ClosedSubgroup stabilizer(const XPoint&) const override {
        return trivial_subgroup(kRLine);  // the action is free
    }
};

class WindingAction final : public Action {
  public:
    std::string name() const override { return "winding"; }
    GroupDescriptor group() const override { return kRLine; }
    int space_dim() const override { return 2; }
    std::string space_name() const override { return "complex-plane"; }
    bool space_contains(const XPoint&, double) const override { return true; }
    XPoint apply(const GroupElement& g, const XPoint& x) const override {
        const double radius = std::hypot(x[0], x[1]);
        XPoint p(2);
        if (radius <= 0.0) {
            p << 0.0, 0.0;
            return p;
        }
        const double angle = kTwoPi * g.real[0] / radius;
        const double c = std::cos(angle), s = std::sin(angle);
        p << c * x[0] - s * x[1], s * x[0] + c * x[1];
        return p;
    }
    void image_hull(const GBox& cell, const XPoint& x, Vec& lo, Vec& hi) const override {
        lo.resize(2);
        hi.resize(2);
        const double radius = std::hypot(x[0], x[1]);
        const double rate = radius > 0.0 ? kTwoPi / radius : 0.0;
        arc::hull(x[0], x[1], rate, cell.lo[0], cell.hi[0], lo.data(), hi.data());
    }
    ClosedSubgroup stabilizer(const XPoint& x) const override {
        const double radius = std::hypot(x[0], x[1]);
        if (radius <= 0.0) return real_axis_line(kRLine, 0);
        return real_axis_lattice(kRLine, 0, radius);
    }
};

class GreenWindingAction final : public Action {
  public:
    GreenWindingAction()
        : green_(std::make_shared<GreenAction>()),
          winding_(std::make_shared<WindingAction>()) {}
    std::string name() const override { return "green_x_winding"; }
    GroupDescriptor group() const override { return kRPlane; }
    int space_dim() const override { return 5; }
    std::string space_name() const override { return "product(green-Y, complex-plane)"; }
    bool space_contains(const XPoint& p, double tol) const override {
        return green_->space_contains(p.head(3), tol);
    }
    XPoint apply(const GroupElement& g, const XPoint& x) const override {
        GroupElement s = zero_element(kRLine), r = zero_element(kRLine);
        s.real[0] = g.real[0];
        r.real[0] = g.real[1];
        XPoint p(5);
        p.head(3) = green_->apply(s, x.head(3));
        p.tail(2) = winding_->apply(r, x.tail(2));
        return p;
    }
    void image_hull(const GBox& cell, const XPoint& x, Vec& lo, Vec& hi) const override {
        lo.resize(5);
        hi.resize(5);
        Vec l1, h1, l2, h2;
        const GBox c1 = GBox::interval(cell.lo[0], cell.hi[0]);
        const GBox c2 = GBox::interval(cell.lo[1], cell.hi[1]);
        green_->image_hull(c1, x.head(3), l1, h1);
        winding_->image_hull(c2, x.tail(2), l2, h2);
        lo << l1, l2;
        hi << h1, h2;
    }
    ClosedSubgroup stabilizer(const XPoint& x) const override {
        const double radius = std::hypot(x[3], x[4]);
        if (radius <= 0.0) return real_axis_line(kRPlane, 1);  // {0} x R
        GroupElement gen = zero_element(kRPlane);
        gen.real[1] = radius;
        return make_subgroup(kRPlane, {}, {gen});  // {0} x |w|Z
    }
    const Action* factor(int i) const override {
        return i == 0 ? static_cast<const Action*>(green_.get())
                      : static_cast<const Action*>(winding_.get());
    }
    int factor_count() const override { return 2; }

  private:
    std::shared_ptr<GreenAction> green_;
    std::shared_ptr<WindingAction> winding_;
};

class GreenTrivialAction final : public Action {
  public:
    GreenTrivialAction() : green_(std::make_shared<GreenAction>()) {}
    std::string name() const override { return "green_x_trivial"; }
    GroupDescriptor group() const override { return kRPlane; }
    int space_dim() const override { return 3; }
    std::string space_name() const override { return "green-Y"; }
    bool space_contains(const XPoint& p, double tol) const override {
        return green_->space_contains(p, tol);
    }
    XPoint apply(const GroupElement& g, const XPoint& x) const override {
        GroupElement s = zero_element(kRLine);
        s.real[0] = g.real[0];
        return green_->apply(s, x);  // the second coordinate acts trivially
    }
    void image_hull(const GBox& cell, const XPoint& x, Vec& lo, Vec& hi) const override {
        const GBox c1 = GBox::interval(cell.lo[0], cell.hi[0]);
        green_->image_hull(c1, x, lo, hi);
    }
    ClosedSubgroup stabilizer(const XPoint&) const override {
        return real_axis_line(kRPlane, 1);  // {0} x R, constant
    }
    const Action* factor(int i) const override {
        return i == 0 ? green_.get() : nullptr;  // factor 1 acts trivially
    }
    int factor_count() const override { return 2; }

  private:
    std::shared_ptr<GreenAction> green_;
};

// irrational two-frequency flow on the torus: diagnostic fixture with dense
// orbits, never part of the equivalence battery
class TorusFlowAction final : public Action {
  public:
    std::string name() const override { return "torus_flow"; }
    GroupDescriptor group() const override { return kRLine; }
    int space_dim() const override { return 4; }
    std::string space_name() const override { return "torus2"; }
    bool space_contains(const XPoint& p, double tol) const override {
        return std::abs(std::hypot(p[0], p[1]) - 1.0) <= tol + 1e-9 &&
               std::abs(std::hypot(p[2], p[3]) - 1.0) <= tol + 1e-9;
    }
    XPoint apply(const GroupElement& g, const XPoint& x) const override {
        XPoint p(4);
        const double a = kTwoPi * g.real[0];
        const double b = kTwoPi * kTheta * g.real[0];
        p[0] = std::cos(a) * x[0] - std::sin(a) * x[1];
        p[1] = std::sin(a) * x[0] + std::cos(a) * x[1];
        p[2] = std::cos(b) * x[2] - std::sin(b) * x[3];
        p[3] = std::sin(b) * x[2] + std::cos(b) * x[3];
        return p;
    }
    void image_hull(const GBox& cell, const XPoint& x, Vec& lo, Vec& hi) const override {
        lo.resize(4);
        hi.resize(4);
        arc::hull(x[0], x[1], kTwoPi, cell.lo[0], cell.hi[0], lo.data(), hi.data());
        arc::hull(x[2], x[3], kTwoPi * kTheta, cell.lo[0], cell.hi[0], lo.data() + 2,
                  hi.data() + 2);
    }
    ClosedSubgroup stabilizer(const XPoint&) const override {
        return trivial_subgroup(kRLine);  // irrational slope: no nonzero return time
    }

  private:
    static constexpr double kTheta = 0.61803398874989484820;
};

}  // namespace

ActionPtr make_action(const std::string& name) {
    if (name == "translation") return std::make_shared<TranslationAction>();
    if (name == "green") return std::make_shared<GreenAction>();
    if (name == "winding") return std::make_shared<WindingAction>();
    if (name == "green_x_winding") return std::make_shared<GreenWindingAction>();
    if (name == "green_x_trivial") return std::make_shared<GreenTrivialAction>();
    if (name == "torus_flow") return std::make_shared<TorusFlowAction>();
    throw std::invalid_argument("unknown action: " + name);
}

std::vector<std::string> registered_actions() {
    return {"translation", "green",           "winding",
            "green_x_winding", "green_x_trivial", "torus_flow"};
}

XPoint act(const Action& a, const GroupElement& g, const XPoint& x) {
    if (!a.space_contains(x, 1e-7))
        throw std::invalid_argument("point is outside the action's space");
    return a.apply(g, x);
}

ClosedSubgroup stability_subgroup(const Action& a, const XPoint& x) {
    if (!a.space_contains(x, 1e-7))
        throw std::invalid_argument("point is outside the action's space");
    return a.stabilizer(x);
}

bool Scenario::has_fact(std::string_view fact) const {
    for (const auto& f : declared_facts)
        if (f.fact == fact) return true;
    return false;
}

// ---- builtin sequences and scenarios ----------------------------------------

namespace {

XPoint winding_point(int n) {
    XPoint p(2);
    p << 1.0 / (static_cast<double>(n) + 0.5), 0.0;
    return p;
}

std::function<XPoint(int)> make_sequence(const std::string& id, const XPoint& limit) {
    if (id == "green-orbit-reps")
        return [](int n) { return green::encode(n, 0.0); };
    if (id == "winding-shrink")
        return [](int n) { return winding_point(n); };
    if (id == "product-green-winding")
        return [](int n) {
            XPoint p(5);
            p.head(3) = green::encode(n, 0.0);
            p.tail(2) = winding_point(n);
            return p;
        };
    if (id == "reciprocal")
        return [](int n) {
            XPoint p(1);
            p << 1.0 / static_cast<double>(n);
            return p;
        };
    if (id == "constant-limit")
        return [limit](int) { return limit; };
    throw std::invalid_argument("unknown sequence: " + id);
}

std::function<double(int)> make_search_radius(const std::string& action_name,
                                              double max_half_width) {
    if (action_name == "green" || action_name == "green_x_winding" ||
        action_name == "green_x_trivial") {
        return [max_half_width](int n) {
            if (n < 0) return max_half_width + 2.0;
            return 2.0 * static_cast<double>(n) + kPi + max_half_width + 2.0;
        };
    }
    if (action_name == "winding") return [](int) { return 3.0; };
    if (action_name == "translation") return [](int) { return 4.0; };
    return [](int) { return 8.0; };
}

std::vector<XBox> nested_boxes(const XPoint& center,
                               std::initializer_list<double> halves) {
    std::vector<XBox> out;
    for (double h : halves)
        out.push_back({center, Vec::Constant(center.size(), h)});
    return out;
}

Scenario finish_scenario(Scenario sc) {
    double max_half = 0.0;
    for (const auto& v : sc.neighborhoods)
        max_half = std::max(max_half, v.half_widths.maxCoeff());
    sc.search_radius = make_search_radius(sc.action->name(), max_half);
    return sc;
}

}  // namespace

Scenario builtin_scenario(const std::string& name) {
    Scenario sc;
    sc.name = name;
    if (name == "green") {
        sc.action = make_action("green");
        sc.sequence_id = "green-orbit-reps";
        sc.limit = XPoint::Zero(3);
        sc.neighborhoods = nested_boxes(sc.limit, {0.5, 0.25, 0.125});
        sc.window_radii = {1.0, 2.0, 4.0};
        sc.index_first = 1;
        sc.index_last = 24;
        sc.declared_facts = {
            {facts::kOrbitLocallyClosed,
             "the limit orbit is the closed vertical line {0} x R x {0} in Y"},
            {facts::kStabilizerCompact, "the action is free; the stabilizer is {0}"},
            {facts::kStabilizersFellConverge,
             "stabilizers are constant {0} along the sequence"},
            {facts::kBoundaryMeasureZero,
             "box windows against the trivial stabilizer: the boundary is a finite "
             "union of points"},
            {facts::kPreimageRelativelyCompact,
             "preimages of bounded boxes are finite unions of bounded intervals "
             "(two strands per index)"},
        };
    } else if (name == "winding") {
        sc.action = make_action("winding");
        sc.sequence_id = "winding-shrink";
        sc.limit = XPoint::Zero(2);
        sc.neighborhoods = nested_boxes(sc.limit, {0.5, 0.25, 0.125});
        sc.window_radii = {1.0, 2.0, 4.0};
        sc.index_first = 1;
        sc.index_last = 40;
        sc.declared_facts = {
            {facts::kOrbitLocallyClosed, "the limit orbit {0} is a closed point"},
            {facts::kStabilizersFellConverge,
             "|w_n|Z converges to R in the Fell topology; certified by the checker"},
            {facts::kQuotientPreimageFinite,
             "G/S_0 is a single point of mass 1; quotient preimages of all "
             "neighborhoods have finite measure"},
        };
    } else if (name == "green_x_winding") {
        sc.action = make_action("green_x_winding");
        sc.sequence_id = "product-green-winding";
        sc.limit = XPoint::Zero(5);
        sc.neighborhoods = nested_boxes(sc.limit, {0.5, 0.25, 0.125});
        sc.window_radii = {1.0, 2.0, 4.0};
        sc.index_first = 1;
        sc.index_last = 24;
        sc.declared_facts = {
            {facts::kOrbitLocallyClosed,
             "the limit orbit is the closed set ({0} x R x {0}) x {0}"},
            {facts::kStabilizersFellConverge,
             "{0} x |w_n|Z converges to {0} x R; certified by the checker"},
            {facts::kQuotientPreimageFinite,
             "quotients by {0} x |w_n|Z wrap the second axis onto a circle of "
             "finite mass; first-axis preimages are bounded strands"},
            {facts::kBoundaryMeasureZero,
             "window boxes against {0} x R: the boundary of W + S_z is a pair of "
             "hyperplane segments of measure zero"},
        };
    } else if (name == "green_x_trivial") {
        sc.action = make_action("green_x_trivial");
        sc.sequence_id = "green-orbit-reps";
        sc.limit = XPoint::Zero(3);
        sc.neighborhoods = nested_boxes(sc.limit, {0.5, 0.25, 0.125});
        sc.window_radii = {1.0, 2.0, 4.0};
        sc.index_first = 1;
        sc.index_last = 24;
        sc.declared_facts = {
            {facts::kOrbitLocallyClosed,
             "the limit orbit is the closed vertical line {0} x R x {0}"},
            {facts::kStabilizersFellConverge, "stabilizers are constant {0} x R"},
            {facts::kQuotientPreimageFinite,
             "the second group axis is absorbed by the constant stabilizer; "
             "first-axis preimages are bounded strands"},
            {facts::kBoundaryMeasureZero,
             "window boxes against {0} x R: the boundary of W + S_z is a pair of "
             "hyperplane segments of measure zero"},
        };
    } else if (name == "translation") {
        sc.action = make_action("translation");
        sc.sequence_id = "reciprocal";
        sc.limit = XPoint::Zero(1);
        sc.neighborhoods = nested_boxes(sc.limit, {0.5, 0.25, 0.125});
        sc.window_radii = {1.0, 2.0, 4.0};
        sc.index_first = 1;
        sc.index_last = 24;
        sc.declared_facts = {
            {facts::kOrbitLocallyClosed, "the action is transitive; the orbit is R"},
            {facts::kStabilizerCompact, "the action is free; the stabilizer is {0}"},
            {facts::kStabilizersFellConverge, "stabilizers are constant {0}"},
            {facts::kBoundaryMeasureZero, "interval boundaries are finite point sets"},
            {facts::kPreimageRelativelyCompact,
             "the preimage of a bounded interval is a bounded interval"},
        };
    } else if (name == "torus_flow") {
        sc.action = make_action("torus_flow");
        sc.sequence_id = "constant-limit";
        sc.limit = XPoint(4);
        sc.limit << 1.0, 0.0, 1.0, 0.0;
        sc.neighborhoods = nested_boxes(sc.limit, {0.4, 0.2});
        sc.window_radii = {2.0, 8.0, 32.0};
        sc.index_first = 1;
        sc.index_last = 8;
        sc.declared_facts = {};  // dense orbit: none of the hypotheses hold
    } else {
        throw std::invalid_argument("unknown scenario: " + name);
    }
    sc.sequence = make_sequence(sc.sequence_id, sc.limit);
    return finish_scenario(std::move(sc));
}

std::vector<std::string> builtin_scenario_names() {
    return {"green",   "winding",     "green_x_winding",
            "green_x_trivial", "translation", "torus_flow"};
}

// ---- JSON interface ----------------------------------------------------------

using nlohmann::ordered_json;

Scenario load_scenario_json(const std::string& text) {
    const ordered_json j = ordered_json::parse(text);
    Scenario sc;
    sc.name = j.at("name").get<std::string>();
    sc.action = make_action(j.at("action").get<std::string>());

    const auto& g = j.at("group");
    const GroupDescriptor want{g.at("real_rank").get<int>(),
                               g.at("lattice_rank").get<int>()};
    if (!(want == sc.action->group()))
        throw std::runtime_error("scenario group does not match the action's group");
    if (j.at("space").get<std::string>() != sc.action->space_name())
        throw std::runtime_error("scenario space does not match the action's space");

    const auto lim = j.at("limit").get<std::vector<double>>();
    if (static_cast<int>(lim.size()) != sc.action->space_dim())
        throw std::runtime_error("limit has the wrong dimension");
    sc.limit = Eigen::Map<const Vec>(lim.data(), static_cast<Eigen::Index>(lim.size()));

    sc.sequence_id = j.at("sequence").get<std::string>();
    sc.sequence = make_sequence(sc.sequence_id, sc.limit);
    if (sc.sequence(1).size() != sc.action->space_dim())
        throw std::runtime_error("sequence dimension does not match the space");

    for (const auto& nb : j.at("neighborhoods")) {
        XBox box;
        const auto hw = nb.at("half_widths").get<std::vector<double>>();
        if (static_cast<int>(hw.size()) != sc.action->space_dim())
            throw std::runtime_error("neighborhood half_widths have the wrong dimension");
        box.half_widths =
            Eigen::Map<const Vec>(hw.data(), static_cast<Eigen::Index>(hw.size()));
        if (nb.contains("center")) {
            const auto c = nb.at("center").get<std::vector<double>>();
            box.center =
                Eigen::Map<const Vec>(c.data(), static_cast<Eigen::Index>(c.size()));
        } else {
            box.center = sc.limit;
        }
        sc.neighborhoods.push_back(std::move(box));
    }
    if (sc.neighborhoods.empty()) throw std::runtime_error("no neighborhoods given");
    for (std::size_t i = 1; i < sc.neighborhoods.size(); ++i)
        for (Eigen::Index c = 0; c < sc.neighborhoods[i].half_widths.size(); ++c)
            if (sc.neighborhoods[i].half_widths[c] >
                sc.neighborhoods[i - 1].half_widths[c] + 1e-15)
                throw std::runtime_error("neighborhoods must be nested decreasing");

    sc.window_radii = j.at("windows").get<std::vector<double>>();
    if (sc.window_radii.empty()) throw std::runtime_error("no windows given");
    for (std::size_t i = 1; i < sc.window_radii.size(); ++i)
        if (sc.window_radii[i] <= sc.window_radii[i - 1])
            throw std::runtime_error("windows must be nested increasing");

    const auto& ir = j.at("index_range");
    sc.index_first = ir.at("first").get<int>();
    sc.index_last = ir.at("last").get<int>();
    if (sc.index_first < 1 || sc.index_last < sc.index_first)
        throw std::runtime_error("bad index range");
    sc.fell_index_last = j.value("fell_index_last", 1500);

    if (j.contains("declared_facts"))
        for (const auto& f : j.at("declared_facts")) {
            DeclaredFact df{f.at("fact").get<std::string>(),
                            f.at("justification").get<std::string>()};
            if (df.justification.empty())
                throw std::runtime_error("declared fact '" + df.fact +
                                         "' lacks a justification");
            sc.declared_facts.push_back(std::move(df));
        }

    const auto& q = j.at("quadrature");
    sc.step = q.at("step").get<double>();
    sc.tolerance = q.at("tolerance").get<double>();
    if (sc.step <= 0.0 || sc.tolerance <= 0.0)
        throw std::runtime_error("quadrature step and tolerance must be positive");

    return finish_scenario(std::move(sc));
}

std::string scenario_to_json(const Scenario& sc) {
    ordered_json j;
    j["name"] = sc.name;
    j["group"] = {{"real_rank", sc.action->group().real_rank},
                  {"lattice_rank", sc.action->group().lattice_rank}};
    j["space"] = sc.action->space_name();
    j["action"] = sc.action->name();
    j["sequence"] = sc.sequence_id;
    j["limit"] = std::vector<double>(sc.limit.data(), sc.limit.data() + sc.limit.size());
    j["neighborhoods"] = ordered_json::array();
    for (const auto& nb : sc.neighborhoods) {
        ordered_json b;
        b["half_widths"] = std::vector<double>(
            nb.half_widths.data(), nb.half_widths.data() + nb.half_widths.size());
        j["neighborhoods"].push_back(b);
    }
    j["windows"] = sc.window_radii;
    j["index_range"] = {{"first", sc.index_first}, {"last", sc.index_last}};
    j["fell_index_last"] = sc.fell_index_last;
    j["declared_facts"] = ordered_json::array();
    for (const auto& f : sc.declared_facts)
        j["declared_facts"].push_back(
            {{"fact", f.fact}, {"justification", f.justification}});
    j["quadrature"] = {{"step", sc.step}, {"tolerance", sc.tolerance}};
    return j.dump(2) + "\n";
}

ScenarioValidation validate_scenario(const Scenario& sc) {
    ScenarioValidation v;
    const auto& a = *sc.action;
    const GroupDescriptor gd = a.group();

    std::vector<XPoint> samples{sc.limit};
    for (int n : {sc.index_first, (sc.index_first + sc.index_last) / 2, sc.index_last})
        samples.push_back(sc.sequence(n));

    std::uint64_t seed = 0x5bf03635u;
    const auto next_coord = [&seed](double scale) {
        seed ^= seed >> 12;
        seed ^= seed << 25;
        seed ^= seed >> 27;
        return scale * (static_cast<double>((seed * 0x2545f4914f6cdd1dull) >> 11) *
                            0x1.0p-52 -
                        1.0);
    };

    for (const auto& x : samples) {
        if (!a.space_contains(x, 1e-7)) {
            v.ok = false;
            v.errors.push_back("sample point off the space");
            continue;
        }
        const XPoint ex = a.apply(zero_element(gd), x);
        v.max_identity_defect = std::max(v.max_identity_defect, space_distance(ex, x));

        for (int trial = 0; trial < 8; ++trial) {
            GroupElement g = zero_element(gd), h = zero_element(gd);
            for (int i = 0; i < gd.real_rank; ++i) {
                g.real[i] = next_coord(2.0);
                h.real[i] = next_coord(2.0);
            }
            const XPoint lhs = a.apply(group_op(g, h), x);
            const XPoint rhs = a.apply(g, a.apply(h, x));
            v.max_additivity_defect =
                std::max(v.max_additivity_defect, space_distance(lhs, rhs));
        }

        const auto S = a.stabilizer(x);
        const Window w = centered_window(gd, 2.0);
        const auto net = enumerate_subgroup_points(S, w, 0.25, 4000);
        for (const auto& t : net.points)
            v.max_stabilizer_motion =
                std::max(v.max_stabilizer_motion, space_distance(a.apply(t, x), x));
    }
    if (v.max_identity_defect > 1e-9) {
        v.ok = false;
        v.errors.push_back("identity action defect above 1e-9");
    }
    if (v.max_additivity_defect > 1e-7) {
        v.ok = false;
        v.errors.push_back("additivity defect above 1e-7");
    }
    if (v.max_stabilizer_motion > 1e-7) {
        v.ok = false;
        v.errors.push_back("stabilizer oracle fails to fix its point");
    }

    for (std::size_t i = 1; i < sc.neighborhoods.size(); ++i)
        for (Eigen::Index c = 0; c < sc.neighborhoods[i].half_widths.size(); ++c)
            if (sc.neighborhoods[i].half_widths[c] >
                sc.neighborhoods[i - 1].half_widths[c] + 1e-15) {
                v.ok = false;
                v.errors.push_back("neighborhoods not nested decreasing");
            }
    for (std::size_t i = 1; i < sc.window_radii.size(); ++i)
        if (sc.window_radii[i] <= sc.window_radii[i - 1]) {
            v.ok = false;
            v.errors.push_back("windows not nested increasing");
        }
    for (const auto& f : sc.declared_facts)
        if (f.justification.empty()) {
            v.ok = false;
            v.errors.push_back("fact without justification: " + f.fact);
        }
    return v;
}

// ---- preimage sweep ----------------------------------------------------------

namespace {

struct IntervalList {
    std::vector<std::pair<double, double>> items;

    void add(double lo, double hi) {
        if (!items.empty() && std::abs(items.back().second - lo) < 1e-12)
            items.back().second = hi;  // coalesce adjacent cells
        else
            items.emplace_back(lo, hi);
    }
};

void classify_cell(const Action& a, const XPoint& x, const XBox& V, double lo, double hi,
                   int depth, IntervalList& outer, IntervalList& inner) {
    const GBox cell = GBox::interval(lo, hi);
    Vec hlo, hhi;
    a.image_hull(cell, x, hlo, hhi);
    if (!V.intersects_hull(hlo, hhi)) return;
    if (V.contains_hull(hlo, hhi)) {
        outer.add(lo, hi);
        inner.add(lo, hi);
        return;
    }
    if (depth >= 6) {  // boundary cell at final resolution: outer only
        outer.add(lo, hi);
        return;
    }
    const double mid = 0.5 * (lo + hi);
    classify_cell(a, x, V, lo, mid, depth + 1, outer, inner);
    classify_cell(a, x, V, mid, hi, depth + 1, outer, inner);
}

void sweep_1d(const Action& a, const XPoint& x, const XBox& V, double radius, double step,
              IntervalList& outer, IntervalList& inner) {
    const auto m = std::max<std::int64_t>(1, std::llround(2.0 * radius / step));
    const double h = 2.0 * radius / static_cast<double>(m);
    for (std::int64_t i = 0; i < m; ++i) {
        const double lo = -radius + static_cast<double>(i) * h;
        classify_cell(a, x, V, lo, lo + h, 0, outer, inner);
    }
}

}  // namespace

PreimageBracket orbit_preimage(const Action& a, const XPoint& x, const XBox& V,
                               const Window& search_window, double step) {
    if (step <= 0.0) throw std::invalid_argument("sweep step must be positive");
    const GroupDescriptor gd = a.group();
    if (gd.lattice_rank != 0)
        throw std::invalid_argument("preimage sweep supports real group axes only");
    const double radius = search_window.radius;

    PreimageBracket bracket{BoxSet(gd), BoxSet(gd)};
    if (gd.real_rank == 1) {
        IntervalList outer, inner;
        sweep_1d(a, x, V, radius, step, outer, inner);
        for (auto [lo, hi] : outer.items) bracket.outer.add(GBox::interval(lo, hi));
        for (auto [lo, hi] : inner.items) bracket.inner.add(GBox::interval(lo, hi));
    } else if (a.factor_count() > 0) {
        // separable product: sweep each factor and take the product boxes
        std::vector<IntervalList> outs(static_cast<std::size_t>(a.factor_count()));
        std::vector<IntervalList> ins(static_cast<std::size_t>(a.factor_count()));
        int x_offset = 0;
        for (int f = 0; f < a.factor_count(); ++f) {
            const Action* fa = a.factor(f);
            const auto fi = static_cast<std::size_t>(f);
            if (fa == nullptr) {  // trivially acting axis: the whole window
                outs[fi].add(-radius, radius);
                ins[fi].add(-radius, radius);
                continue;
            }
            const XBox Vf = V.factor(x_offset, fa->space_dim());
            const XPoint xf = x.segment(x_offset, fa->space_dim());
            sweep_1d(*fa, xf, Vf, radius, step, outs[fi], ins[fi]);
            x_offset += fa->space_dim();
        }
        const auto product = [&](const std::vector<IntervalList>& lists, BoxSet& out) {
            for (const auto& l : lists)
                if (l.items.empty()) return;
            std::vector<std::size_t> idx(lists.size(), 0);
            while (true) {
                GBox box{gd, Vec(gd.dim()), Vec(gd.dim())};
                for (std::size_t f = 0; f < lists.size(); ++f) {
                    box.lo[static_cast<Eigen::Index>(f)] = lists[f].items[idx[f]].first;
                    box.hi[static_cast<Eigen::Index>(f)] = lists[f].items[idx[f]].second;
                }
                out.add(box);
                int axis = static_cast<int>(lists.size()) - 1;
                for (; axis >= 0; --axis) {
                    if (++idx[static_cast<std::size_t>(axis)] <
                        lists[static_cast<std::size_t>(axis)].items.size())
                        break;
                    idx[static_cast<std::size_t>(axis)] = 0;
                }
                if (axis < 0) return;
            }
        };
        product(outs, bracket.outer);
        product(ins, bracket.inner);
    } else {
        throw std::invalid_argument(
            "preimage sweep supports 1-d groups and separable product actions");
    }

    const double om = bracket.outer.measure();
    const double im = bracket.inner.measure();
    // slack of a few refined boundary cells on top of the 10% contract
    if (om > 0.0 && om - im > 0.1 * om + step / 16.0)
        throw std::runtime_error("preimage bracket too coarse: outer " +
                                 std::to_string(om) + ", inner " + std::to_string(im));
    return bracket;
}

// ---- accumulation functionals -------------------------------------------------

namespace {

AccumulationEstimate accumulate(const Scenario& sc, const XBox& V, const XPoint& x,
                                int index) {
    const double radius = sc.search_radius(index);
    const Window w = centered_window(sc.action->group(), radius);
    const auto bracket = orbit_preimage(*sc.action, x, V, w, sc.step);
    const ClosedSubgroup S = sc.stabilizer_at(x);
    const QuotientMeasure nu{sc.action->group(), S, QuotientMethod::CoordinateSplit};

    AccumulationEstimate est;
    est.index = index;
    est.outer = quotient_measure_of_set(nu, bracket.outer);
    est.inner = quotient_measure_of_set(nu, bracket.inner);
    est.value = 0.5 * (est.outer.value + est.inner.value);
    est.error_bound = 0.5 * (est.outer.value - est.inner.value) +
                      est.outer.error_bound + est.inner.error_bound;
    return est;
}

void require_preimage_fact(const Scenario& sc) {
    if (!(sc.has_fact(facts::kPreimageRelativelyCompact) ||
          sc.has_fact(facts::kQuotientPreimageFinite)))
        throw std::invalid_argument(
            "accumulation functional requires a declared fact bounding the quotient "
            "preimage (preimage-relatively-compact or quotient-preimage-finite)");
}

}  // namespace

AccumulationEstimate accumulation_functional(const Scenario& sc, const XBox& V, int n) {
    require_preimage_fact(sc);
    return accumulate(sc, V, sc.sequence(n), n);
}

AccumulationEstimate accumulation_at_limit(const Scenario& sc, const XBox& V) {
    require_preimage_fact(sc);
    return accumulate(sc, V, sc.limit, -1);
}

}  // namespace tglab
