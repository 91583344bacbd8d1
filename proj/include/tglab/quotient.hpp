#ifndef TGLAB_QUOTIENT_HPP
#define TGLAB_QUOTIENT_HPP

#include "tglab/boxset.hpp"
#include "tglab/subgroup.hpp"

#include <string>

// Quotient Haar measures nu_H on G/H fixed by the Weil disintegration
//   \int_G f dmu = \int_{G/H} \int_H f(s+t) dalpha_H(t) dnu_H(q(s)).
// Two independent evaluation routes: an exact coordinate-split closed form
// (axis-structured H) and quadrature against a cut-down Bruhat cross-section
// (any H). Both are kept and cross-validated; neither replaces the other.
namespace tglab {

struct UnsupportedSubgroup : std::runtime_error {
    explicit UnsupportedSubgroup(const std::string& what) : std::runtime_error(what) {}
};

enum class QuotientMethod { CoordinateSplit, BruhatSection };

struct QuotientMeasure {
    GroupDescriptor ambient;
    ClosedSubgroup subgroup;
    QuotientMethod method = QuotientMethod::CoordinateSplit;
};

// b(r) = g(r) / \int_H g(r+t) dalpha_H(t) for a product bump g wide enough
// that the denominator stays above 0.1 on the coverage region. The H-integral
// of b along any coset meeting the coverage window is 1 by construction; the
// certificate re-checks this by independent quadrature.
struct BruhatSection {
    ClosedSubgroup subgroup;
    BumpFunction bump;
    Window coverage_window;
    double min_denominator = 0.0;   // measured over the coverage grid
    double unity_defect = 0.0;      // max |H-integral of b - 1| on the sample grid

    double denominator(const GroupElement& r) const;
    double operator()(const GroupElement& r) const;
};

// bump_radius 0 picks a width that always covers; a caller-chosen narrow
// radius fails with the denominator-underflow error
BruhatSection build_bruhat_section(const ClosedSubgroup& H, const Window& coverage,
                                   double step = 1e-2, double bump_radius = 0.0);

struct SetMeasureEstimate {
    double value = 0.0;
    QuotientMethod method = QuotientMethod::CoordinateSplit;
    double error_bound = 0.0;
    std::string set_descriptor;
};

// nu_H(q_H(E)) for E a finite union of boxes
SetMeasureEstimate quotient_measure_of_set(const QuotientMeasure& nu, const BoxSet& E,
                                           const BruhatSection* section = nullptr,
                                           double step = 1e-2);

// E mapped into fundamental-domain coordinates of G/H: Line axes collapse to
// unit markers, Spaced axes reduce modulo their spacing, Free axes unchanged.
// nu_H(q(E)) = measure(reduction) / haar_scale; reductions of H-saturated sets
// intersect compatibly, which the harness uses for excised-window masses.
BoxSet reduce_to_fundamental_domain(const ClosedSubgroup& H, const BoxSet& E);

// total quotient mass (finite iff no Free axis remains); convenience used by
// scenarios whose orbit preimage wraps the whole fundamental domain
double quotient_total_mass(const ClosedSubgroup& H);

// difference between the two sides of the Weil identity for f supported in
// the window; contract |residual| <= 1e-3 * sup|f| * vol(supp f)
double weil_consistency(const ClosedSubgroup& H, const Window& support, double step,
                        const std::function<double(const GroupElement&)>& f);

// nu_{H_n}(q(W)) along a certified family against the limit value
struct TailComparisonReport {
    std::vector<double> values;  // indexed from index_first
    int index_first = 0;
    double limit_value = 0.0;
    int tail_start = 0;
    double tail_max = 0.0;
    double bound = 0.0;  // limit_value + tolerance
    bool satisfied = false;
};

TailComparisonReport limsup_comparison(const SubgroupFamily& family, int index_first,
                                       int index_last, const ClosedSubgroup& limit,
                                       const FellCertificate& cert, const GBox& window_box,
                                       double tol_factor = 5e-3);

}  // namespace tglab

#endif
