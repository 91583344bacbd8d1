#ifndef TGLAB_SUBGROUP_HPP
#define TGLAB_SUBGROUP_HPP

#include "tglab/boxset.hpp"
#include "tglab/group.hpp"

#include <optional>
#include <vector>

// Closed subgroups H <= R^a x Z^b in canonical form: an orthonormally spanned
// vector subspace V of R^a plus finitely many reduced discrete generators with
// real parts orthogonal to V. Haar measure on H is haar_scale * (Lebesgue on
// V x counting on the discrete part), normalized so the reference bump
// integrates to 1.
namespace tglab {

struct ClosedSubgroup {
    GroupDescriptor descriptor;
    Eigen::MatrixXd vector_basis;                   // a x v, orthonormal columns
    std::vector<GroupElement> discrete_generators;  // reduced, lex-sorted
    double haar_scale = 1.0;

    int subspace_dim() const { return static_cast<int>(vector_basis.cols()); }
    bool is_trivial() const { return subspace_dim() == 0 && discrete_generators.empty(); }
};

struct SearchRadiusOverflow : std::runtime_error {
    explicit SearchRadiusOverflow(const std::string& what) : std::runtime_error(what) {}
};

// canonicalize (orthonormalize, project generators off V, integer-relation
// cleanup) and normalize the Haar scale against f0
ClosedSubgroup make_subgroup(const GroupDescriptor& desc,
                             const std::vector<Vec>& basis_vectors,
                             const std::vector<GroupElement>& generators,
                             const BumpFunction& f0 = {}, double step = 1e-3);

// convenience constructors
ClosedSubgroup trivial_subgroup(const GroupDescriptor& desc);
ClosedSubgroup full_group(const GroupDescriptor& desc);
// c * Z embedded along one real axis
ClosedSubgroup real_axis_lattice(const GroupDescriptor& desc, int axis, double spacing);
// the full line along one real axis
ClosedSubgroup real_axis_line(const GroupDescriptor& desc, int axis);

// Euclidean distance from g to H (real residual after the best integer
// combination of generators; lattice mismatch counts at unit scale).
// Deterministic: ties resolved toward the lexicographically least coefficients.
double subgroup_distance(const ClosedSubgroup& H, const GroupElement& g);
bool subgroup_membership(const ClosedSubgroup& H, const GroupElement& g, double tol);
// nearest element of H to g (same search)
GroupElement subgroup_nearest(const ClosedSubgroup& H, const GroupElement& g);

// normalization constant c with c * (raw integral of f0 over H) = 1
double haar_normalize(const ClosedSubgroup& H, const BumpFunction& f0, double step = 1e-3);

// Haar integral of f over H restricted to the window
double integrate_H(const ClosedSubgroup& H, const Window& window, double step,
                   const std::function<double(const GroupElement&)>& f);

// points of H inside the window, no farther than `spacing` apart along V,
// visiting order deterministic; widens the spacing if the cap would overflow
struct SubgroupNet {
    std::vector<GroupElement> points;
    double spacing = 0.0;  // actually used spacing along V
};
SubgroupNet enumerate_subgroup_points(const ClosedSubgroup& H, const Window& window,
                                      double spacing, std::size_t max_points = 400000);

// Per-axis shape of H when its subspace is spanned by standard axes and each
// generator moves a single axis: the quotient machinery requires this form.
struct AxisStructure {
    enum class Kind { Free, Line, Spaced };
    std::vector<Kind> kind;      // size a + b
    std::vector<double> spacing;  // valid where kind == Spaced
};
std::optional<AxisStructure> axis_structure(const ClosedSubgroup& H, double tol = 1e-9);

// L-inf distance between the coset g + H and the box; exact per-axis formula
// for axis-structured H, bounded enumeration otherwise
double coset_box_distance(const ClosedSubgroup& H, const GroupElement& g, const GBox& box);

// ---- Fell topology checker ------------------------------------------------

using SubgroupFamily = std::function<ClosedSubgroup(int)>;

struct FellViolation {
    int index = 0;           // family index whose point escapes
    GroupElement point;      // the accumulation candidate
    double limit_distance = 0.0;  // distance from the claimed limit subgroup
};

struct FellWitness {
    GroupElement target;   // sampled point of the limit subgroup
    GroupElement witness;  // approximating element at the last index
    int threshold = 0;     // approximation holds for every index from here on
};

struct FellWindowCheck {
    double window_radius = 0.0;
    int threshold = 0;        // all net points of H approximated for n >= threshold
    double net_spacing = 0.0;
    int tail_stride = 1;      // sampling stride used for direction (2)
    bool direction1_ok = true;
    std::vector<FellWitness> witness_samples;  // direction (1) evidence (capped)
    std::vector<FellViolation> violations;     // direction (2) failures
};

struct FellCertificate {
    double tolerance = 0.0;
    int index_first = 0, index_last = 0;
    std::vector<FellWindowCheck> windows;
    bool certified = false;

    int max_threshold() const {
        int t = 0;
        for (const auto& w : windows) t = std::max(t, w.threshold);
        return t;
    }
};

FellCertificate fell_converges(const SubgroupFamily& family, int index_first, int index_last,
                               const ClosedSubgroup& limit, const std::vector<double>& window_radii,
                               double tol);

}  // namespace tglab

#endif
