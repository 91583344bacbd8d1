#ifndef TGLAB_BOXSET_HPP
#define TGLAB_BOXSET_HPP

#include "tglab/group.hpp"

#include <optional>
#include <vector>

// Axis-aligned boxes and finite unions of them inside G = R^a x Z^b.
// Real axes carry intervals [lo, hi); lattice axes carry integer bands stored
// half-open at integer bounds so that hi - lo counts lattice points. Measure
// is Lebesgue x counting, matching the Haar measure of integrate_G.
namespace tglab {

struct GBox {
    GroupDescriptor desc;
    Vec lo;  // size a + b, lattice entries at integer values
    Vec hi;

    static GBox around(const GroupElement& center, double radius);
    static GBox interval(double lo, double hi);  // 1-d real group

    int dim() const { return desc.dim(); }
    bool is_lattice_axis(int axis) const { return axis >= desc.real_rank; }
    bool empty() const;
    double measure() const;
    GBox translated(const GroupElement& g) const;
    std::optional<GBox> intersect(const GBox& other) const;
    bool contains(const GroupElement& g) const;
    GroupElement lower_corner() const;  // lattice axes rounded up to integers
};

class BoxSet {
  public:
    BoxSet() = default;
    explicit BoxSet(GroupDescriptor d) : desc_(d) {}
    explicit BoxSet(const GBox& b) : desc_(b.desc) { boxes_.push_back(b); }

    void add(const GBox& b);
    const std::vector<GBox>& boxes() const { return boxes_; }
    bool empty() const;
    GroupDescriptor descriptor() const { return desc_; }

    // exact measure of the union (breakpoint sweep; overlaps do not double count)
    double measure() const;
    bool contains(const GroupElement& g) const;
    BoxSet translated(const GroupElement& g) const;
    BoxSet intersect(const GBox& window) const;
    BoxSet intersect(const BoxSet& other) const;
    // smallest symmetric window radius containing the union (0 if empty)
    double bounding_radius() const;
    // merge contained/mergeable boxes (same extents on all axes but one,
    // overlapping on that one); measure-preserving
    void coalesce();

  private:
    GroupDescriptor desc_;
    std::vector<GBox> boxes_;
};

// reduce one axis of a box modulo spacing into the fundamental band [0, spacing)
std::vector<GBox> reduce_axis_mod(const GBox& b, int axis, double spacing);

}  // namespace tglab

#endif
