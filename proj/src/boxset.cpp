#include "tglab/boxset.hpp"

#include <algorithm>
#include <cmath>

namespace tglab {

GBox GBox::around(const GroupElement& center, double radius) {
    const GroupDescriptor d = center.descriptor();
    GBox b{d, Vec(d.dim()), Vec(d.dim())};
    for (int i = 0; i < d.real_rank; ++i) {
        b.lo[i] = center.real[i] - radius;
        b.hi[i] = center.real[i] + radius;
    }
    for (int i = 0; i < d.lattice_rank; ++i) {
        const double c = static_cast<double>(center.lattice[i]);
        b.lo[d.real_rank + i] = std::ceil(c - radius - 1e-12);
        b.hi[d.real_rank + i] = std::floor(c + radius + 1e-12) + 1.0;  // half-open
    }
    return b;
}

GBox GBox::interval(double lo, double hi) {
    GBox b{GroupDescriptor{1, 0}, Vec(1), Vec(1)};
    b.lo[0] = lo;
    b.hi[0] = hi;
    return b;
}

bool GBox::empty() const {
    for (int i = 0; i < dim(); ++i)
        if (hi[i] - lo[i] <= 0.0) return true;
    return false;
}

double GBox::measure() const {
    double m = 1.0;
    for (int i = 0; i < dim(); ++i) m *= std::max(0.0, hi[i] - lo[i]);
    return m;
}

GBox GBox::translated(const GroupElement& g) const {
    GBox b = *this;
    for (int i = 0; i < desc.real_rank; ++i) {
        b.lo[i] += g.real[i];
        b.hi[i] += g.real[i];
    }
    for (int i = 0; i < desc.lattice_rank; ++i) {
        const double v = static_cast<double>(g.lattice[i]);
        b.lo[desc.real_rank + i] += v;
        b.hi[desc.real_rank + i] += v;
    }
    return b;
}

std::optional<GBox> GBox::intersect(const GBox& other) const {
    GBox b = *this;
    for (int i = 0; i < dim(); ++i) {
        b.lo[i] = std::max(lo[i], other.lo[i]);
        b.hi[i] = std::min(hi[i], other.hi[i]);
        if (b.hi[i] - b.lo[i] <= 0.0) return std::nullopt;
    }
    return b;
}

bool GBox::contains(const GroupElement& g) const {
    for (int i = 0; i < desc.real_rank; ++i)
        if (g.real[i] < lo[i] || g.real[i] >= hi[i]) return false;
    for (int i = 0; i < desc.lattice_rank; ++i) {
        const double v = static_cast<double>(g.lattice[i]);
        if (v < lo[desc.real_rank + i] || v >= hi[desc.real_rank + i]) return false;
    }
    return true;
}

GroupElement GBox::lower_corner() const {
    GroupElement g = zero_element(desc);
    for (int i = 0; i < desc.real_rank; ++i) g.real[i] = lo[i];
    for (int i = 0; i < desc.lattice_rank; ++i)
        g.lattice[i] = static_cast<std::int64_t>(std::ceil(lo[desc.real_rank + i] - 1e-12));
    return g;
}

void BoxSet::add(const GBox& b) {
    if (boxes_.empty()) desc_ = b.desc;
    if (!b.empty()) boxes_.push_back(b);
}

bool BoxSet::empty() const {
    for (const auto& b : boxes_)
        if (!b.empty()) return false;
    return true;
}

namespace {

// union measure by recursive slab decomposition along axis
double sweep(const std::vector<const GBox*>& boxes, int axis, int dims) {
    if (boxes.empty()) return 0.0;
    if (axis == dims) return 1.0;
    std::vector<double> cuts;
    cuts.reserve(boxes.size() * 2);
    for (const GBox* b : boxes) {
        cuts.push_back(b->lo[axis]);
        cuts.push_back(b->hi[axis]);
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    double total = 0.0;
    std::vector<const GBox*> slab;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double a = cuts[i], b = cuts[i + 1];
        if (b - a <= 0.0) continue;
        const double mid = 0.5 * (a + b);
        slab.clear();
        for (const GBox* box : boxes)
            if (box->lo[axis] <= mid && mid < box->hi[axis]) slab.push_back(box);
        if (!slab.empty()) total += (b - a) * sweep(slab, axis + 1, dims);
    }
    return total;
}

}  // namespace

double BoxSet::measure() const {
    std::vector<const GBox*> ptrs;
    for (const auto& b : boxes_)
        if (!b.empty()) ptrs.push_back(&b);
    if (ptrs.empty()) return 0.0;
    return sweep(ptrs, 0, desc_.dim());
}

bool BoxSet::contains(const GroupElement& g) const {
    for (const auto& b : boxes_)
        if (b.contains(g)) return true;
    return false;
}

BoxSet BoxSet::translated(const GroupElement& g) const {
    BoxSet out(desc_);
    for (const auto& b : boxes_) out.add(b.translated(g));
    return out;
}

BoxSet BoxSet::intersect(const GBox& window) const {
    BoxSet out(desc_);
    for (const auto& b : boxes_)
        if (auto c = b.intersect(window)) out.add(*c);
    return out;
}

BoxSet BoxSet::intersect(const BoxSet& other) const {
    BoxSet out(desc_);
    for (const auto& b : boxes_)
        for (const auto& c : other.boxes())
            if (auto d = b.intersect(c)) out.add(*d);
    return out;
}

double BoxSet::bounding_radius() const {
    double r = 0.0;
    for (const auto& b : boxes_) {
        if (b.empty()) continue;
        for (int i = 0; i < b.dim(); ++i)
            r = std::max({r, std::abs(b.lo[i]), std::abs(b.hi[i])});
    }
    return r;
}

void BoxSet::coalesce() {
    bool changed = true;
    while (changed) {
        changed = false;
        for (std::size_t i = 0; i < boxes_.size() && !changed; ++i) {
            for (std::size_t j = i + 1; j < boxes_.size(); ++j) {
                const GBox& a = boxes_[i];
                const GBox& b = boxes_[j];
                int off_axis = -1;
                bool mergeable = true;
                for (int axis = 0; axis < a.dim(); ++axis) {
                    const bool same = a.lo[axis] == b.lo[axis] && a.hi[axis] == b.hi[axis];
                    if (same) continue;
                    const bool overlap =
                        b.lo[axis] <= a.hi[axis] && a.lo[axis] <= b.hi[axis];
                    if (off_axis >= 0 || !overlap) {
                        mergeable = false;
                        break;
                    }
                    off_axis = axis;
                }
                if (!mergeable) continue;
                GBox merged = a;
                if (off_axis >= 0) {
                    merged.lo[off_axis] = std::min(a.lo[off_axis], b.lo[off_axis]);
                    merged.hi[off_axis] = std::max(a.hi[off_axis], b.hi[off_axis]);
                }
                boxes_[i] = merged;
                boxes_.erase(boxes_.begin() + static_cast<std::ptrdiff_t>(j));
                changed = true;
                break;
            }
        }
    }
}

std::vector<GBox> reduce_axis_mod(const GBox& b, int axis, double spacing) {
    std::vector<GBox> out;
    const double len = b.hi[axis] - b.lo[axis];
    if (len <= 0.0) return out;
    if (len >= spacing) {  // wraps the whole band
        GBox full = b;
        full.lo[axis] = 0.0;
        full.hi[axis] = spacing;
        out.push_back(full);
        return out;
    }
    double lo = std::fmod(b.lo[axis], spacing);
    if (lo < 0.0) lo += spacing;
    const double hi = lo + len;
    if (hi <= spacing) {
        GBox piece = b;
        piece.lo[axis] = lo;
        piece.hi[axis] = hi;
        out.push_back(piece);
    } else {
        GBox first = b, second = b;
        first.lo[axis] = lo;
        first.hi[axis] = spacing;
        second.lo[axis] = 0.0;
        second.hi[axis] = hi - spacing;
        out.push_back(first);
        out.push_back(second);
    }
    return out;
}

}  // namespace tglab
