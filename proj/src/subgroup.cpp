#include "tglab/subgroup.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

namespace tglab {

namespace {

constexpr double kReduceTol = 1e-9;

// stacked real vector (projected real part, lattice part) of a generator
Vec stacked(const GroupElement& d) {
    Vec v(d.real.size() + d.lattice.size());
    v.head(d.real.size()) = d.real;
    for (Eigen::Index i = 0; i < d.lattice.size(); ++i)
        v[d.real.size() + i] = static_cast<double>(d.lattice[i]);
    return v;
}

bool near_zero_generator(const GroupElement& d) {
    return d.real.lpNorm<Eigen::Infinity>() < kReduceTol && d.lattice.isZero();
}

// Gauss-style pairwise reduction: subtract integer multiples until stable.
void reduce_generators(std::vector<GroupElement>& gens) {
    for (auto& g : gens)
        for (Eigen::Index i = 0; i < g.real.size(); ++i)
            if (std::abs(g.real[i]) < kReduceTol) g.real[i] = 0.0;
    gens.erase(std::remove_if(gens.begin(), gens.end(), near_zero_generator), gens.end());

    bool changed = true;
    int rounds = 0;
    while (changed && rounds++ < 64) {
        changed = false;
        std::sort(gens.begin(), gens.end(), [](const GroupElement& x, const GroupElement& y) {
            return norm_two(x) < norm_two(y);
        });
        for (std::size_t i = 0; i < gens.size() && !changed; ++i) {
            const Vec vi = stacked(gens[i]);
            const double nisq = vi.squaredNorm();
            if (nisq < kReduceTol * kReduceTol) continue;
            for (std::size_t j = 0; j < gens.size(); ++j) {
                if (j == i) continue;
                const Vec vj = stacked(gens[j]);
                const auto m = std::llround(vi.dot(vj) / nisq);
                if (m == 0) continue;
                // integral multiples must respect the lattice coordinates exactly
                gens[j].real -= static_cast<double>(m) * gens[i].real;
                gens[j].lattice -= m * gens[i].lattice;
                for (Eigen::Index c = 0; c < gens[j].real.size(); ++c)
                    if (std::abs(gens[j].real[c]) < kReduceTol) gens[j].real[c] = 0.0;
                changed = true;
            }
            gens.erase(std::remove_if(gens.begin(), gens.end(), near_zero_generator), gens.end());
        }
    }
    std::sort(gens.begin(), gens.end(), lex_less);
}

struct CoefficientSearch {
    Eigen::MatrixXd gen_matrix;  // stacked generators as columns
    double sigma_min = 0.0;
};

CoefficientSearch coefficient_search(const ClosedSubgroup& H) {
    CoefficientSearch cs;
    const int m = static_cast<int>(H.discrete_generators.size());
    if (m == 0) return cs;
    const auto& d0 = H.discrete_generators[0];
    cs.gen_matrix.resize(d0.real.size() + d0.lattice.size(), m);
    for (int j = 0; j < m; ++j) cs.gen_matrix.col(j) = stacked(H.discrete_generators[j]);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(cs.gen_matrix);
    cs.sigma_min = svd.singularValues().minCoeff();
    return cs;
}

// visit integer coefficient boxes in lexicographic order
template <typename Fn>
void for_each_coefficient(const std::vector<std::int64_t>& radius, Fn&& fn) {
    const int m = static_cast<int>(radius.size());
    std::vector<std::int64_t> n(m);
    for (int i = 0; i < m; ++i) n[i] = -radius[i];
    while (true) {
        fn(n);
        int axis = m - 1;
        for (; axis >= 0; --axis) {
            if (++n[axis] <= radius[axis]) break;
            n[axis] = -radius[axis];
        }
        if (axis < 0) return;
    }
}

struct NearestResult {
    double distance = 0.0;
    GroupElement point;  // nearest element of H
};

NearestResult nearest_in_subgroup(const ClosedSubgroup& H, const GroupElement& g) {
    if (g.descriptor() != H.descriptor) throw DescriptorMismatch("element/subgroup mismatch");
    const auto& B = H.vector_basis;
    // residual of the real part off V
    Vec res = g.real;
    Vec v_part = Vec::Zero(g.real.size());
    if (B.cols() > 0) {
        v_part = B * (B.transpose() * g.real);
        res -= v_part;
    }

    const int m = static_cast<int>(H.discrete_generators.size());
    if (m == 0) {
        double d2 = res.squaredNorm();
        for (Eigen::Index i = 0; i < g.lattice.size(); ++i) {
            const double l = static_cast<double>(g.lattice[i]);
            d2 += l * l;
        }
        GroupElement nearest = zero_element(H.descriptor);
        nearest.real = v_part;
        return {std::sqrt(d2), nearest};
    }

    // single real-axis-free generator fast path (the hot case: c*Z)
    if (m == 1 && H.discrete_generators[0].lattice.isZero()) {
        const Vec e = H.discrete_generators[0].real;
        const double ee = e.squaredNorm();
        const auto n0 = std::llround(res.dot(e) / ee);
        double best = -1.0;
        std::int64_t best_n = 0;
        for (std::int64_t n = n0 - 1; n <= n0 + 1; ++n) {
            const double d2 = (res - static_cast<double>(n) * e).squaredNorm();
            if (best < 0.0 || d2 < best - 1e-18) {
                best = d2;
                best_n = n;
            }
        }
        double d2 = best;
        for (Eigen::Index i = 0; i < g.lattice.size(); ++i) {
            const double l = static_cast<double>(g.lattice[i]);
            d2 += l * l;
        }
        GroupElement nearest = zero_element(H.descriptor);
        nearest.real = v_part + static_cast<double>(best_n) * e;
        return {std::sqrt(d2), nearest};
    }

    const CoefficientSearch cs = coefficient_search(H);
    if (cs.sigma_min < kReduceTol)
        throw SearchRadiusOverflow("degenerate generator matrix after reduction");
    Vec target(res.size() + g.lattice.size());
    target.head(res.size()) = res;
    for (Eigen::Index i = 0; i < g.lattice.size(); ++i)
        target[res.size() + i] = static_cast<double>(g.lattice[i]);

    const double reach = (target.norm() + 1.0) / cs.sigma_min + 1.0;
    std::vector<std::int64_t> radius(m, static_cast<std::int64_t>(std::ceil(reach)));
    double combos = 1.0;
    for (auto r : radius) combos *= static_cast<double>(2 * r + 1);
    if (combos > 4e6)
        throw SearchRadiusOverflow("nearest-point search space too large: " +
                                   std::to_string(combos) + " combinations");

    double best = -1.0;
    Vec best_comb;
    for_each_coefficient(radius, [&](const std::vector<std::int64_t>& n) {
        Vec comb = Vec::Zero(target.size());
        for (int j = 0; j < m; ++j) comb += static_cast<double>(n[j]) * cs.gen_matrix.col(j);
        const double d2 = (target - comb).squaredNorm();
        if (best < 0.0 || d2 < best - 1e-18) {  // strict improvement keeps lex-least
            best = d2;
            best_comb = comb;
        }
    });
    GroupElement nearest = zero_element(H.descriptor);
    nearest.real = v_part + best_comb.head(res.size());
    for (Eigen::Index i = 0; i < g.lattice.size(); ++i)
        nearest.lattice[i] = std::llround(best_comb[res.size() + i]);
    return {std::sqrt(best), nearest};
}

}  // namespace

ClosedSubgroup make_subgroup(const GroupDescriptor& desc, const std::vector<Vec>& basis_vectors,
                             const std::vector<GroupElement>& generators, const BumpFunction& f0,
                             double step) {
    ClosedSubgroup H;
    H.descriptor = desc;

    // orthonormalize the subspace part
    Eigen::MatrixXd B(desc.real_rank, 0);
    for (const Vec& v : basis_vectors) {
        if (v.size() != desc.real_rank) throw DescriptorMismatch("basis vector size mismatch");
        Vec w = v;
        for (Eigen::Index c = 0; c < B.cols(); ++c) w -= B.col(c).dot(w) * B.col(c);
        if (w.norm() > kReduceTol) {
            B.conservativeResize(Eigen::NoChange, B.cols() + 1);
            B.col(B.cols() - 1) = w / w.norm();
        }
    }
    H.vector_basis = B;

    // project generators off V, then integer-relation cleanup
    std::vector<GroupElement> gens;
    for (const auto& d : generators) {
        if (d.descriptor() != desc) throw DescriptorMismatch("generator descriptor mismatch");
        GroupElement e = d;
        if (B.cols() > 0) e.real -= B * (B.transpose() * e.real);
        gens.push_back(e);
    }
    reduce_generators(gens);
    H.discrete_generators = gens;

    H.haar_scale = haar_normalize(H, f0, step);
    return H;
}

ClosedSubgroup trivial_subgroup(const GroupDescriptor& desc) {
    return make_subgroup(desc, {}, {});
}

ClosedSubgroup full_group(const GroupDescriptor& desc) {
    std::vector<Vec> basis;
    for (int i = 0; i < desc.real_rank; ++i) {
        Vec e = Vec::Zero(desc.real_rank);
        e[i] = 1.0;
        basis.push_back(e);
    }
    std::vector<GroupElement> gens;
    for (int i = 0; i < desc.lattice_rank; ++i) {
        GroupElement d = zero_element(desc);
        d.lattice[i] = 1;
        gens.push_back(d);
    }
    return make_subgroup(desc, basis, gens);
}

ClosedSubgroup real_axis_lattice(const GroupDescriptor& desc, int axis, double spacing) {
    if (spacing <= 0.0) throw std::invalid_argument("lattice spacing must be positive");
    GroupElement d = zero_element(desc);
    d.real[axis] = spacing;
    return make_subgroup(desc, {}, {d});
}

ClosedSubgroup real_axis_line(const GroupDescriptor& desc, int axis) {
    Vec e = Vec::Zero(desc.real_rank);
    e[axis] = 1.0;
    return make_subgroup(desc, {e}, {});
}

double subgroup_distance(const ClosedSubgroup& H, const GroupElement& g) {
    // allocation-free paths for the cases hot in Fell certification
    if (H.descriptor.lattice_rank == 0 && g.lattice.size() == 0 &&
        H.subspace_dim() == 0) {
        if (H.discrete_generators.empty()) return g.real.norm();
        if (H.discrete_generators.size() == 1) {
            const auto& e = H.discrete_generators[0].real;
            double dot = 0.0, ee = 0.0;
            for (Eigen::Index i = 0; i < e.size(); ++i) {
                dot += g.real[i] * e[i];
                ee += e[i] * e[i];
            }
            const double n = std::round(dot / ee);
            double best = 1e300;
            for (double m : {n - 1.0, n, n + 1.0}) {
                double d2 = 0.0;
                for (Eigen::Index i = 0; i < e.size(); ++i) {
                    const double d = g.real[i] - m * e[i];
                    d2 += d * d;
                }
                best = std::min(best, d2);
            }
            return std::sqrt(best);
        }
    }
    if (H.descriptor.lattice_rank == 0 && g.lattice.size() == 0 &&
        H.subspace_dim() == H.descriptor.real_rank)
        return 0.0;  // full space
    return nearest_in_subgroup(H, g).distance;
}

bool subgroup_membership(const ClosedSubgroup& H, const GroupElement& g, double tol) {
    if (tol <= 0.0) throw std::invalid_argument("membership tolerance must be positive");
    return subgroup_distance(H, g) < tol;
}

GroupElement subgroup_nearest(const ClosedSubgroup& H, const GroupElement& g) {
    return nearest_in_subgroup(H, g).point;
}

namespace {

// integral over the subspace slice through the discrete point d, restricted
// to `window` when given
double subspace_integral(const ClosedSubgroup& H, const GroupElement& d, double reach,
                         double step, const Window* window,
                         const std::function<double(const GroupElement&)>& f) {
    const int v = H.subspace_dim();
    if (v == 0) {
        if (window && !window->contains(d)) return 0.0;
        return f(d);
    }
    // midpoint grid over the coefficient cube [-reach, reach]^v
    const std::int64_t m = std::max<std::int64_t>(1, std::llround(2.0 * reach / step));
    const double h = 2.0 * reach / static_cast<double>(m);
    double weight = 1.0;
    for (int i = 0; i < v; ++i) weight *= h;

    CompensatedSum acc;
    std::vector<std::int64_t> idx(v, 0);
    GroupElement p = d;
    while (true) {
        Vec c(v);
        for (int i = 0; i < v; ++i)
            c[i] = -reach + (static_cast<double>(idx[i]) + 0.5) * h;
        p.real = d.real + H.vector_basis * c;
        if (!window || window->contains(p)) acc.add(f(p) * weight);
        int axis = v - 1;
        for (; axis >= 0; --axis) {
            if (++idx[axis] < m) break;
            idx[axis] = 0;
        }
        if (axis < 0) break;
    }
    return acc.value();
}

// enumerate discrete-part points within L2 reach, lexicographic coefficient order
std::vector<GroupElement> discrete_points_within(const ClosedSubgroup& H, double reach) {
    std::vector<GroupElement> pts;
    const int m = static_cast<int>(H.discrete_generators.size());
    if (m == 0) {
        pts.push_back(zero_element(H.descriptor));
        return pts;
    }
    const CoefficientSearch cs = coefficient_search(H);
    if (cs.sigma_min < kReduceTol)
        throw SearchRadiusOverflow("degenerate generator matrix");
    std::vector<std::int64_t> radius(
        m, static_cast<std::int64_t>(std::ceil(reach / cs.sigma_min)) + 1);
    double combos = 1.0;
    for (auto r : radius) combos *= static_cast<double>(2 * r + 1);
    if (combos > 4e6) throw SearchRadiusOverflow("discrete enumeration too large");

    for_each_coefficient(radius, [&](const std::vector<std::int64_t>& n) {
        GroupElement p = zero_element(H.descriptor);
        for (int j = 0; j < m; ++j) {
            p.real += static_cast<double>(n[j]) * H.discrete_generators[j].real;
            p.lattice += n[j] * H.discrete_generators[j].lattice;
        }
        if (norm_two(p) <= reach) pts.push_back(p);
    });
    return pts;
}

}  // namespace

double haar_normalize(const ClosedSubgroup& H, const BumpFunction& f0, double step) {
    const double rho = f0.support_radius;
    const double reach =
        rho * std::sqrt(static_cast<double>(std::max(1, H.descriptor.dim()))) + 1.0;
    CompensatedSum raw;
    for (const auto& d : discrete_points_within(H, reach)) {
        raw.add(subspace_integral(H, d, reach, step, nullptr,
                                  [&](const GroupElement& p) { return f0(p); }));
    }
    const double total = raw.value();
    if (!(total > 1e-12))
        throw std::logic_error("bump integral over subgroup vanished");
    return 1.0 / total;
}

double integrate_H(const ClosedSubgroup& H, const Window& window, double step,
                   const std::function<double(const GroupElement&)>& f) {
    if (step <= 0.0) throw std::invalid_argument("quadrature step must be positive");
    if (window.radius <= 0.0) throw std::invalid_argument("degenerate window");
    const double reach =
        (window.radius + norm_two(window.center)) *
            std::sqrt(static_cast<double>(std::max(1, H.descriptor.dim()))) +
        1.0;
    CompensatedSum acc;
    for (const auto& d : discrete_points_within(H, reach)) {
        acc.add(subspace_integral(H, d, reach, step, &window, f));
    }
    return H.haar_scale * acc.value();
}

SubgroupNet enumerate_subgroup_points(const ClosedSubgroup& H, const Window& window,
                                      double spacing, std::size_t max_points) {
    SubgroupNet net;
    const double reach =
        (window.radius + norm_two(window.center)) *
            std::sqrt(static_cast<double>(std::max(1, H.descriptor.dim()))) +
        1.0;
    auto discrete = discrete_points_within(H, reach);
    const int v = H.subspace_dim();

    double h = spacing;
    while (true) {
        const std::int64_t m =
            v == 0 ? 1 : std::max<std::int64_t>(1, std::llround(2.0 * reach / h));
        double count = static_cast<double>(discrete.size());
        for (int i = 0; i < v; ++i) count *= static_cast<double>(m);
        if (count <= static_cast<double>(max_points)) break;
        h *= 2.0;
    }
    net.spacing = h;

    const std::int64_t m =
        v == 0 ? 1 : std::max<std::int64_t>(1, std::llround(2.0 * reach / h));
    for (const auto& d : discrete) {
        if (v == 0) {
            if (window.contains(d)) net.points.push_back(d);
            continue;
        }
        std::vector<std::int64_t> idx(v, 0);
        while (true) {
            Vec c(v);
            for (int i = 0; i < v; ++i)
                c[i] = -reach + (static_cast<double>(idx[i]) + 0.5) * (2.0 * reach / m);
            GroupElement p = d;
            p.real = d.real + H.vector_basis * c;
            if (window.contains(p)) net.points.push_back(p);
            int axis = v - 1;
            for (; axis >= 0; --axis) {
                if (++idx[axis] < m) break;
                idx[axis] = 0;
            }
            if (axis < 0) break;
        }
    }
    return net;
}

std::optional<AxisStructure> axis_structure(const ClosedSubgroup& H, double tol) {
    const GroupDescriptor d = H.descriptor;
    AxisStructure s;
    s.kind.assign(d.dim(), AxisStructure::Kind::Free);
    s.spacing.assign(d.dim(), 0.0);

    // subspace columns must be +/- standard axes
    for (Eigen::Index c = 0; c < H.vector_basis.cols(); ++c) {
        int axis = -1;
        for (int i = 0; i < d.real_rank; ++i) {
            const double v = std::abs(H.vector_basis(i, c));
            if (v > 1.0 - tol) {
                if (axis >= 0) return std::nullopt;
                axis = i;
            } else if (v > tol) {
                return std::nullopt;
            }
        }
        if (axis < 0 || s.kind[axis] != AxisStructure::Kind::Free) return std::nullopt;
        s.kind[axis] = AxisStructure::Kind::Line;
    }

    // each generator must move exactly one axis
    for (const auto& g : H.discrete_generators) {
        int axis = -1;
        double spacing = 0.0;
        for (int i = 0; i < d.real_rank; ++i) {
            if (std::abs(g.real[i]) > tol) {
                if (axis >= 0) return std::nullopt;
                axis = i;
                spacing = std::abs(g.real[i]);
            }
        }
        for (int i = 0; i < d.lattice_rank; ++i) {
            if (g.lattice[i] != 0) {
                if (axis >= 0) return std::nullopt;
                axis = d.real_rank + i;
                spacing = std::abs(static_cast<double>(g.lattice[i]));
            }
        }
        if (axis < 0 || s.kind[axis] != AxisStructure::Kind::Free) return std::nullopt;
        s.kind[axis] = AxisStructure::Kind::Spaced;
        s.spacing[axis] = spacing;
    }
    return s;
}

double coset_box_distance(const ClosedSubgroup& H, const GroupElement& g, const GBox& box) {
    if (auto s = axis_structure(H)) {
        // per-axis: product sets intersect iff every axis factor intersects
        double dist = 0.0;
        const int a = H.descriptor.real_rank;
        for (int axis = 0; axis < H.descriptor.dim(); ++axis) {
            if (s->kind[axis] == AxisStructure::Kind::Line) continue;
            const double coord =
                axis < a ? g.real[axis] : static_cast<double>(g.lattice[axis - a]);
            const double lo = box.lo[axis], hi = axis < a ? box.hi[axis] : box.hi[axis] - 1.0;
            const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
            if (s->kind[axis] == AxisStructure::Kind::Spaced) {
                const double c = s->spacing[axis];
                // coset positions on this axis: coord + k*c
                const double k = std::round((mid - coord) / c);
                double best = 1e300;
                for (double kk : {k - 1.0, k, k + 1.0}) {
                    const double p = coord + kk * c;
                    best = std::min(best, std::max(0.0, std::abs(p - mid) - half));
                }
                dist = std::max(dist, best);
            } else {  // Free
                dist = std::max(dist, std::max(0.0, std::abs(coord - mid) - half));
            }
        }
        return dist;
    }
    // fallback: enumerate subgroup points within reach of the box
    double box_reach = 0.0;
    for (int i = 0; i < box.dim(); ++i)
        box_reach = std::max({box_reach, std::abs(box.lo[i]), std::abs(box.hi[i])});
    const double reach = norm_two(g) + box_reach + 2.0;
    double best = 1e300;
    for (const auto& t : discrete_points_within(H, reach)) {
        const GroupElement p = group_op(g, t);
        double d = 0.0;
        const int a = H.descriptor.real_rank;
        for (int axis = 0; axis < H.descriptor.dim(); ++axis) {
            const double coord =
                axis < a ? p.real[axis] : static_cast<double>(p.lattice[axis - a]);
            const double lo = box.lo[axis], hi = axis < a ? box.hi[axis] : box.hi[axis] - 1.0;
            d = std::max({d, lo - coord, coord - hi, 0.0});
        }
        best = std::min(best, d);
    }
    return best;
}

FellCertificate fell_converges(const SubgroupFamily& family, int index_first, int index_last,
                               const ClosedSubgroup& limit, const std::vector<double>& window_radii,
                               double tol) {
    if (window_radii.empty()) throw std::invalid_argument("empty window list");
    for (std::size_t i = 1; i < window_radii.size(); ++i)
        if (window_radii[i] <= window_radii[i - 1])
            throw std::invalid_argument("windows must be nested increasing");
    if (index_last < index_first) throw std::invalid_argument("empty index range");

    FellCertificate cert;
    cert.tolerance = tol;
    cert.index_first = index_first;
    cert.index_last = index_last;

    // family values are pulled once per index
    std::vector<ClosedSubgroup> members;
    members.reserve(static_cast<std::size_t>(index_last - index_first + 1));
    for (int n = index_first; n <= index_last; ++n) members.push_back(family(n));
    const auto member = [&](int n) -> const ClosedSubgroup& {
        return members[static_cast<std::size_t>(n - index_first)];
    };

    bool ok = true;
    for (double radius : window_radii) {
        FellWindowCheck check;
        check.window_radius = radius;
        const Window w = centered_window(limit.descriptor, radius);

        // direction (1): every net point of limit ∩ window eventually approximated
        const SubgroupNet net = enumerate_subgroup_points(limit, w, tol);
        check.net_spacing = net.spacing;
        int threshold = index_first;
        const std::size_t witness_stride =
            std::max<std::size_t>(1, net.points.size() / 8);
        for (std::size_t pi = 0; pi < net.points.size(); ++pi) {
            const auto& h = net.points[pi];
            int first_good = index_last + 1;
            for (int n = index_last; n >= index_first; --n) {
                if (subgroup_distance(member(n), h) < tol)
                    first_good = n;
                else
                    break;
            }
            if (first_good > index_last) {
                check.direction1_ok = false;
                ok = false;
                break;
            }
            threshold = std::max(threshold, first_good);
            if (pi % witness_stride == 0 && check.witness_samples.size() < 8)
                check.witness_samples.push_back(
                    {h, subgroup_nearest(member(index_last), h), first_good});
        }
        check.threshold = threshold;

        // direction (2): no tail point sits persistently far from the limit
        const int tail_start = index_first + (index_last - index_first) / 2;
        const int stride = std::max(1, (index_last - tail_start) / 64);
        const int scan_stride = std::max(1, (index_last - tail_start) / 48);
        check.tail_stride = scan_stride;
        for (int n = tail_start; n <= index_last && check.violations.size() < 8;
             n += scan_stride) {
            const SubgroupNet pts = enumerate_subgroup_points(member(n), w, tol);
            for (const auto& p : pts.points) {
                const double d = subgroup_distance(limit, p);
                if (d < tol) continue;
                // accumulation evidence: the rest of the tail keeps approximating p
                double tail_max = 0.0;
                for (int n2 = tail_start; n2 <= index_last; n2 += stride)
                    tail_max = std::max(tail_max, subgroup_distance(member(n2), p));
                if (tail_max <= std::max(tol, d / 4.0)) {
                    check.violations.push_back({n, p, d});
                    ok = false;
                    if (check.violations.size() >= 8) break;
                }
            }
        }
        cert.windows.push_back(std::move(check));
    }
    cert.certified = ok;
    return cert;
}

}  // namespace tglab
