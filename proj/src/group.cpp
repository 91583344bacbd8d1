#include "tglab/group.hpp"

#include <cmath>

namespace tglab {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

void require_same_descriptor(const GroupElement& g, const GroupElement& h) {
    if (g.descriptor() != h.descriptor())
        throw DescriptorMismatch("group elements live in different groups");
}
}  // namespace

GroupElement zero_element(const GroupDescriptor& g) {
    return {Vec::Zero(g.real_rank), IntVec::Zero(g.lattice_rank)};
}

GroupElement make_element(const GroupDescriptor& g, const Vec& real, const IntVec& lattice) {
    if (real.size() != g.real_rank || lattice.size() != g.lattice_rank)
        throw DescriptorMismatch("coordinate sizes do not match the descriptor");
    return {real, lattice};
}

GroupElement make_real_element(std::initializer_list<double> coords) {
    Vec v(static_cast<Eigen::Index>(coords.size()));
    Eigen::Index i = 0;
    for (double c : coords) v[i++] = c;
    return {v, IntVec::Zero(0)};
}

GroupElement group_op(const GroupElement& g, const GroupElement& h) {
    require_same_descriptor(g, h);
    return {g.real + h.real, g.lattice + h.lattice};
}

GroupElement group_inverse(const GroupElement& g) { return {-g.real, -g.lattice}; }

GroupElement group_sub(const GroupElement& g, const GroupElement& h) {
    require_same_descriptor(g, h);
    return {g.real - h.real, g.lattice - h.lattice};
}

double norm_inf(const GroupElement& g) {
    double m = 0.0;
    for (Eigen::Index i = 0; i < g.real.size(); ++i) m = std::max(m, std::abs(g.real[i]));
    for (Eigen::Index i = 0; i < g.lattice.size(); ++i)
        m = std::max(m, std::abs(static_cast<double>(g.lattice[i])));
    return m;
}

double norm_two(const GroupElement& g) {
    double s = g.real.squaredNorm();
    for (Eigen::Index i = 0; i < g.lattice.size(); ++i) {
        const double v = static_cast<double>(g.lattice[i]);
        s += v * v;
    }
    return std::sqrt(s);
}

bool lex_less(const GroupElement& a, const GroupElement& b) {
    for (Eigen::Index i = 0; i < a.real.size(); ++i) {
        if (a.real[i] < b.real[i]) return true;
        if (a.real[i] > b.real[i]) return false;
    }
    for (Eigen::Index i = 0; i < a.lattice.size(); ++i) {
        if (a.lattice[i] < b.lattice[i]) return true;
        if (a.lattice[i] > b.lattice[i]) return false;
    }
    return false;
}

bool Window::contains(const GroupElement& g) const {
    for (Eigen::Index i = 0; i < g.real.size(); ++i)
        if (std::abs(g.real[i] - center.real[i]) > radius) return false;
    for (Eigen::Index i = 0; i < g.lattice.size(); ++i)
        if (std::abs(static_cast<double>(g.lattice[i] - center.lattice[i])) > radius) return false;
    return true;
}

Window centered_window(const GroupDescriptor& g, double radius) {
    if (radius <= 0.0) throw std::invalid_argument("window radius must be positive");
    return {zero_element(g), radius};
}

Complex character_eval(const Character& tau, const GroupElement& g) {
    if (tau.real_freqs.size() != g.real.size() || tau.lattice_angles.size() != g.lattice.size())
        throw DescriptorMismatch("character does not match the group element");
    double phase = tau.real_freqs.dot(g.real);
    for (Eigen::Index i = 0; i < g.lattice.size(); ++i)
        phase += tau.lattice_angles[i] * static_cast<double>(g.lattice[i]);
    return {std::cos(kTwoPi * phase), std::sin(kTwoPi * phase)};
}

double BumpFunction::operator()(const GroupElement& g) const {
    double v = 1.0;
    for (Eigen::Index i = 0; i < g.real.size(); ++i) {
        v *= std::max(0.0, 1.0 - std::abs(g.real[i]) / support_radius);
        if (v == 0.0) return 0.0;
    }
    for (Eigen::Index i = 0; i < g.lattice.size(); ++i) {
        v *= std::max(0.0, 1.0 - std::abs(static_cast<double>(g.lattice[i])) / support_radius);
        if (v == 0.0) return 0.0;
    }
    return v;
}

WindowGrid::WindowGrid(const Window& w, double step) : desc_(w.center.descriptor()) {
    if (step <= 0.0) throw std::invalid_argument("quadrature step must be positive");
    if (w.radius <= 0.0 && desc_.real_rank > 0)
        throw std::invalid_argument("degenerate window");

    lo_ = Vec(desc_.real_rank);
    count_ = 1;
    for (int i = 0; i < desc_.real_rank; ++i) {
        const double len = 2.0 * w.radius;
        std::int64_t m = std::max<std::int64_t>(1, std::llround(len / step));
        real_counts_.push_back(m);
        steps_.push_back(len / static_cast<double>(m));  // adjusted to divide evenly
        lo_[i] = w.center.real[i] - w.radius;
        weight_ *= steps_.back();
        count_ *= m;
    }
    for (int i = 0; i < desc_.lattice_rank; ++i) {
        const double c = static_cast<double>(w.center.lattice[i]);
        lat_lo_.push_back(static_cast<std::int64_t>(std::ceil(c - w.radius - 1e-12)));
        lat_hi_.push_back(static_cast<std::int64_t>(std::floor(c + w.radius + 1e-12)));
        if (lat_hi_.back() < lat_lo_.back())
            throw std::invalid_argument("degenerate window: empty lattice band");
        count_ *= (lat_hi_.back() - lat_lo_.back() + 1);
    }
}

void WindowGrid::for_each(const std::function<void(const GroupElement&, double)>& fn) const {
    GroupElement p = zero_element(desc_);
    std::vector<std::int64_t> ridx(desc_.real_rank, 0);
    std::vector<std::int64_t> lidx(desc_.lattice_rank, 0);

    const auto set_point = [&] {
        for (int i = 0; i < desc_.real_rank; ++i)
            p.real[i] = lo_[i] + (static_cast<double>(ridx[i]) + 0.5) * steps_[i];
        for (int i = 0; i < desc_.lattice_rank; ++i)
            p.lattice[i] = lat_lo_[i] + lidx[i];
    };

    // odometer over (real axes, lattice axes), first axis slowest
    while (true) {
        set_point();
        fn(p, weight_);
        int axis = desc_.dim() - 1;
        for (; axis >= 0; --axis) {
            if (axis >= desc_.real_rank) {
                const int j = axis - desc_.real_rank;
                if (++lidx[j] <= lat_hi_[j] - lat_lo_[j]) break;
                lidx[j] = 0;
            } else {
                if (++ridx[axis] < real_counts_[axis]) break;
                ridx[axis] = 0;
            }
        }
        if (axis < 0) return;
    }
}

double integrate_G(const Window& w, double step,
                   const std::function<double(const GroupElement&)>& f) {
    WindowGrid grid(w, step);
    CompensatedSum acc;
    grid.for_each([&](const GroupElement& p, double weight) { acc.add(f(p) * weight); });
    return acc.value();
}

Complex integrate_G_complex(const Window& w, double step,
                            const std::function<Complex(const GroupElement&)>& f) {
    WindowGrid grid(w, step);
    CompensatedSum re, im;
    grid.for_each([&](const GroupElement& p, double weight) {
        const Complex v = f(p) * weight;
        re.add(v.real());
        im.add(v.imag());
    });
    return {re.value(), im.value()};
}

}  // namespace tglab
