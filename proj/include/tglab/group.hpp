#ifndef TGLAB_GROUP_HPP
#define TGLAB_GROUP_HPP

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

// Ambient group G = R^a x Z^b: arithmetic, compact windows, characters and
// Haar (Lebesgue x counting) integration. Everything is a value; every
// operation is a pure function.
namespace tglab {

using Vec = Eigen::VectorXd;
using IntVec = Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>;
using Complex = std::complex<double>;

struct GroupDescriptor {
    int real_rank = 0;     // a
    int lattice_rank = 0;  // b

    bool operator==(const GroupDescriptor&) const = default;
    int dim() const { return real_rank + lattice_rank; }
};

struct GroupElement {
    Vec real;      // size a
    IntVec lattice;  // size b, exact integers

    GroupDescriptor descriptor() const {
        return {static_cast<int>(real.size()), static_cast<int>(lattice.size())};
    }
};

GroupElement zero_element(const GroupDescriptor& g);
GroupElement make_element(const GroupDescriptor& g, const Vec& real, const IntVec& lattice);
GroupElement make_real_element(std::initializer_list<double> coords);

GroupElement group_op(const GroupElement& g, const GroupElement& h);
GroupElement group_inverse(const GroupElement& g);
GroupElement group_sub(const GroupElement& g, const GroupElement& h);

// sup-norm over all coordinates (lattice coordinates cast to double)
double norm_inf(const GroupElement& g);
double norm_two(const GroupElement& g);

// strict lexicographic order on (real, lattice) coordinates; deterministic
// tie-breaking throughout the library hangs off this
bool lex_less(const GroupElement& a, const GroupElement& b);

// Compact box |x_i - c_i| <= radius per coordinate; lattice coordinates range
// over the integers inside the same band.
struct Window {
    GroupElement center;
    double radius = 0.0;

    bool contains(const GroupElement& g) const;
};

Window centered_window(const GroupDescriptor& g, double radius);

// characters tau(g) = exp(2*pi*i*(<freqs, real> + <angles, lattice>))
struct Character {
    Vec real_freqs;    // size a
    Vec lattice_angles;  // size b, taken mod 1

    bool is_trivial() const {
        return real_freqs.isZero(0.0) && lattice_angles.isZero(0.0);
    }
};

Complex character_eval(const Character& tau, const GroupElement& g);

// f0(t) = prod_i max(0, 1 - |t_i|/radius); f0(e) = 1 exactly, 0 <= f0 <= 1,
// support contained in the window of the same radius.
struct BumpFunction {
    enum class Kind { TriangularProduct };
    Kind kind = Kind::TriangularProduct;
    double support_radius = 1.0;

    double operator()(const GroupElement& g) const;
};

// Neumaier compensated accumulator; fixed summation order is the caller's job.
class CompensatedSum {
  public:
    void add(double v) {
        const double t = sum_ + v;
        if (std::abs(sum_) >= std::abs(v))
            carry_ += (sum_ - t) + v;
        else
            carry_ += (v - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + carry_; }

  private:
    double sum_ = 0.0;
    double carry_ = 0.0;
};

// Midpoint-rule product grid over the real coordinates of a window; exact
// enumeration of the lattice coordinates. Lexicographic visiting order.
class WindowGrid {
  public:
    WindowGrid(const Window& w, double step);

    // invokes fn(point, weight) in lexicographic order
    void for_each(const std::function<void(const GroupElement&, double)>& fn) const;

    double cell_weight() const { return weight_; }
    std::int64_t point_count() const { return count_; }
    double adjusted_step(int axis) const { return steps_[axis]; }

  private:
    GroupDescriptor desc_;
    Vec lo_;
    std::vector<std::int64_t> real_counts_;
    std::vector<double> steps_;
    std::vector<std::int64_t> lat_lo_, lat_hi_;
    double weight_ = 1.0;
    std::int64_t count_ = 0;
};

// deterministic Haar integral of f over the window: midpoint product
// quadrature on R^a times exact summation on Z^b, compensated, fixed order
double integrate_G(const Window& w, double step,
                   const std::function<double(const GroupElement&)>& f);
Complex integrate_G_complex(const Window& w, double step,
                            const std::function<Complex(const GroupElement&)>& f);

// errors
struct DescriptorMismatch : std::invalid_argument {
    explicit DescriptorMismatch(const std::string& what) : std::invalid_argument(what) {}
};

}  // namespace tglab

#endif
