#ifndef TGLAB_INDUCED_HPP
#define TGLAB_INDUCED_HPP

#include "tglab/convergence.hpp"
#include "tglab/quotient.hpp"
#include "tglab/scenario.hpp"

// Induced-representation functionals: matrix coefficients against the
// window-normalized vectors, the cut-down kernel operator whose trace is a
// squared Hilbert-Schmidt norm, the dual-action twist, and the multiplicity
// sandwich combining trace evidence with measured accumulation bounds.
namespace tglab {

// 1 on [-plateau, plateau], linear ramp to 0 at plateau + ramp
struct PlateauShape {
    double plateau = 0.0;
    double ramp = 0.0;

    double operator()(double x) const;
    double integral() const { return 2.0 * (plateau + 0.5 * ramp); }
    double square_integral() const { return 2.0 * (plateau + ramp / 3.0); }
    double support_radius() const { return plateau + ramp; }
};

// F is a plateau profile along the limit orbit direction times transverse
// cutoffs, normalized so the induced vector has unit L2 norm; b is the
// cut-down kernel, identically 1/alpha_z(S_z) on the difference set of
// supp F_z times supp F and supported in N x X.
struct KernelSpec {
    XPoint limit;
    int orbit_axis = 0;
    PlateauShape orbit_shape;
    double transverse_plateau = 0.0;  // transverse cutoff: 1 within, 0 at twice
    XBox support;                     // the configured V1
    double normalization = 1.0;
    double scale = 1.0;  // multiplies F; 0 gives the zero operator
    double norm_defect = 0.0;
    double b_height = 1.0;  // 1 / alpha_z(S_z)
    PlateauShape b_shape;   // per group axis
    Window N_window;        // symmetric compact support of b in G

    double F(const XPoint& p) const;
    double b(const GroupElement& r, const XPoint& x) const;
};

// preconditions: declared facts (orbit locally closed, stabilizer compact,
// preimage relatively compact) and S_z actually compact; errors otherwise
KernelSpec build_kernel_spec(const Scenario& sc, const XBox& V);

struct TraceEstimate {
    int index = -1;  // -1 denotes the limit point
    double value = 0.0;
    double error_bound = 0.0;
    double kernel_norm_sq = 0.0;  // equals value by construction
    double max_upsilon = 0.0;
    double symmetry_defect = 0.0;
    KernelSpec construction;  // the kernel parameters behind the estimate
};

TraceEstimate trace_estimate(const Scenario& sc, const KernelSpec& spec, int n);

// elementary tensor f = h (x) g
struct ElementaryTensor {
    std::function<double(const GroupElement&)> h;
    double h_radius = 1.0;
    std::function<double(const XPoint&)> g;
    double scale = 1.0;
};

// matrix coefficient of Ind(x, 1)(f) against the normalized window vector
// translated by t; evaluated through the cross-section reduction
Complex psi_functional(const Scenario& sc, const XPoint& x, const GroupElement& translator,
                       const ElementaryTensor& f, double window_radius, double step);

// exact coset-disjointness of the supporting windows: translated vectors are
// orthogonal once the pairwise differences escape the doubled window
bool translator_vectors_orthogonal(const Scenario& sc, const TranslatorCertificate& cert,
                                   int n, double window_radius);

// ---- dual action -------------------------------------------------------------

// samples of a kernel on a uniform 1-d grid in G: value index i sits at
// (i - offset) * step on the first real axis
struct SampledKernel {
    double step = 1.0;
    int offset = 0;
    std::vector<Complex> values;

    Complex at(double r) const;
    GroupElement grid_point(int i) const;
};

SampledKernel sample_line_kernel(const std::function<double(double)>& h, double radius,
                                 double step);
// pointwise multiplication by the character: the dual-action twist
SampledKernel dual_twist(const SampledKernel& data, const Character& tau);

// dense matrix of Ind(x, tau)(h (x) g) on the uniform quotient grid over
// [-L, L]; when tau is null the twist must already live in the samples
Eigen::MatrixXcd induced_rep_matrix(const Action& a, const XPoint& x,
                                    const SampledKernel& h_samples,
                                    const std::function<double(const XPoint&)>& g,
                                    const Character* tau, double L, double step);

// ---- multiplicity sandwich ----------------------------------------------------

struct MultiplicityBoundReport {
    int k_hypothesis = 1;
    double measured_M = 0.0;
    double snapped_M = 0.0;  // integer-snapped within ratio_tol before flooring
    int floor_M = 0;         // upper bound, linear form
    int floor_M_squared = 0;  // upper bound, squared form
    // which inequality each bound comes from
    std::string floor_M_source = "linear accumulation bound floor(M)";
    std::string floor_M_squared_source = "squared accumulation bound floor(M^2)";
    double lower_evidence = 0.0;  // tail-min trace relative to the limit trace
    double snapped_lower = 0.0;
    double trace_at_limit = 0.0;
    bool trace_available = false;
    std::vector<int> frequency_set;  // indices with ratio <= snapped_M (+slack)
    bool sandwich_fault = false;     // lower evidence above the upper bound
    std::string verdict;  // consistent | refuted | inconclusive | not-applicable | fault
};

MultiplicityBoundReport multiplicity_report(const Scenario& sc, int k, double measured_M,
                                            const std::vector<double>& ratio_series,
                                            int ratio_first_index,
                                            const std::vector<double>& trace_series,
                                            double trace_at_limit, bool trace_available,
                                            double ratio_tol);

// ---- kernel-sum bound ----------------------------------------------------------

// Upsilon_n <= 2 (1 + eps) past the Fell threshold. Direct kernel sampling for
// compact (trivial) limit stabilizers; for noncompact limit stabilizers the
// operative middle term is checked instead: the subgroup integrals of a
// plateau against alpha_{x_n} stay within (1 + eps) of the limit integral.
struct UpsilonReport {
    double max_value = 0.0;
    double bound = 0.0;
    bool satisfied = false;
    bool surrogate = false;  // true when the Haar-continuity form was used
    int first_index = 0;
    int last_index = 0;
};

UpsilonReport upsilon_bound_report(const Scenario& sc, double eps, int fell_threshold,
                                   int sample_count);

}  // namespace tglab

#endif
