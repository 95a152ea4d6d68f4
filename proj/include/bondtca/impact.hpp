#pragma once

// Transient impact (propagator) models in event time.
//
// Mid-prices enter as log-mids in basis points, x_k = 1e4 ln M_k, so one-step
// returns R_k = x_{k+1} - x_k are relative changes and kernels are in bp.
// With u_k = V_k^alpha eps_k:
//
//     C(n) = E[u_{t+n} u_t],   S(l) = E[R_k u_{k-l+1}],
//     S(l) = G(0) C(l) + sum_j dG(j) C(l-j-1).
//
// At alpha = 0 these are the sign correlations and sign responses.

#include "bondtca/parallel.hpp"

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace bondtca {

struct SignSeries {
    std::string cusip;
    std::vector<int> eps;        // -1 / +1
    std::vector<double> volume;  // > 0
    std::vector<int> type;       // event type, -1 / +1
    std::vector<double> mid;     // > 0, mid after the event

    std::size_t size() const noexcept { return eps.size(); }
};

/// Throws DataError on length mismatch, zero signs or non-positive values.
void validate(const SignSeries& s);

std::vector<double> signed_volume(const SignSeries& s, double alpha);
std::vector<double> log_mid_bp(const SignSeries& s);
std::vector<double> returns_bp(const SignSeries& s);

/// C(0..max_lag).
std::vector<double> estimate_correlation(const std::vector<double>& u, std::size_t max_lag,
                                         Execution exec = Execution::parallel);

/// S(0..max_lag); S(0) = E[R_k u_{k+1}] is the contemporaneous term.
std::vector<double> estimate_response(const std::vector<double>& u, const std::vector<double>& r, std::size_t max_lag,
                                      Execution exec = Execution::parallel);

/// G(0) = E[R_k u_{k+1}] / E[u^2].
double estimate_g0(const std::vector<double>& u, const std::vector<double>& r);

struct ImpactKernel {
    std::string model = "tim1";
    std::vector<int> types{0};              // 0 for TIM1; +1 / -1 for TIM2
    std::vector<std::vector<double>> g;     // per type, G(0..N)
    std::vector<std::vector<double>> dg;    // per type, dG(0..N-1)
    std::size_t n = 0;
    std::size_t l = 0;
    double alpha = 0.0;
    double condition_number = 0.0;

    /// G(j) with the plateau G(N) beyond N.
    double at(std::size_t type_index, std::size_t j) const;
};

inline constexpr double kMaxCondition = 1e12;

/// L x N system for dG given G(0); square systems by LU, L > N by least squares.
ImpactKernel solve_tim1(const std::vector<double>& c, const std::vector<double>& s, double g0, std::size_t n,
                        std::size_t l);

/// Solves for G(0) and dG together, adding the contemporaneous equation S(0).
ImpactKernel solve_tim1_joint(const std::vector<double>& c, const std::vector<double>& s, std::size_t n, std::size_t l);

/// Two-type statistics. ct[a][b][n + offset] = E[u_t 1(pi_t=a) u_{t+n} 1(pi_{t+n}=b)] / P(a)
/// for n in [-offset, max_lag]; s[a][l] = E[R_k u_{k-l+1} 1(pi_{k-l+1}=a)] / P(a).
/// Index 0 is type +1, index 1 is type -1.
struct TypedMoments {
    double p[2]{0.0, 0.0};
    std::size_t count[2]{0, 0};
    std::size_t offset = 0;
    std::size_t max_lag = 0;
    std::vector<double> ct[2][2];
    std::vector<double> s[2];
    bool types_follow_signs = false;
    bool constant_magnitude = false;

    double ctilde(int a, int b, long n) const { return ct[a][b][static_cast<std::size_t>(n + static_cast<long>(offset))]; }
    /// Joint second moment E[u_t 1(a) u_{t+n} 1(b)].
    double gamma(int a, int b, long n) const { return p[a] * ctilde(a, b, n); }
};

TypedMoments estimate_typed_moments(const std::vector<double>& u, const std::vector<int>& type,
                                    const std::vector<double>& r, std::size_t back, std::size_t max_lag,
                                    Execution exec = Execution::parallel);

/// Joint block system for both types: unknowns (G_a(0), dG_a(0..N-1)) per
/// type, equations S_a(l) for l = 0..L.
ImpactKernel solve_tim2(const TypedMoments& m, std::size_t n, std::size_t l);

struct SignaturePlot {
    std::vector<double> d_emp;   // index l-1
    std::vector<double> se;      // standard error of d_emp
    std::vector<double> d_model; // including d_const
    double d_const = 0.0;
};

/// D(l) = (1/l) mean_t (x_{t+l} - x_t)^2 for l = 1..l_max, with standard
/// errors from non-overlapping windows.
void empirical_signature(const std::vector<double>& x, std::size_t l_max, std::vector<double>& d,
                         std::vector<double>& se);

/// Model-implied diffusion without the constant, for l = 1..l_max. The
/// correlations `c` must cover lags 0..N+l_max.
std::vector<double> model_signature_tim1(const ImpactKernel& kernel, const std::vector<double>& c, std::size_t l_max);
std::vector<double> model_signature_tim2(const ImpactKernel& kernel, const TypedMoments& m, std::size_t l_max);

/// Least-squares constant: mean of (d_emp - raw).
double fit_d_const(const std::vector<double>& d_emp, const std::vector<double>& raw);

SignaturePlot make_signature(const std::vector<double>& d_emp, const std::vector<double>& se,
                             const std::vector<double>& raw);

/// Number of lags where |d_model - d_emp| > z * se.
std::size_t band_violations(const SignaturePlot& plot, double z = 3.0);
double squared_deviation(const SignaturePlot& plot);

enum class G0Mode { projection, joint };

struct ImpactConfig {
    std::size_t n = 10;
    std::size_t l = 10;
    double alpha = 0.0;
    std::size_t l_max = 10;
    G0Mode g0_mode = G0Mode::projection;
    bool tim2 = true;
    Execution exec = Execution::parallel;
};

struct BondImpact {
    std::string cusip;
    std::size_t events = 0;
    ImpactKernel tim1;
    std::optional<ImpactKernel> tim2;
    std::string tim2_error;
    SignaturePlot signature_tim1;
    std::optional<SignaturePlot> signature_tim2;
};

BondImpact estimate_bond_impact(const SignSeries& series, const ImpactConfig& config);

/// Equal-weight average of per-bond kernels of the same shape.
ImpactKernel aggregate_kernels(const std::vector<const ImpactKernel*>& kernels);

nlohmann::json kernel_to_json(const ImpactKernel& k, const std::string& id);

}  // namespace bondtca
