#pragma once

// Linear cost models: OLS, ridge, lasso, elastic net and the two-step
// lasso (lasso selection followed by an OLS refit on the support).
//
// Penalized objective, on covariates standardized to unit sample variance:
//
//     (1/2N) ||y - b0 - Z b||^2 + lambda * (alpha * sum|b_j| + (1 - alpha)/2 * sum b_j^2)
//
// The intercept is never penalized. alpha = 0 is ridge, alpha = 1 is lasso.

#include "bondtca/features.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace bondtca {

/// Design without the intercept column; every fit adds an intercept.
struct Dataset {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    std::vector<std::string> names;

    std::size_t rows() const { return static_cast<std::size_t>(X.rows()); }
    std::size_t cols() const { return static_cast<std::size_t>(X.cols()); }
    Dataset subset(const std::vector<std::size_t>& rows) const;
    Dataset columns(const std::vector<std::size_t>& cols) const;
};

/// Builds a dataset from feature rows using the named columns.
Dataset make_dataset(const std::vector<FeatureRow>& rows, const std::vector<std::string>& features);

/// All 27 covariates except ind_IG (collinear with ind_HY under the intercept).
std::vector<std::string> default_penalized_features();
/// Full-rank OLS set: additionally drops S9, prop_n_sell and prop_vol_sell.
std::vector<std::string> default_ols_features();

enum class Model { ols, ridge, lasso, lslasso, elastic_net };
Model parse_model(std::string_view text);
std::string_view to_string(Model m);

struct FitOptions {
    double tol = 1e-7;  // max standardized coefficient change per sweep
    int max_iter = 100'000;
    bool record_objective = false;
};

struct FitResult {
    Model model = Model::ols;
    double lambda = 0.0;
    double alpha = 1.0;
    double intercept = 0.0;
    Eigen::VectorXd coef;  // original scale, one per covariate
    std::vector<std::string> names;
    std::vector<std::size_t> support;  // 0-based covariate indices with coef != 0
    double r2 = 0.0;                   // in-sample
    std::optional<Eigen::VectorXd> std_errors;  // intercept first
    std::optional<Eigen::VectorXd> p_values;    // intercept first
    bool converged = true;
    int iterations = 0;
    std::vector<double> objective_trace;  // per sweep, when requested
};

FitResult fit_ols(const Dataset& data);
FitResult fit_ridge(const Dataset& data, double lambda);
FitResult fit_lasso(const Dataset& data, double lambda, const FitOptions& opts = {});
FitResult fit_elastic_net(const Dataset& data, double lambda, double alpha, const FitOptions& opts = {});
/// OLS on the first stage's support; coefficients outside it are zero.
FitResult post_refit(const Dataset& data, const FitResult& first_stage);
FitResult fit_model(const Dataset& data, Model model, double lambda, double alpha, const FitOptions& opts = {});

/// Smallest lambda with an all-zero lasso solution: max_j |z_j' (y - ybar)| / N.
double lambda_max(const Dataset& data, double alpha = 1.0);

/// Value of the penalized objective (original-scale coefficients).
double penalized_objective(const Dataset& data, const FitResult& fit);

/// Largest violation of the optimality conditions, in gradient units.
double kkt_violation(const Dataset& data, const FitResult& fit);

Eigen::VectorXd predict(const FitResult& fit, const Eigen::MatrixXd& X);
double predict(const FitResult& fit, const FeatureRow& row);

/// 1 - SSE/SST with SST taken about `center`; 0 when SST is 0.
double r_squared(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat, double center);

/// Mean of |truth - pred| / |truth|.
double relative_error(const Eigen::VectorXd& truth, const Eigen::VectorXd& pred);

nlohmann::json fit_to_json(const FitResult& fit);

}  // namespace bondtca
