#pragma once

// K-fold cross-validation over a hyperparameter grid and selection by
// confidence-interval counts of the out-of-sample R^2 values.

#include "bondtca/parallel.hpp"
#include "bondtca/regress.hpp"

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace bondtca {

struct GridPoint {
    double lambda = 0.0;
    double alpha = 1.0;
};

/// `count` log-uniform values from lo to hi inclusive.
std::vector<double> log_grid(double lo, double hi, std::size_t count);

struct CVPoint {
    GridPoint mu;
    std::vector<double> r2;   // one out-of-sample R^2 per fold
    double mean = 0.0;
    double sd = 0.0;          // sample std over folds
    std::size_t in_i1 = 0;    // inside mean +- sd/sqrt(K)
    std::size_t in_i2 = 0;    // inside mean +- sd
    double mean_abs_coef = 0.0;
    bool degenerate = false;  // all coefficients numerically zero
    std::string error;        // set when a fold fit failed; the point is then never selected
};

/// Interval statistics for one grid point's fold values.
CVPoint summarize_fold_r2(GridPoint mu, std::vector<double> r2, double mean_abs_coef = 1.0);

struct CVReport {
    Model model = Model::lasso;
    std::size_t k = 0;
    std::uint64_t seed = 0;
    std::vector<CVPoint> points;
};

/// Row indices of each fold: a seeded shuffle cut into K near-equal blocks.
std::vector<std::vector<std::size_t>> make_folds(std::size_t n, std::size_t k, std::uint64_t seed);

CVReport k_fold_cv(const Dataset& data, Model model, const std::vector<GridPoint>& grid, std::size_t k,
                   std::uint64_t seed, Execution exec = Execution::parallel, const FitOptions& opts = {});

inline constexpr double kDegenerateCoefficient = 1e-10;

/// Index of the chosen point: non-degenerate and fitted, most values inside I1, then
/// most inside I2, then the larger lambda.
std::size_t select_by_ci(const CVReport& report);

nlohmann::json cv_report_to_json(const CVReport& report);

}  // namespace bondtca
