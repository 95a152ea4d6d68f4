#include "bondtca/cross_validation.hpp"

#include "bondtca/error.hpp"
#include "bondtca/rng.hpp"

#include <cmath>
#include <numeric>

namespace bondtca {

std::vector<double> log_grid(double lo, double hi, std::size_t count) {
    if (!(lo > 0.0) || !(hi >= lo)) throw ConfigError("log grid needs 0 < lo <= hi");
    if (count == 0) throw ConfigError("log grid needs at least one point");
    std::vector<double> out(count);
    if (count == 1) {
        out[0] = lo;
        return out;
    }
    const double a = std::log10(lo), b = std::log10(hi);
    for (std::size_t i = 0; i < count; ++i) {
        out[i] = std::pow(10.0, a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1));
    }
    out.front() = lo;
    out.back() = hi;
    return out;
}

CVPoint summarize_fold_r2(GridPoint mu, std::vector<double> r2, double mean_abs_coef) {
    CVPoint p;
    p.mu = mu;
    p.r2 = std::move(r2);
    const double k = static_cast<double>(p.r2.size());
    p.mean = std::accumulate(p.r2.begin(), p.r2.end(), 0.0) / k;
    double ss = 0.0;
    for (double v : p.r2) ss += (v - p.mean) * (v - p.mean);
    p.sd = p.r2.size() > 1 ? std::sqrt(ss / (k - 1.0)) : 0.0;
    const double h1 = p.sd / std::sqrt(k);
    const double slack = 1e-12 * (1.0 + std::abs(p.mean));
    for (double v : p.r2) {
        const double d = std::abs(v - p.mean);
        if (d <= h1 + slack) ++p.in_i1;
        if (d <= p.sd + slack) ++p.in_i2;
    }
    p.mean_abs_coef = mean_abs_coef;
    p.degenerate = mean_abs_coef < kDegenerateCoefficient;
    return p;
}

std::vector<std::vector<std::size_t>> make_folds(std::size_t n, std::size_t k, std::uint64_t seed) {
    if (k < 2) throw ConfigError("K must be at least 2");
    if (n < k) throw DataError("cannot split " + std::to_string(n) + " rows into " + std::to_string(k) + " folds");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    CounterRng rng(seed, 0x6366);
    rng.shuffle(order);
    std::vector<std::vector<std::size_t>> folds(k);
    for (std::size_t f = 0; f < k; ++f) {
        const std::size_t lo = f * n / k, hi = (f + 1) * n / k;
        folds[f].assign(order.begin() + static_cast<std::ptrdiff_t>(lo), order.begin() + static_cast<std::ptrdiff_t>(hi));
    }
    return folds;
}

namespace {

struct FoldOutcome {
    double r2 = 0.0;
    double mean_abs_coef = 0.0;
};

FoldOutcome run_fold(const Dataset& train, const Dataset& test, Model model, GridPoint mu, const FitOptions& opts) {
    const FitResult fit = fit_model(train, model, mu.lambda, mu.alpha, opts);
    FoldOutcome out;
    out.r2 = r_squared(test.y, predict(fit, test.X), train.y.mean());
    out.mean_abs_coef = fit.coef.size() ? fit.coef.cwiseAbs().mean() : 0.0;
    return out;
}

}  // namespace

CVReport k_fold_cv(const Dataset& data, Model model, const std::vector<GridPoint>& grid, std::size_t k,
                   std::uint64_t seed, Execution exec, const FitOptions& opts) {
    if (grid.empty()) throw ConfigError("hyperparameter grid is empty");
    const auto folds = make_folds(data.rows(), k, seed);
    std::vector<Dataset> train(k), test(k);
    for (std::size_t f = 0; f < k; ++f) {
        std::vector<std::size_t> rows;
        for (std::size_t g = 0; g < k; ++g) {
            if (g != f) rows.insert(rows.end(), folds[g].begin(), folds[g].end());
        }
        const bool ols_family = model == Model::ols || model == Model::lslasso;
        if (ols_family && rows.size() <= data.cols() + 1) {
            throw DataError("training fold has " + std::to_string(rows.size()) + " rows for " +
                            std::to_string(data.cols() + 1) + " parameters; use more data or a smaller K");
        }
        train[f] = data.subset(rows);
        test[f] = data.subset(folds[f]);
    }

    const std::size_t tasks = grid.size() * k;
    std::vector<FoldOutcome> slots(tasks);
    std::vector<std::string> errors(tasks);
    std::vector<char> config_error(tasks, 0);
    auto run = [&](std::size_t t) {
        try {
            slots[t] = run_fold(train[t % k], test[t % k], model, grid[t / k], opts);
        } catch (const ConfigError& e) {
            errors[t] = e.what();
            config_error[t] = 1;
        } catch (const std::exception& e) {
            errors[t] = e.what();
        }
    };
    if (exec == Execution::parallel) {
        const std::ptrdiff_t nt = static_cast<std::ptrdiff_t>(tasks);
        BONDTCA_PARALLEL_FOR_DYNAMIC
        for (std::ptrdiff_t t = 0; t < nt; ++t) run(static_cast<std::size_t>(t));
    } else {
        for (std::size_t t = 0; t < tasks; ++t) run(t);
    }
    for (std::size_t t = 0; t < tasks; ++t) {
        if (config_error[t]) throw ConfigError(errors[t]);
    }

    CVReport report;
    report.model = model;
    report.k = k;
    report.seed = seed;
    for (std::size_t g = 0; g < grid.size(); ++g) {
        std::string failure;
        for (std::size_t f = 0; f < k && failure.empty(); ++f) {
            if (!errors[g * k + f].empty()) failure = "fold " + std::to_string(f) + ": " + errors[g * k + f];
        }
        if (!failure.empty()) {
            CVPoint p;
            p.mu = grid[g];
            p.error = failure;
            report.points.push_back(std::move(p));
            continue;
        }
        std::vector<double> r2(k);
        double coef = 0.0;
        for (std::size_t f = 0; f < k; ++f) {
            r2[f] = slots[g * k + f].r2;
            coef += slots[g * k + f].mean_abs_coef;
        }
        report.points.push_back(summarize_fold_r2(grid[g], std::move(r2), coef / static_cast<double>(k)));
    }
    return report;
}

std::size_t select_by_ci(const CVReport& report) {
    if (report.points.empty()) throw ConfigError("empty cross-validation report");
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < report.points.size(); ++i) {
        const auto& p = report.points[i];
        if (p.degenerate || !p.error.empty()) continue;
        if (!best) {
            best = i;
            continue;
        }
        const auto& b = report.points[*best];
        if (p.in_i1 != b.in_i1) {
            if (p.in_i1 > b.in_i1) best = i;
        } else if (p.in_i2 != b.in_i2) {
            if (p.in_i2 > b.in_i2) best = i;
        } else if (p.mu.lambda > b.mu.lambda) {
            best = i;
        }
    }
    if (!best) {
        throw NumericalError("no usable grid point: every point is degenerate (all coefficients zero) or failed to fit");
    }
    return *best;
}

nlohmann::json cv_report_to_json(const CVReport& report) {
    nlohmann::json points = nlohmann::json::array();
    for (const auto& p : report.points) {
        if (!p.error.empty()) {
            points.push_back({{"lambda", p.mu.lambda}, {"alpha", p.mu.alpha}, {"error", p.error}});
            continue;
        }
        points.push_back({{"lambda", p.mu.lambda},
                          {"alpha", p.mu.alpha},
                          {"r2_folds", p.r2},
                          {"r2_mean", p.mean},
                          {"r2_sd", p.sd},
                          {"in_i1", p.in_i1},
                          {"in_i2", p.in_i2},
                          {"mean_abs_coef", p.mean_abs_coef},
                          {"degenerate", p.degenerate}});
    }
    return points;
}

}  // namespace bondtca
