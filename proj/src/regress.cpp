#include "bondtca/regress.hpp"

#include "bondtca/error.hpp"

#include <algorithm>
#include <cmath>

namespace bondtca {

Dataset Dataset::subset(const std::vector<std::size_t>& rows) const {
    Dataset d;
    d.names = names;
    d.X.resize(static_cast<Eigen::Index>(rows.size()), X.cols());
    d.y.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto r = static_cast<Eigen::Index>(rows[i]);
        d.X.row(static_cast<Eigen::Index>(i)) = X.row(r);
        d.y(static_cast<Eigen::Index>(i)) = y(r);
    }
    return d;
}

Dataset Dataset::columns(const std::vector<std::size_t>& cols) const {
    Dataset d;
    d.y = y;
    d.X.resize(X.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) {
        d.X.col(static_cast<Eigen::Index>(j)) = X.col(static_cast<Eigen::Index>(cols[j]));
        d.names.push_back(names[cols[j]]);
    }
    return d;
}

Dataset make_dataset(const std::vector<FeatureRow>& rows, const std::vector<std::string>& features) {
    const auto& all = feature_names();
    std::vector<std::size_t> idx;
    for (const auto& f : features) {
        auto it = std::find(all.begin(), all.end(), f);
        if (it == all.end()) throw ConfigError("unknown feature '" + f + "'");
        idx.push_back(static_cast<std::size_t>(it - all.begin()));
    }
    Dataset d;
    d.names = features;
    d.X.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(idx.size()));
    d.y.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        d.y(static_cast<Eigen::Index>(i)) = rows[i].mean_s_bp;
        for (std::size_t j = 0; j < idx.size(); ++j) {
            d.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i].x[idx[j]];
        }
    }
    return d;
}

std::vector<std::string> default_penalized_features() {
    std::vector<std::string> out;
    for (auto n : feature_names()) {
        if (n != "ind_IG") out.emplace_back(n);
    }
    return out;
}

std::vector<std::string> default_ols_features() {
    std::vector<std::string> out;
    for (auto n : feature_names()) {
        if (n != "ind_IG" && n != "S9" && n != "prop_n_sell" && n != "prop_vol_sell") out.emplace_back(n);
    }
    return out;
}

Model parse_model(std::string_view text) {
    if (text == "ols") return Model::ols;
    if (text == "ridge") return Model::ridge;
    if (text == "lasso") return Model::lasso;
    if (text == "lslasso") return Model::lslasso;
    if (text == "en") return Model::elastic_net;
    throw ConfigError("unknown model '" + std::string(text) + "' (ols, ridge, lasso, lslasso, en)");
}

std::string_view to_string(Model m) {
    switch (m) {
        case Model::ols: return "ols";
        case Model::ridge: return "ridge";
        case Model::lasso: return "lasso";
        case Model::lslasso: return "lslasso";
        case Model::elastic_net: return "en";
    }
    return "?";
}

double r_squared(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat, double center) {
    const double sst = (y.array() - center).square().sum();
    if (sst == 0.0) return 0.0;
    return 1.0 - (y - yhat).squaredNorm() / sst;
}

double relative_error(const Eigen::VectorXd& truth, const Eigen::VectorXd& pred) {
    if (truth.size() != pred.size()) throw DataError("relative_error: length mismatch");
    if (truth.size() == 0) throw DataError("relative_error: empty input");
    double sum = 0.0;
    for (Eigen::Index i = 0; i < truth.size(); ++i) {
        if (truth(i) == 0.0) throw DataError("relative_error: zero truth entry at index " + std::to_string(i));
        sum += std::abs(truth(i) - pred(i)) / std::abs(truth(i));
    }
    return sum / static_cast<double>(truth.size());
}

Eigen::VectorXd predict(const FitResult& fit, const Eigen::MatrixXd& X) {
    return (X * fit.coef).array() + fit.intercept;
}

double predict(const FitResult& fit, const FeatureRow& row) {
    double v = fit.intercept;
    for (std::size_t j = 0; j < fit.names.size(); ++j) {
        const double c = fit.coef(static_cast<Eigen::Index>(j));
        if (c != 0.0) v += c * row.get(fit.names[j]);
    }
    return v;
}

namespace {

void finish(FitResult& fit, const Dataset& data) {
    fit.names = data.names;
    fit.support.clear();
    for (Eigen::Index j = 0; j < fit.coef.size(); ++j) {
        if (fit.coef(j) != 0.0) fit.support.push_back(static_cast<std::size_t>(j));
    }
    const double ybar = data.rows() ? data.y.mean() : 0.0;
    fit.r2 = r_squared(data.y, predict(fit, data.X), ybar);
}

struct Standardized {
    Eigen::MatrixXd Z;
    Eigen::VectorXd yc;
    Eigen::VectorXd mean;
    Eigen::VectorXd sd;  // 0 marks a constant column
    double ybar = 0.0;
};

Standardized standardize(const Dataset& data) {
    const auto n = data.X.rows();
    if (n < 2) throw DataError("need at least 2 observations, have " + std::to_string(n));
    Standardized s;
    s.mean = data.X.colwise().mean().transpose();
    s.Z = data.X.rowwise() - s.mean.transpose();
    s.sd = (s.Z.colwise().squaredNorm().transpose() / static_cast<double>(n - 1)).cwiseSqrt();
    for (Eigen::Index j = 0; j < s.Z.cols(); ++j) {
        if (s.sd(j) > 0.0) s.Z.col(j) /= s.sd(j);
        else s.Z.col(j).setZero();
    }
    s.ybar = data.y.mean();
    s.yc = data.y.array() - s.ybar;
    return s;
}

FitResult from_standardized(const Standardized& s, const Eigen::VectorXd& b) {
    FitResult fit;
    fit.coef = Eigen::VectorXd::Zero(b.size());
    for (Eigen::Index j = 0; j < b.size(); ++j) {
        if (s.sd(j) > 0.0) fit.coef(j) = b(j) / s.sd(j);
    }
    fit.intercept = s.ybar - s.mean.dot(fit.coef);
    return fit;
}

std::string column_name(const Dataset& data, Eigen::Index c) {
    return c == 0 ? std::string("intercept") : data.names[static_cast<std::size_t>(c - 1)];
}

}  // namespace

FitResult fit_ols(const Dataset& data) {
    const auto n = data.X.rows();
    const auto w = data.X.cols() + 1;
    if (n <= w) {
        throw DataError("OLS needs more observations than parameters (n=" + std::to_string(n) + ", w=" + std::to_string(w) + ")");
    }
    Eigen::MatrixXd A(n, w);
    A.col(0).setOnes();
    A.rightCols(w - 1) = data.X;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
    if (qr.rank() < w) {
        std::string cols;
        const auto& perm = qr.colsPermutation().indices();
        for (Eigen::Index i = qr.rank(); i < w; ++i) cols += (cols.empty() ? "" : ", ") + column_name(data, perm(i));
        throw DataError("design matrix is rank deficient (rank " + std::to_string(qr.rank()) + " of " + std::to_string(w) +
                        "); dependent column(s): " + cols);
    }
    const Eigen::VectorXd theta = qr.solve(data.y);
    FitResult fit;
    fit.model = Model::ols;
    fit.intercept = theta(0);
    fit.coef = theta.tail(w - 1);
    finish(fit, data);

    const Eigen::VectorXd resid = data.y - A * theta;
    const double sigma2 = resid.squaredNorm() / static_cast<double>(n - w);
    const Eigen::MatrixXd R = qr.matrixR().topLeftCorner(w, w).triangularView<Eigen::Upper>();
    const Eigen::MatrixXd Rinv = R.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(w, w));
    const Eigen::MatrixXd cov_perm = Rinv * Rinv.transpose();
    const auto& perm = qr.colsPermutation().indices();
    Eigen::VectorXd se(w), pv(w);
    for (Eigen::Index i = 0; i < w; ++i) se(perm(i)) = std::sqrt(sigma2 * cov_perm(i, i));
    for (Eigen::Index i = 0; i < w; ++i) {
        const double t = se(i) > 0.0 ? std::abs(theta(i)) / se(i) : std::numeric_limits<double>::infinity();
        pv(i) = std::erfc(t / std::sqrt(2.0));
    }
    fit.std_errors = se;
    fit.p_values = pv;
    return fit;
}

FitResult fit_ridge(const Dataset& data, double lambda) {
    if (lambda < 0.0) throw ConfigError("ridge lambda must be non-negative");
    const Standardized s = standardize(data);
    const double n = static_cast<double>(data.rows());
    const auto p = data.X.cols();
    Eigen::MatrixXd G = s.Z.transpose() * s.Z / n;
    G.diagonal().array() += lambda;
    // Constant columns carry no information; pin their coefficient at zero.
    for (Eigen::Index j = 0; j < p; ++j) {
        if (s.sd(j) == 0.0) {
            G.row(j).setZero();
            G.col(j).setZero();
            G(j, j) = 1.0;
        }
    }
    const Eigen::VectorXd rhs = s.Z.transpose() * s.yc / n;
    const Eigen::VectorXd b = G.ldlt().solve(rhs);
    FitResult fit = from_standardized(s, b);
    fit.model = Model::ridge;
    fit.lambda = lambda;
    fit.alpha = 0.0;
    finish(fit, data);
    return fit;
}

namespace {

// Ties within rounding of the threshold count as inside it, so lambda_max gives the empty support.
double soft_threshold(double z, double g) {
    if (std::abs(z) <= g * (1.0 + 1e-12)) return 0.0;
    if (z > g) return z - g;
    if (z < -g) return z + g;
    return 0.0;
}

double standardized_objective(const Eigen::VectorXd& r, const Eigen::VectorXd& b, double lambda, double alpha) {
    const double n = static_cast<double>(r.size());
    return r.squaredNorm() / (2.0 * n) + lambda * (alpha * b.lpNorm<1>() + 0.5 * (1.0 - alpha) * b.squaredNorm());
}

}  // namespace

FitResult fit_elastic_net(const Dataset& data, double lambda, double alpha, const FitOptions& opts) {
    if (lambda < 0.0) throw ConfigError("lambda must be non-negative");
    if (alpha < 0.0 || alpha > 1.0) throw ConfigError("alpha must lie in [0, 1]");
    const Standardized s = standardize(data);
    const auto p = data.X.cols();
    const double n = static_cast<double>(data.rows());
    Eigen::VectorXd v(p);
    for (Eigen::Index j = 0; j < p; ++j) v(j) = s.Z.col(j).squaredNorm() / n;

    Eigen::VectorXd b = Eigen::VectorXd::Zero(p);
    Eigen::VectorXd r = s.yc;
    const double l1 = lambda * alpha;
    const double l2 = lambda * (1.0 - alpha);
    FitResult fit;
    fit.converged = false;
    if (opts.record_objective) fit.objective_trace.push_back(standardized_objective(r, b, lambda, alpha));
    int sweep = 0;
    while (sweep < opts.max_iter) {
        ++sweep;
        double max_change = 0.0;
        for (Eigen::Index j = 0; j < p; ++j) {
            if (v(j) == 0.0) continue;
            const double old = b(j);
            const double rho = s.Z.col(j).dot(r) / n + v(j) * old;
            const double updated = soft_threshold(rho, l1) / (v(j) + l2);
            const double delta = updated - old;
            if (delta != 0.0) {
                r.noalias() -= delta * s.Z.col(j);
                b(j) = updated;
                max_change = std::max(max_change, std::abs(delta));
            }
        }
        if (opts.record_objective) fit.objective_trace.push_back(standardized_objective(r, b, lambda, alpha));
        if (max_change < opts.tol) {
            fit.converged = true;
            break;
        }
    }
    FitResult out = from_standardized(s, b);
    out.model = alpha == 1.0 ? Model::lasso : Model::elastic_net;
    out.lambda = lambda;
    out.alpha = alpha;
    out.converged = fit.converged;
    out.iterations = sweep;
    out.objective_trace = std::move(fit.objective_trace);
    finish(out, data);
    return out;
}

FitResult fit_lasso(const Dataset& data, double lambda, const FitOptions& opts) {
    return fit_elastic_net(data, lambda, 1.0, opts);
}

FitResult post_refit(const Dataset& data, const FitResult& first_stage) {
    FitResult out;
    if (first_stage.support.empty()) {
        out.intercept = data.y.mean();
        out.coef = Eigen::VectorXd::Zero(data.X.cols());
        finish(out, data);
        const double n = static_cast<double>(data.rows());
        const double sd = std::sqrt((data.y.array() - out.intercept).square().sum() / (n - 1.0));
        Eigen::VectorXd se = Eigen::VectorXd::Zero(data.X.cols() + 1);
        Eigen::VectorXd pv = Eigen::VectorXd::Ones(data.X.cols() + 1);
        se(0) = sd / std::sqrt(n);
        pv(0) = se(0) > 0.0 ? std::erfc(std::abs(out.intercept) / se(0) / std::sqrt(2.0)) : 0.0;
        out.std_errors = se;
        out.p_values = pv;
    } else {
        const FitResult restricted = fit_ols(data.columns(first_stage.support));
        out.intercept = restricted.intercept;
        out.coef = Eigen::VectorXd::Zero(data.X.cols());
        Eigen::VectorXd se = Eigen::VectorXd::Constant(data.X.cols() + 1, std::numeric_limits<double>::quiet_NaN());
        Eigen::VectorXd pv = Eigen::VectorXd::Constant(data.X.cols() + 1, std::numeric_limits<double>::quiet_NaN());
        se(0) = (*restricted.std_errors)(0);
        pv(0) = (*restricted.p_values)(0);
        for (std::size_t i = 0; i < first_stage.support.size(); ++i) {
            const auto j = static_cast<Eigen::Index>(first_stage.support[i]);
            const auto k = static_cast<Eigen::Index>(i);
            out.coef(j) = restricted.coef(k);
            se(j + 1) = (*restricted.std_errors)(k + 1);
            pv(j + 1) = (*restricted.p_values)(k + 1);
        }
        finish(out, data);
        out.std_errors = se;
        out.p_values = pv;
    }
    // The support is the selection, even if a refit coefficient is exactly zero.
    out.support = first_stage.support;
    out.model = Model::lslasso;
    out.lambda = first_stage.lambda;
    out.alpha = first_stage.alpha;
    out.converged = first_stage.converged;
    out.iterations = first_stage.iterations;
    return out;
}

FitResult fit_model(const Dataset& data, Model model, double lambda, double alpha, const FitOptions& opts) {
    switch (model) {
        case Model::ols: return fit_ols(data);
        case Model::ridge: return fit_ridge(data, lambda);
        case Model::lasso: return fit_lasso(data, lambda, opts);
        case Model::lslasso: return post_refit(data, fit_lasso(data, lambda, opts));
        case Model::elastic_net: return fit_elastic_net(data, lambda, alpha, opts);
    }
    throw ConfigError("unknown model");
}

double lambda_max(const Dataset& data, double alpha) {
    const Standardized s = standardize(data);
    const double n = static_cast<double>(data.rows());
    const double m = (s.Z.transpose() * s.yc).cwiseAbs().maxCoeff() / n;
    return alpha > 0.0 ? m / alpha : std::numeric_limits<double>::infinity();
}

namespace {

Eigen::VectorXd sample_sd(const Dataset& data) {
    const auto n = static_cast<double>(data.rows());
    const Eigen::VectorXd mean = data.X.colwise().mean().transpose();
    return ((data.X.rowwise() - mean.transpose()).colwise().squaredNorm().transpose() / (n - 1.0)).cwiseSqrt();
}

}  // namespace

double penalized_objective(const Dataset& data, const FitResult& fit) {
    const Eigen::VectorXd r = data.y - predict(fit, data.X);
    const Eigen::VectorXd b = fit.coef.cwiseProduct(sample_sd(data));
    return standardized_objective(r, b, fit.lambda, fit.alpha);
}

double kkt_violation(const Dataset& data, const FitResult& fit) {
    const double n = static_cast<double>(data.rows());
    const Eigen::VectorXd r = data.y - predict(fit, data.X);
    const Eigen::VectorXd sd = sample_sd(data);
    const Eigen::VectorXd g = data.X.transpose() * r / n;
    const double l1 = fit.lambda * fit.alpha;
    const double l2 = fit.lambda * (1.0 - fit.alpha);
    double worst = std::abs(r.mean());  // intercept condition
    for (Eigen::Index j = 0; j < g.size(); ++j) {
        if (sd(j) == 0.0) continue;
        const double c = fit.coef(j);
        if (c != 0.0) {
            const double target = l1 * sd(j) * (c > 0 ? 1.0 : -1.0) + l2 * sd(j) * sd(j) * c;
            worst = std::max(worst, std::abs(g(j) - target) / sd(j));
        } else {
            worst = std::max(worst, std::max(0.0, std::abs(g(j)) - l1 * sd(j)) / sd(j));
        }
    }
    return worst;
}

nlohmann::json fit_to_json(const FitResult& fit) {
    nlohmann::json coefs = nlohmann::json::object();
    coefs["intercept"] = fit.intercept;
    for (std::size_t j = 0; j < fit.names.size(); ++j) coefs[fit.names[j]] = fit.coef(static_cast<Eigen::Index>(j));
    nlohmann::json support = nlohmann::json::array();
    for (auto j : fit.support) support.push_back(fit.names[j]);
    nlohmann::json j{{"model", to_string(fit.model)}, {"lambda", fit.lambda}, {"alpha", fit.alpha}, {"coefficients", coefs},
                     {"support", support},            {"r2", fit.r2},          {"converged", fit.converged},
                     {"iterations", fit.iterations}};
    auto named = [&](const Eigen::VectorXd& v) {
        nlohmann::json o = nlohmann::json::object();
        o["intercept"] = std::isfinite(v(0)) ? nlohmann::json(v(0)) : nlohmann::json(nullptr);
        for (std::size_t k = 0; k < fit.names.size(); ++k) {
            const double x = v(static_cast<Eigen::Index>(k + 1));
            o[fit.names[k]] = std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr);
        }
        return o;
    };
    if (fit.std_errors) j["std_errors"] = named(*fit.std_errors);
    if (fit.p_values) j["p_values"] = named(*fit.p_values);
    return j;
}

}  // namespace bondtca
