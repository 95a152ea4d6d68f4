#include "bondtca/impact.hpp"

#include "bondtca/error.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace bondtca {

void validate(const SignSeries& s) {
    const auto n = s.eps.size();
    if (s.volume.size() != n || s.type.size() != n || s.mid.size() != n) {
        throw DataError("sign series " + s.cusip + ": column lengths differ");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (s.eps[i] != 1 && s.eps[i] != -1) throw DataError("sign series " + s.cusip + ": sign must be +1 or -1");
        if (s.type[i] != 1 && s.type[i] != -1) throw DataError("sign series " + s.cusip + ": event type must be +1 or -1");
        if (!(s.volume[i] > 0.0)) throw DataError("sign series " + s.cusip + ": volume must be positive");
        if (!(s.mid[i] > 0.0)) throw DataError("sign series " + s.cusip + ": mid-price must be positive");
    }
}

std::vector<double> signed_volume(const SignSeries& s, double alpha) {
    std::vector<double> u(s.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
        u[i] = (alpha == 0.0 ? 1.0 : std::pow(s.volume[i], alpha)) * static_cast<double>(s.eps[i]);
    }
    return u;
}

std::vector<double> log_mid_bp(const SignSeries& s) {
    std::vector<double> x(s.size());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = 1e4 * std::log(s.mid[i]);
    return x;
}

std::vector<double> returns_bp(const SignSeries& s) {
    std::vector<double> r(s.size() > 0 ? s.size() - 1 : 0);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = 1e4 * std::log(s.mid[i + 1] / s.mid[i]);
    return r;
}

namespace {

void require_events(std::size_t t, std::size_t max_lag) {
    if (t <= max_lag + 10) {
        throw DataError("need more than " + std::to_string(max_lag + 10) + " events for lags up to " +
                        std::to_string(max_lag) + ", have " + std::to_string(t));
    }
}

double correlation_at(const std::vector<double>& u, std::size_t n) {
    const std::size_t m = u.size() - n;
    double sum = 0.0;
    for (std::size_t t = 0; t < m; ++t) sum += u[t] * u[t + n];
    return sum / static_cast<double>(m);
}

double response_at(const std::vector<double>& u, const std::vector<double>& r, std::size_t l) {
    // k - l + 1 >= 0 and k <= T - 2
    const std::size_t k0 = l > 0 ? l - 1 : 0;
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t k = k0; k < r.size(); ++k) {
        sum += r[k] * u[k + 1 - l];
        ++count;
    }
    return count ? sum / static_cast<double>(count) : 0.0;
}

}  // namespace

std::vector<double> estimate_correlation(const std::vector<double>& u, std::size_t max_lag, Execution exec) {
    require_events(u.size(), max_lag);
    std::vector<double> c(max_lag + 1);
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(c.size());
    if (exec == Execution::parallel) {
        BONDTCA_PARALLEL_FOR
        for (std::ptrdiff_t i = 0; i < n; ++i) c[static_cast<std::size_t>(i)] = correlation_at(u, static_cast<std::size_t>(i));
    } else {
        for (std::size_t i = 0; i < c.size(); ++i) c[i] = correlation_at(u, i);
    }
    return c;
}

std::vector<double> estimate_response(const std::vector<double>& u, const std::vector<double>& r, std::size_t max_lag,
                                      Execution exec) {
    require_events(u.size(), max_lag);
    if (r.size() + 1 != u.size()) throw DataError("returns must have one element fewer than signs");
    std::vector<double> s(max_lag + 1);
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(s.size());
    if (exec == Execution::parallel) {
        BONDTCA_PARALLEL_FOR
        for (std::ptrdiff_t i = 0; i < n; ++i) s[static_cast<std::size_t>(i)] = response_at(u, r, static_cast<std::size_t>(i));
    } else {
        for (std::size_t i = 0; i < s.size(); ++i) s[i] = response_at(u, r, i);
    }
    return s;
}

double estimate_g0(const std::vector<double>& u, const std::vector<double>& r) {
    if (u.size() <= 10) throw DataError("G(0) estimation needs more than 10 events");
    const double num = response_at(u, r, 0);
    double den = 0.0;
    for (std::size_t k = 1; k < u.size(); ++k) den += u[k] * u[k];
    den /= static_cast<double>(u.size() - 1);
    if (den == 0.0) throw NumericalError("G(0) estimation: E[V^(2 alpha)] is zero");
    return num / den;
}

double ImpactKernel::at(std::size_t type_index, std::size_t j) const {
    const auto& v = g[type_index];
    return j < v.size() ? v[j] : v.back();
}

namespace {

struct Solution {
    Eigen::VectorXd x;
    double condition = 0.0;
};

Solution solve_system(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, const char* what) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
    const auto& sv = svd.singularValues();
    Solution out;
    out.condition = sv(sv.size() - 1) > 0.0 ? sv(0) / sv(sv.size() - 1) : std::numeric_limits<double>::infinity();
    if (!std::isfinite(out.condition) || out.condition > kMaxCondition) {
        throw NumericalError(std::string(what) + ": correlation matrix is ill-conditioned (condition " +
                             (std::isfinite(out.condition) ? std::to_string(out.condition) : std::string("inf")) +
                             "); use a smaller N or more events");
    }
    if (a.rows() == a.cols()) out.x = a.partialPivLu().solve(b);
    else out.x = a.colPivHouseholderQr().solve(b);
    if (!out.x.allFinite()) throw NumericalError(std::string(what) + ": non-finite kernel");
    return out;
}

void accumulate(ImpactKernel& k, std::size_t type_index, double g0, const double* dg) {
    k.dg[type_index].assign(dg, dg + k.n);
    auto& g = k.g[type_index];
    g.assign(k.n + 1, 0.0);
    g[0] = g0;
    for (std::size_t j = 0; j < k.n; ++j) g[j + 1] = g[j] + dg[j];
}

void check_shape(std::size_t n, std::size_t l) {
    if (n == 0) throw ConfigError("kernel length N must be positive");
    if (l < n) throw ConfigError("need L >= N (L=" + std::to_string(l) + ", N=" + std::to_string(n) + ")");
}

double c_at(const std::vector<double>& c, long n) {
    const auto i = static_cast<std::size_t>(std::abs(n));
    if (i >= c.size()) throw DataError("correlation needed at lag " + std::to_string(i) + " beyond the estimated range");
    return c[i];
}

}  // namespace

ImpactKernel solve_tim1(const std::vector<double>& c, const std::vector<double>& s, double g0, std::size_t n,
                        std::size_t l) {
    check_shape(n, l);
    if (s.size() <= l) throw DataError("response needed up to lag " + std::to_string(l));
    Eigen::MatrixXd a(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(n));
    Eigen::VectorXd b(static_cast<Eigen::Index>(l));
    for (std::size_t i = 0; i < l; ++i) {
        const long lag = static_cast<long>(i) + 1;
        b(static_cast<Eigen::Index>(i)) = s[i + 1] - g0 * c_at(c, lag);
        for (std::size_t j = 0; j < n; ++j) {
            a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = c_at(c, lag - static_cast<long>(j) - 1);
        }
    }
    const Solution sol = solve_system(a, b, "TIM1");
    ImpactKernel k;
    k.model = "tim1";
    k.types = {0};
    k.n = n;
    k.l = l;
    k.g.resize(1);
    k.dg.resize(1);
    k.condition_number = sol.condition;
    accumulate(k, 0, g0, sol.x.data());
    return k;
}

ImpactKernel solve_tim1_joint(const std::vector<double>& c, const std::vector<double>& s, std::size_t n, std::size_t l) {
    check_shape(n, l);
    if (s.size() <= l) throw DataError("response needed up to lag " + std::to_string(l));
    const auto rows = static_cast<Eigen::Index>(l + 1), cols = static_cast<Eigen::Index>(n + 1);
    Eigen::MatrixXd a(rows, cols);
    Eigen::VectorXd b(rows);
    for (std::size_t i = 0; i <= l; ++i) {
        const long lag = static_cast<long>(i);
        b(static_cast<Eigen::Index>(i)) = s[i];
        a(static_cast<Eigen::Index>(i), 0) = c_at(c, lag);
        for (std::size_t j = 0; j < n; ++j) {
            a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j + 1)) = c_at(c, lag - static_cast<long>(j) - 1);
        }
    }
    const Solution sol = solve_system(a, b, "TIM1");
    ImpactKernel k;
    k.model = "tim1";
    k.types = {0};
    k.n = n;
    k.l = l;
    k.g.resize(1);
    k.dg.resize(1);
    k.condition_number = sol.condition;
    accumulate(k, 0, sol.x(0), sol.x.data() + 1);
    return k;
}

TypedMoments estimate_typed_moments(const std::vector<double>& u, const std::vector<int>& type,
                                    const std::vector<double>& r, std::size_t back, std::size_t max_lag,
                                    Execution exec) {
    const std::size_t t_len = u.size();
    require_events(t_len, std::max(back, max_lag));
    if (type.size() != t_len || r.size() + 1 != t_len) throw DataError("typed moments: length mismatch");
    TypedMoments m;
    m.offset = back;
    m.max_lag = max_lag;
    std::vector<int> idx(t_len);
    m.types_follow_signs = true;
    m.constant_magnitude = true;
    const double mag0 = std::abs(u[0]);
    for (std::size_t t = 0; t < t_len; ++t) {
        idx[t] = type[t] == 1 ? 0 : 1;
        ++m.count[idx[t]];
        if ((u[t] > 0) != (type[t] == 1)) m.types_follow_signs = false;
        if (std::abs(std::abs(u[t]) - mag0) > 1e-12 * mag0) m.constant_magnitude = false;
    }
    m.p[0] = static_cast<double>(m.count[0]) / static_cast<double>(t_len);
    m.p[1] = static_cast<double>(m.count[1]) / static_cast<double>(t_len);

    const std::size_t width = back + max_lag + 1;
    for (auto& row : m.ct) {
        for (auto& v : row) v.assign(width, 0.0);
    }
    auto lag_moments = [&](std::size_t i) {
        const long n = static_cast<long>(i) - static_cast<long>(back);
        const std::size_t t0 = n < 0 ? static_cast<std::size_t>(-n) : 0;
        const std::size_t t1 = n > 0 ? t_len - static_cast<std::size_t>(n) : t_len;
        double sum[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
        for (std::size_t t = t0; t < t1; ++t) {
            const std::size_t q = static_cast<std::size_t>(static_cast<long>(t) + n);
            sum[idx[t]][idx[q]] += u[t] * u[q];
        }
        const double cnt = static_cast<double>(t1 - t0);
        for (int a = 0; a < 2; ++a) {
            for (int b = 0; b < 2; ++b) m.ct[a][b][i] = m.p[a] > 0.0 ? sum[a][b] / cnt / m.p[a] : 0.0;
        }
    };
    const std::ptrdiff_t w = static_cast<std::ptrdiff_t>(width);
    if (exec == Execution::parallel) {
        BONDTCA_PARALLEL_FOR
        for (std::ptrdiff_t i = 0; i < w; ++i) lag_moments(static_cast<std::size_t>(i));
    } else {
        for (std::size_t i = 0; i < width; ++i) lag_moments(i);
    }

    m.s[0].assign(max_lag + 1, 0.0);
    m.s[1].assign(max_lag + 1, 0.0);
    auto response = [&](std::size_t l) {
        const std::size_t k0 = l > 0 ? l - 1 : 0;
        double sum[2] = {0.0, 0.0};
        std::size_t count = 0;
        for (std::size_t k = k0; k < r.size(); ++k) {
            const std::size_t j = k + 1 - l;
            sum[idx[j]] += r[k] * u[j];
            ++count;
        }
        for (int a = 0; a < 2; ++a) m.s[a][l] = (count && m.p[a] > 0.0) ? sum[a] / static_cast<double>(count) / m.p[a] : 0.0;
    };
    const std::ptrdiff_t ls = static_cast<std::ptrdiff_t>(max_lag + 1);
    if (exec == Execution::parallel) {
        BONDTCA_PARALLEL_FOR
        for (std::ptrdiff_t l = 0; l < ls; ++l) response(static_cast<std::size_t>(l));
    } else {
        for (std::size_t l = 0; l <= max_lag; ++l) response(l);
    }
    return m;
}

inline constexpr std::size_t kMinEventsPerType = 100;

ImpactKernel solve_tim2(const TypedMoments& m, std::size_t n, std::size_t l) {
    check_shape(n, l);
    for (int a = 0; a < 2; ++a) {
        if (m.count[a] < kMinEventsPerType) {
            throw DataError(std::string("TIM2: event type ") + (a == 0 ? "+1" : "-1") + " occurs " +
                            std::to_string(m.count[a]) + " times; need at least " + std::to_string(kMinEventsPerType));
        }
    }
    if (m.types_follow_signs && m.constant_magnitude) {
        throw NumericalError(
            "TIM2: kernels are not identified when event types equal trade signs and V^alpha is constant "
            "(alpha = 0 or equal volumes); only the sum of the two kernels is. Use alpha > 0 with varying volumes");
    }
    if (m.offset < n || m.max_lag < l) throw DataError("TIM2: moments do not cover the requested lags");
    const auto rows = static_cast<Eigen::Index>(2 * (l + 1));
    const auto cols = static_cast<Eigen::Index>(2 * (n + 1));
    Eigen::MatrixXd a(rows, cols);
    Eigen::VectorXd b(rows);
    for (int ta = 0; ta < 2; ++ta) {
        for (std::size_t i = 0; i <= l; ++i) {
            const auto row = static_cast<Eigen::Index>(static_cast<std::size_t>(ta) * (l + 1) + i);
            const long lag = static_cast<long>(i);
            b(row) = m.s[ta][i];
            for (int tb = 0; tb < 2; ++tb) {
                const auto c0 = static_cast<Eigen::Index>(static_cast<std::size_t>(tb) * (n + 1));
                a(row, c0) = m.ctilde(ta, tb, lag);
                for (std::size_t j = 0; j < n; ++j) a(row, c0 + 1 + static_cast<Eigen::Index>(j)) = m.ctilde(ta, tb, lag - 1 - static_cast<long>(j));
            }
        }
    }
    const Solution sol = solve_system(a, b, "TIM2");
    ImpactKernel k;
    k.model = "tim2";
    k.types = {1, -1};
    k.n = n;
    k.l = l;
    k.g.resize(2);
    k.dg.resize(2);
    k.condition_number = sol.condition;
    for (std::size_t t = 0; t < 2; ++t) {
        const double* base = sol.x.data() + t * (n + 1);
        accumulate(k, t, base[0], base + 1);
    }
    return k;
}

BondImpact estimate_bond_impact(const SignSeries& series, const ImpactConfig& config) {
    validate(series);
    check_shape(config.n, config.l);
    BondImpact out;
    out.cusip = series.cusip;
    out.events = series.size();
    const auto u = signed_volume(series, config.alpha);
    const auto r = returns_bp(series);
    const std::size_t span = config.n + config.l_max;
    const auto c = estimate_correlation(u, std::max(config.l, span), config.exec);
    const auto s = estimate_response(u, r, config.l, config.exec);
    if (config.g0_mode == G0Mode::joint) out.tim1 = solve_tim1_joint(c, s, config.n, config.l);
    else out.tim1 = solve_tim1(c, s, estimate_g0(u, r), config.n, config.l);
    out.tim1.alpha = config.alpha;

    std::vector<double> d, se;
    empirical_signature(log_mid_bp(series), config.l_max, d, se);
    out.signature_tim1 = make_signature(d, se, model_signature_tim1(out.tim1, c, config.l_max));

    if (config.tim2) {
        try {
            const auto m = estimate_typed_moments(u, series.type, r, std::max(config.n, span), std::max(config.l, span), config.exec);
            out.tim2 = solve_tim2(m, config.n, config.l);
            out.tim2->alpha = config.alpha;
            out.signature_tim2 = make_signature(d, se, model_signature_tim2(*out.tim2, m, config.l_max));
        } catch (const Error& e) {
            out.tim2_error = e.what();
        }
    }
    return out;
}

ImpactKernel aggregate_kernels(const std::vector<const ImpactKernel*>& kernels) {
    if (kernels.empty()) throw DataError("no kernels to aggregate");
    ImpactKernel out = *kernels.front();
    for (std::size_t t = 0; t < out.g.size(); ++t) {
        std::fill(out.g[t].begin(), out.g[t].end(), 0.0);
        std::fill(out.dg[t].begin(), out.dg[t].end(), 0.0);
    }
    out.condition_number = 0.0;
    for (const auto* k : kernels) {
        if (k->types != out.types || k->n != out.n) throw DataError("cannot aggregate kernels of different shapes");
        for (std::size_t t = 0; t < out.g.size(); ++t) {
            for (std::size_t j = 0; j < out.g[t].size(); ++j) out.g[t][j] += k->g[t][j];
            for (std::size_t j = 0; j < out.dg[t].size(); ++j) out.dg[t][j] += k->dg[t][j];
        }
        out.condition_number = std::max(out.condition_number, k->condition_number);
    }
    const double inv = 1.0 / static_cast<double>(kernels.size());
    for (std::size_t t = 0; t < out.g.size(); ++t) {
        for (auto& v : out.g[t]) v *= inv;
        for (auto& v : out.dg[t]) v *= inv;
    }
    return out;
}

nlohmann::json kernel_to_json(const ImpactKernel& k, const std::string& id) {
    nlohmann::json g = nlohmann::json::object();
    nlohmann::json g0 = nlohmann::json::object();
    for (std::size_t t = 0; t < k.types.size(); ++t) {
        const std::string key = k.types[t] == 0 ? "all" : (k.types[t] > 0 ? "+1" : "-1");
        g[key] = k.g[t];
        g0[key] = k.g[t].front();
    }
    return {{"cusip", id},
            {"model", k.model},
            {"alpha", k.alpha},
            {"N", k.n},
            {"L", k.l},
            {"g", g},
            {"g0", k.types.size() == 1 ? nlohmann::json(k.g[0].front()) : g0},
            {"condition_number", k.condition_number}};
}

}  // namespace bondtca
