#include "bondtca/stats.hpp"

#include "bondtca/csv.hpp"
#include "bondtca/error.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace bondtca {

namespace {

double clamp01(double p) { return std::clamp(p, 0.0, 1.0); }

double mean_of(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

TestResult anova_f(const std::vector<std::vector<double>>& groups) {
    if (groups.size() < 2) throw DataError("ANOVA needs at least two groups");
    std::size_t n = 0;
    double total = 0.0;
    for (const auto& g : groups) {
        if (g.size() < 2) throw DataError("ANOVA needs at least two observations per group");
        n += g.size();
        total += std::accumulate(g.begin(), g.end(), 0.0);
    }
    const double grand = total / static_cast<double>(n);
    double ssb = 0.0, ssw = 0.0;
    for (const auto& g : groups) {
        const double m = mean_of(g);
        ssb += static_cast<double>(g.size()) * (m - grand) * (m - grand);
        for (double y : g) ssw += (y - m) * (y - m);
    }
    TestResult r;
    r.df1 = static_cast<double>(groups.size() - 1);
    r.df2 = static_cast<double>(n - groups.size());
    const double msb = ssb / r.df1;
    const double msw = ssw / r.df2;
    if (msw == 0.0) {
        r.degenerate = true;
        if (msb == 0.0) {
            r.statistic = 0.0;
            r.p_value = 1.0;
        } else {
            r.statistic = std::numeric_limits<double>::infinity();
            r.p_value = 0.0;
        }
        return r;
    }
    r.statistic = msb / msw;
    r.p_value = clamp01(boost::math::cdf(boost::math::complement(boost::math::fisher_f(r.df1, r.df2), r.statistic)));
    return r;
}

TestResult kruskal_h(const std::vector<std::vector<double>>& groups) {
    if (groups.size() < 2) throw DataError("Kruskal-Wallis needs at least two groups");
    std::vector<std::pair<double, std::size_t>> all;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        if (groups[g].empty()) throw DataError("Kruskal-Wallis: empty group");
        for (double v : groups[g]) all.emplace_back(v, g);
    }
    const std::size_t n = all.size();
    if (n < 3) throw DataError("Kruskal-Wallis needs at least three observations");
    std::sort(all.begin(), all.end());
    std::vector<double> rank_sum(groups.size(), 0.0);
    double tie_term = 0.0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && all[j].first == all[i].first) ++j;
        const double mid_rank = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t q = i; q < j; ++q) rank_sum[all[q].second] += mid_rank;
        const double t = static_cast<double>(j - i);
        tie_term += t * t * t - t;
        i = j;
    }
    TestResult r;
    r.df1 = static_cast<double>(groups.size() - 1);
    const double dn = static_cast<double>(n);
    const double correction = 1.0 - tie_term / (dn * dn * dn - dn);
    if (correction <= 0.0) {
        r.degenerate = true;
        r.statistic = 0.0;
        r.p_value = 1.0;
        return r;
    }
    double h = 0.0;
    for (std::size_t g = 0; g < groups.size(); ++g) h += rank_sum[g] * rank_sum[g] / static_cast<double>(groups[g].size());
    h = 12.0 / (dn * (dn + 1.0)) * h - 3.0 * (dn + 1.0);
    h /= correction;
    r.statistic = std::max(0.0, h);
    r.p_value = clamp01(boost::math::cdf(boost::math::complement(boost::math::chi_squared(r.df1), r.statistic)));
    return r;
}

double kolmogorov_p(double d) {
    if (d <= 0.0) return 1.0;
    double sum = 0.0;
    for (int i = 1; i < 1000; ++i) {
        const double term = std::exp(-2.0 * i * i * d * d);
        sum += (i % 2 == 1 ? term : -term);
        if (term < 1e-10) break;
    }
    return clamp01(2.0 * sum);
}

TestResult ks_two_sample(std::vector<double> x, std::vector<double> y) {
    if (x.empty() || y.empty()) throw DataError("KS test needs non-empty samples");
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    const double m = static_cast<double>(x.size()), n = static_cast<double>(y.size());
    std::size_t i = 0, j = 0;
    double sup = 0.0;
    while (i < x.size() || j < y.size()) {
        double v;
        if (j >= y.size() || (i < x.size() && x[i] <= y[j])) v = x[i];
        else v = y[j];
        while (i < x.size() && x[i] == v) ++i;
        while (j < y.size() && y[j] == v) ++j;
        sup = std::max(sup, std::abs(static_cast<double>(i) / m - static_cast<double>(j) / n));
    }
    TestResult r;
    r.statistic = std::sqrt(m * n / (m + n)) * sup;
    r.df1 = m;
    r.df2 = n;
    r.p_value = kolmogorov_p(r.statistic);
    return r;
}

TestResult welch_t(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() < 2 || y.size() < 2) throw DataError("Welch t needs at least two observations per sample");
    const double mx = mean_of(x), my = mean_of(y);
    double vx = 0.0, vy = 0.0;
    for (double v : x) vx += (v - mx) * (v - mx);
    for (double v : y) vy += (v - my) * (v - my);
    const double nx = static_cast<double>(x.size()), ny = static_cast<double>(y.size());
    vx /= nx - 1.0;
    vy /= ny - 1.0;
    TestResult r;
    const double a = vx / nx, b = vy / ny;
    if (a + b == 0.0) {
        r.degenerate = true;
        r.statistic = mx == my ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), mx - my);
        r.p_value = mx == my ? 1.0 : 0.0;
        return r;
    }
    r.statistic = (mx - my) / std::sqrt(a + b);
    r.df1 = (a + b) * (a + b) / (a * a / (nx - 1.0) + b * b / (ny - 1.0));
    if (r.statistic == 0.0) {
        r.p_value = 1.0;
        return r;
    }
    const boost::math::students_t dist(r.df1);
    r.p_value = clamp01(2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.statistic))));
    return r;
}

std::vector<PeriodPairResult> stationarity_by_period(const std::vector<PeriodValue>& series) {
    std::map<std::string, std::vector<double>> by_period;
    for (const auto& v : series) by_period[v.period].push_back(v.value);
    if (by_period.size() < 2) throw DataError("stationarity test needs at least two periods");
    std::vector<PeriodPairResult> out;
    for (auto it = by_period.begin(); std::next(it) != by_period.end(); ++it) {
        auto nx = std::next(it);
        PeriodPairResult r;
        r.first = it->first;
        r.second = nx->first;
        if (it->second.size() < 2 || nx->second.size() < 2) {
            r.note = "skipped: a period has fewer than 2 observations";
        } else {
            const std::vector<std::vector<double>> groups{it->second, nx->second};
            r.anova = anova_f(groups);
            r.kruskal = kruskal_h(groups);
        }
        out.push_back(std::move(r));
    }
    return out;
}

std::string format_stationarity_csv(const std::vector<PeriodPairResult>& rows) {
    std::string out = "period_pair,anova_F,anova_p,H,H_p\n";
    for (const auto& r : rows) {
        out += csv_field(r.first + "/" + r.second);
        if (r.anova && r.kruskal) {
            out += ',' + format_number(r.anova->statistic) + ',' + format_number(r.anova->p_value) + ',' +
                   format_number(r.kruskal->statistic) + ',' + format_number(r.kruskal->p_value);
        } else {
            out += ",,,,";
        }
        out += '\n';
    }
    return out;
}

}  // namespace bondtca
