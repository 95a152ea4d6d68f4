#pragma once

// Group-comparison tests: one-way ANOVA, Kruskal-Wallis H, two-sample
// Kolmogorov-Smirnov and Welch's t.

#include <optional>
#include <string>
#include <vector>

namespace bondtca {

struct TestResult {
    double statistic = 0.0;
    double p_value = 1.0;
    double df1 = 0.0;
    double df2 = 0.0;
    bool degenerate = false;
};

/// F = MS_between / MS_within on (W-1, n-W) degrees of freedom.
TestResult anova_f(const std::vector<std::vector<double>>& groups);

/// H with mid-ranks and tie correction; p from chi-square(W-1).
TestResult kruskal_h(const std::vector<std::vector<double>>& groups);

/// D = sqrt(mn/(m+n)) sup|F_m - G_n| with the asymptotic Kolmogorov p-value.
TestResult ks_two_sample(std::vector<double> x, std::vector<double> y);

/// Kolmogorov tail 2 sum (-1)^(i-1) exp(-2 i^2 d^2), clamped to [0, 1].
double kolmogorov_p(double d);

/// Welch statistic with Satterthwaite degrees of freedom; two-tailed p.
TestResult welch_t(const std::vector<double>& x, const std::vector<double>& y);

struct PeriodValue {
    std::string bond;
    std::string period;
    double value = 0.0;
};

struct PeriodPairResult {
    std::string first;
    std::string second;
    std::optional<TestResult> anova;
    std::optional<TestResult> kruskal;
    std::string note;
};

/// Adjacent period pairs (periods in lexical order); pairs where a period has
/// fewer than two values carry a note instead of results.
std::vector<PeriodPairResult> stationarity_by_period(const std::vector<PeriodValue>& series);

std::string format_stationarity_csv(const std::vector<PeriodPairResult>& rows);

}  // namespace bondtca
