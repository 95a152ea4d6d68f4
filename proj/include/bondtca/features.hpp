#pragma once

// Weekly design matrix: one row per (bond, week) with a spread observation.

#include "bondtca/classify.hpp"
#include "bondtca/microstructure.hpp"

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace bondtca {

struct BondReference {
    std::string cusip;
    double coupon_rate = 0.0;  // percent per annum
    Date issue_date{};
    Date maturity_date{};
    double amount_outstanding = 0.0;  // USD
    Grade grade = Grade::IG;
    int sector = 1;     // 1..9
    int frequency = 2;  // coupons per year; 0 = zero coupon
};

struct CashFlow {
    Date date{};
    double amount = 0.0;  // per 100 face
};

/// Remaining flows strictly after `as_of`, rolled back from maturity in
/// 12/frequency-month steps.
std::vector<CashFlow> cashflow_schedule(const BondReference& bond, Date as_of);

std::map<std::string, BondReference> parse_bond_reference_csv(std::string_view text);
std::string format_bond_reference_csv(const std::vector<BondReference>& bonds);

/// ISO week key -> 1-month LIBOR-OIS.
using MarketContext = std::map<IsoWeek, double>;
MarketContext parse_market_context_csv(std::string_view text);
std::string format_market_context_csv(const MarketContext& ctx);

/// Sample std of log returns, times 100. Needs at least 3 prices.
std::optional<double> weekly_volatility(std::span<const double> prices);

/// Macaulay duration in years at the yield that reprices `price` (per 100).
double duration(const BondReference& bond, double price, Date as_of);

/// Yield (per annum, compounded at the coupon frequency) for a price.
double yield_from_price(const BondReference& bond, double price, Date as_of);

inline constexpr std::size_t kFeatureCount = 27;

/// Covariate names in column order.
const std::array<std::string_view, kFeatureCount>& feature_names();

struct FeatureRow {
    std::string cusip;
    IsoWeek week;
    double mean_s_bp = 0.0;  // response
    std::array<double, kFeatureCount> x{};

    double get(std::string_view name) const;
};

struct FeatureBuildStats {
    std::size_t weekly_rows = 0;
    std::size_t dropped_volatility = 0;  // fewer than 2 returns
    std::size_t dropped_context = 0;     // no LIBOR-OIS for the week
};

std::vector<FeatureRow> build_feature_matrix(const std::vector<WeeklySpread>& weekly,
                                             const std::vector<SignedTrade>& trades,
                                             const std::map<std::string, BondReference>& reference,
                                             const MarketContext& context, const BusinessCalendar& calendar,
                                             FeatureBuildStats* stats = nullptr);

std::string format_features_csv(const std::vector<FeatureRow>& rows);
std::vector<FeatureRow> parse_features_csv(std::string_view text);

}  // namespace bondtca
