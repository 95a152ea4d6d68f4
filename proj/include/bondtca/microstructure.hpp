#pragma once

// Spread estimation from opposite-signed trade pairs, weekly aggregation and
// one-sided (buy/sell) spreads against an inter-dealer reference price.

#include "bondtca/classify.hpp"

#include <optional>
#include <string>
#include <vector>

namespace bondtca {

/// `paper`: M = P_k - eps_{k+1} psi / 2 as printed. `corrected`: M = P_k + eps_{k+1} psi / 2.
enum class MidConvention { paper, corrected };

MidConvention parse_mid_convention(std::string_view text);
std::string_view to_string(MidConvention c);

struct SpreadConfig {
    double max_gap_seconds = 300.0;  // pairs need |t_{k+1} - t_k| < this
    MidConvention mid = MidConvention::paper;
};

struct SpreadObservation {
    std::string cusip;
    std::size_t k = 0;  // index of the later trade
    Timestamp t;        // time of the later trade
    double psi = 0.0;   // price units
    double mid = 0.0;
    double s_bp = 0.0;
};

struct SpreadRunStats {
    std::size_t signed_trades = 0;    // eps != 0 trades seen
    std::size_t trades_consumed = 0;  // distinct trades used in at least one pair
    std::size_t degenerate_mid = 0;   // pairs dropped for M <= 0
    std::vector<std::string> log;
};

/// One observation from a pair; nullopt when the mid is not positive.
std::optional<SpreadObservation> spread_from_pair(const SignedTrade& first, const SignedTrade& second, MidConvention mid);

/// Walks each bond's eps != 0 trades in order and measures every consecutive
/// opposite-signed pair that lies within the time window.
std::vector<SpreadObservation> estimate_spreads(const std::vector<SignedTrade>& trades, const SpreadConfig& config,
                                                SpreadRunStats* stats = nullptr);

struct WeeklySpread {
    std::string cusip;
    IsoWeek week;
    double mean_s_bp = 0.0;
    std::size_t n_obs = 0;
};

/// Unweighted mean of s per (cusip, ISO week), sorted by cusip then week.
std::vector<WeeklySpread> aggregate_weekly(const std::vector<SpreadObservation>& obs);

inline constexpr double kReferenceMinVolume = 100'000.0;
inline constexpr std::int32_t kReferenceExclusionSeconds = 15 * 60;

/// VWAP of dealer-dealer trades with V > 100,000 on one bond-day. Trades
/// within 15 minutes of `around` are excluded; with no `around`, trades
/// within 15 minutes of any customer trade of the day are excluded.
std::optional<double> reference_price(std::span<const CleanTrade> day, std::optional<Timestamp> around = std::nullopt);

struct OneSidedSpread {
    std::string cusip;
    Date day{};
    std::optional<double> spread_b;  // fraction
    std::optional<double> spread_s;
    std::optional<double> reference;
    double volume_b = 0.0;
    double volume_s = 0.0;
};

/// Volume-weighted one-sided spreads of a bond-day against a fixed reference.
OneSidedSpread one_sided_spreads(std::span<const SignedTrade> day, double reference);

/// Per-bond-day spreads where every customer trade gets its own reference
/// price (exclusion window centred on that trade). Days without a usable
/// reference for any customer trade are omitted.
std::vector<OneSidedSpread> one_sided_spreads_by_day(const std::vector<SignedTrade>& trades);

std::string format_spread_observations_csv(const std::vector<SpreadObservation>& obs);
std::string format_weekly_spreads_csv(const std::vector<WeeklySpread>& rows);
std::vector<WeeklySpread> parse_weekly_spreads_csv(std::string_view text);
std::vector<SpreadObservation> parse_spread_observations_csv(std::string_view text);

}  // namespace bondtca
