#pragma once

// Trade-tape ingestion: parsing, record-lifecycle reconciliation, the
// seven-step cleaning filter and Standard-tape volume capping.

#include "bondtca/civil_time.hpp"
#include "json.hpp"

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace bondtca {

enum class ReportKind { trade, cancel, correction, reversal };
enum class Capacity { principal, agent };
enum class ContraParty { customer, dealer };
enum class CustomerSide { customer_buy, customer_sell };
enum class SubProduct { corporate_bond, other };
enum class Leg { customer_buy, customer_sell, dealer_dealer };
enum class Grade { IG, HY };

std::string_view to_string(ReportKind k);
std::string_view to_string(Capacity c);
std::string_view to_string(ContraParty c);
std::string_view to_string(CustomerSide s);
std::string_view to_string(SubProduct s);
std::string_view to_string(Leg l);
std::string_view to_string(Grade g);
Leg parse_leg(std::string_view text);
Grade parse_grade(std::string_view text);

inline bool is_customer(Leg l) { return l != Leg::dealer_dealer; }

struct RawTradeReport {
    std::string record_id;
    std::string cusip;
    Timestamp exec;
    double price = 0.0;   // per 100 face
    double volume = 0.0;  // USD face
    ReportKind kind = ReportKind::trade;
    std::optional<std::string> references_record;
    Capacity capacity = Capacity::principal;
    ContraParty contra_party = ContraParty::customer;
    std::optional<CustomerSide> customer_side;
    std::vector<std::string> sale_conditions;
    SubProduct sub_product = SubProduct::corporate_bond;
    std::size_t row = 0;  // 1-based data row in the source file

    Leg leg() const;
};

struct CleanTrade {
    std::string cusip;
    std::size_t k = 0;  // per-bond chronological index
    Timestamp t;
    double price = 0.0;
    double volume = 0.0;
    Leg leg = Leg::dealer_dealer;
};

/// Header of the trade-tape CSV, in column order.
const std::vector<std::string_view>& tape_columns();

/// Parses a tape. Throws ParseError naming the data row and column.
std::vector<RawTradeReport> parse_trace_csv(std::string_view text);
std::string format_trace_csv(const std::vector<RawTradeReport>& reports);

struct LifecycleStats {
    std::size_t trade_reports = 0;
    std::size_t cancels_applied = 0;
    std::size_t corrections_applied = 0;
    std::size_t reversals_applied = 0;
    std::size_t dangling_skipped = 0;
    std::size_t trades_removed = 0;
    std::size_t trades_settled = 0;
    std::vector<std::string> log;  // one line per skipped record
};

/// Applies cancels, corrections and reversals; returns settled trades in
/// file order. Corrections overwrite the referenced trade's fields but keep
/// its record_id; the last correction in file order wins.
std::vector<RawTradeReport> reconcile_lifecycle(const std::vector<RawTradeReport>& reports,
                                                LifecycleStats* stats = nullptr);

struct FilterStep {
    int step = 0;
    std::string name;
    std::size_t input = 0;
    std::size_t removed = 0;
    double removed_pct = 0.0;  // percent of this step's input
    std::size_t remaining = 0;
};

struct FilterReport {
    std::vector<FilterStep> steps;
    std::optional<LifecycleStats> lifecycle;

    std::size_t input_count() const { return steps.empty() ? 0 : steps.front().input; }
    std::size_t final_count() const { return steps.empty() ? 0 : steps.back().remaining; }
};

struct FilterConfig {
    /// Sale-condition codes treated as irregular: late report (Z), reported
    /// after market hours (T), weighted-average price (W), special price (S).
    std::set<std::string> irregular_conditions{"Z", "T", "W", "S"};
    std::int32_t open_seconds = 8 * 3600;
    std::int32_t close_seconds = 17 * 3600 + 15 * 60;  // inclusive
    double min_price = 10.0;                            // kept on equality
};

struct FilterResult {
    std::vector<RawTradeReport> kept;  // file order
    FilterReport report;               // steps 2..7
};

/// Steps 2..7 of the cleaning procedure on lifecycle-reconciled reports.
/// Returns the step (2..7) that removes the report, or 0 if it survives.
int filter_step_for(const RawTradeReport& r, const BusinessCalendar& calendar, const FilterConfig& config);

FilterResult filter_pipeline(const std::vector<RawTradeReport>& trades, const BusinessCalendar& calendar,
                             const FilterConfig& config = {});

/// Prepends the lifecycle step (step 1) to a filter report.
FilterReport with_lifecycle_step(const FilterReport& filter, const LifecycleStats& lifecycle);

/// Groups by cusip (lexical), sorts each bond chronologically (file order
/// breaks ties) and assigns k.
std::vector<CleanTrade> to_clean_trades(const std::vector<RawTradeReport>& kept);

/// Caps HY volumes at 1MM and IG volumes at 5MM (equality is not capped).
std::vector<CleanTrade> cap_volumes(const std::vector<CleanTrade>& trades, const std::map<std::string, Grade>& grade_of);

inline constexpr double kHighYieldCap = 1'000'000.0;
inline constexpr double kInvestmentGradeCap = 5'000'000.0;

nlohmann::json filter_report_to_json(const FilterReport& report);

std::string format_clean_trades_csv(const std::vector<CleanTrade>& trades);
std::vector<CleanTrade> parse_clean_trades_csv(std::string_view text);

}  // namespace bondtca
