#pragma once

// Stage orchestration for the command-line tool. Every stage reads the
// previous stage's files from the run directory and writes its own, so
// stages can be re-run independently.
//
//   generate  tape.csv reference.csv context.csv calendar.txt manifest.json planted_rpts.csv
//   ingest    clean_trades.csv filter_report.json
//   classify  signed_trades.csv
//   spread    spreads.csv weekly_spreads.csv one_sided_spreads.csv
//   features  features.csv
//   fit       fit.json cv_report.json
//   impact    kernels.json signatures/<cusip>_<model>.csv
//   report    report.json stationarity.csv

#include "bondtca/cross_validation.hpp"
#include "bondtca/impact.hpp"
#include "bondtca/microstructure.hpp"
#include "bondtca/regress.hpp"
#include "bondtca/synth.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace bondtca {

inline constexpr std::string_view kToolVersion = "0.1.0";

using WeekRange = std::pair<IsoWeek, IsoWeek>;  // inclusive

/// "2015-W02:2015-W20".
WeekRange parse_week_range(std::string_view text);
std::string format_week_range(const WeekRange& r);

/// "lo:hi:count" (log-uniform) or a comma-separated list.
std::vector<double> parse_lambda_grid(std::string_view text);

enum class ImpactMid { spread_adjusted, trade };

struct RunConfig {
    // paths; empty inputs resolve to the run directory's default file names
    std::string dir = "run";
    std::string tape;
    std::string reference;
    std::string context;
    std::string calendar;
    std::string quotes;  // optional cusip,iso_week,s_quote_bp for the stationarity ratio

    std::uint64_t seed = 42;
    int threads = 0;  // 0: all available

    TraceFixtureConfig synth;

    bool cap_volumes = false;

    SpreadConfig spread;

    Model model = Model::lslasso;
    std::vector<double> lambda_grid;  // empty: the model's default range
    std::vector<double> alphas{0.2, 0.5, 0.8};
    std::size_t k_folds = 10;
    std::optional<WeekRange> train_range;
    std::optional<WeekRange> test_range;
    std::vector<std::string> features;  // empty: the model's default set

    std::size_t impact_n = 10;
    std::size_t impact_l = 10;
    double impact_alpha = 0.0;
    std::size_t l_max = 10;
    std::size_t min_events = 1000;
    std::size_t top_k = 0;  // 0: every bond
    G0Mode g0_mode = G0Mode::projection;
    bool tim2 = true;
    ImpactMid impact_mid = ImpactMid::spread_adjusted;

    /// Everything that can change an artifact (paths and threads excluded).
    nlohmann::json to_json() const;
    /// Applies a (possibly partial) config document; unknown keys are errors.
    void apply_json(const nlohmann::json& j);
    /// Checks ranges and cross-field constraints.
    void validate() const;

    std::string path(const std::string& name) const;
};

/// FNV-1a over the canonical (sorted-key, compact) JSON of the config.
std::uint64_t config_hash(const RunConfig& config);
std::string config_hash_hex(const RunConfig& config);

/// Single '#' metadata line for CSV artifacts.
std::string csv_metadata(const RunConfig& config, std::string_view stage);
nlohmann::json json_metadata(const RunConfig& config, std::string_view stage);

/// Each stage returns a short summary for the console.
nlohmann::json run_generate(const RunConfig& config);
nlohmann::json run_ingest(const RunConfig& config);
nlohmann::json run_classify(const RunConfig& config);
nlohmann::json run_spread(const RunConfig& config);
nlohmann::json run_features(const RunConfig& config);
nlohmann::json run_fit(const RunConfig& config);
nlohmann::json run_impact(const RunConfig& config);
nlohmann::json run_report(const RunConfig& config);

/// Bonds ordered by trade count (descending, cusip breaks ties), first k (k = 0: all).
std::vector<std::string> top_traded(const std::vector<SignedTrade>& trades, std::size_t k);

struct OneSidedRow {
    std::string cusip;
    Date day{};
    std::optional<double> spread_b;
    std::optional<double> spread_s;
    double volume_b = 0.0;
    double volume_s = 0.0;
};

std::string format_one_sided_csv(const std::vector<OneSidedSpread>& rows);
std::vector<OneSidedRow> parse_one_sided_csv(std::string_view text);

}  // namespace bondtca
