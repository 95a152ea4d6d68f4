#pragma once

// Synthetic markets with known ground truth: signed event series driven by a
// transient impact model, and full trade tapes with planted RPTs, lifecycle
// noise and filter violations.

#include "bondtca/features.hpp"
#include "bondtca/impact.hpp"
#include "bondtca/parallel.hpp"
#include "bondtca/rng.hpp"
#include "bondtca/trace.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace bondtca {

enum class KernelFamily { exponential, power_law, constant };
KernelFamily parse_kernel_family(std::string_view text);
std::string_view to_string(KernelFamily f);

/// exponential: g0 e^(-beta j); power_law: g0 (1+j)^(-gamma); constant: g0. In bp.
struct KernelSpec {
    KernelFamily family = KernelFamily::exponential;
    double g0 = 25.0;
    double beta = 0.4;
    double gamma = 0.5;

    double value(std::size_t j) const;
};

/// G(0..horizon); the generator holds G(horizon) beyond the horizon.
std::vector<double> tabulate_kernel(const KernelSpec& k, std::size_t horizon);

enum class SignProcess { iid, markov };

struct SynthConfig {
    std::uint64_t seed = 1;
    std::size_t n_events = 200'000;
    KernelSpec kernel_buy;
    KernelSpec kernel_sell;  // used only when `asymmetric`
    bool asymmetric = false;
    SignProcess sign_process = SignProcess::iid;
    double p_buy = 0.5;      // iid buy probability, and the Markov start
    double flip_prob = 0.5;  // Markov sign-flip probability
    double sigma_eta = 5.0;  // bp
    double alpha = 0.0;
    double volume_mu = 0.0;  // log-normal volume law
    double volume_sigma = 1.0;
    double m0 = 100.0;
    std::size_t horizon = 256;

    nlohmann::json to_json() const;
};

struct TimSeries {
    SignSeries series;
    std::vector<double> x;  // log-mid in bp relative to m0
    nlohmann::json manifest;
};

/// Builds x_k = sum_{k'<=k} [G_{pi_k'}(k-k') V_k'^alpha eps_k' + eta_k'] and
/// M_k = m0 exp(x_k / 1e4). Event types equal the signs.
TimSeries generate_tim_series(const SynthConfig& config, Execution exec = Execution::parallel);

struct TraceFixtureConfig {
    std::uint64_t seed = 7;
    std::size_t n_bonds = 20;
    std::size_t trades_per_bond = 2'000;  // true trades, RPT legs included
    Date start = make_date(2015, 1, 5);
    std::size_t n_weeks = 26;
    std::vector<Date> holidays;  // empty: a built-in list for the window
    double half_spread_bp = 25.0;
    double customer_share = 0.65;  // of non-RPT slots
    double rpt_fraction = 0.25;    // of true trades
    double burst_share = 0.6;      // inter-trade gaps drawn from the short law
    double burst_gap_seconds = 90.0;
    KernelSpec kernel{KernelFamily::exponential, 10.0, 0.3, 0.5};
    double sigma_eta = 3.0;
    double alpha = 0.0;
    double volume_mu = 11.918;  // ln(150,000)
    double volume_sigma = 1.2;
    double cancel_rate = 0.02;      // bogus trades, per true trade
    double reversal_share = 0.3;    // of bogus trades removed by a reversal
    double correction_rate = 0.02;  // per true trade
    double violation_rate = 0.002;  // per step and true trade
    std::size_t dangling = 3;
    double ig_fraction = 0.7;

    nlohmann::json to_json() const;
};

struct PlantedRpt {
    std::string cusip;
    std::size_t k_first = 0;  // index among the bond's settled, clean trades
    bool ambiguous = false;   // a neighbour has the same volume
};

struct TraceFixture {
    std::vector<RawTradeReport> reports;
    std::vector<BondReference> bonds;
    MarketContext context;
    BusinessCalendar calendar;
    std::vector<PlantedRpt> planted_rpts;
    nlohmann::json manifest;
};

TraceFixture generate_trace_fixture(const TraceFixtureConfig& config, Execution exec = Execution::parallel);

std::string format_planted_rpts_csv(const std::vector<PlantedRpt>& rows);

}  // namespace bondtca
