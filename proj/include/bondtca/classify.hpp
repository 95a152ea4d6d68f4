#pragma once

// Initiator signs and riskless-principal (RPT) detection by size-run pairing.

#include "bondtca/parallel.hpp"
#include "bondtca/trace.hpp"

#include <span>
#include <utility>
#include <vector>

namespace bondtca {

struct SignedTrade : CleanTrade {
    int epsilon = 0;  // -1, 0, +1
    bool is_rpt = false;
};

/// Maximal run [begin, end) of >= 2 consecutive equal-volume trades.
struct SizeRun {
    std::size_t begin = 0;
    std::size_t end = 0;
    double common_volume = 0.0;

    std::size_t size() const noexcept { return end - begin; }
};

/// Runs over one bond's chronological trades; indices are positions in `trades`.
std::vector<SizeRun> find_size_runs(std::span<const CleanTrade> trades);

/// True if two adjacent equal-size trades can be the legs of an RPT: one
/// customer leg against a dealer leg, or a customer buy against a customer sell.
bool rpt_legs_match(Leg a, Leg b);

/// Greedy left-to-right, non-overlapping pairing inside one run. Returns
/// absolute index pairs (i, i+1).
std::vector<std::pair<std::size_t, std::size_t>> mark_rpts(const SizeRun& run, std::span<const Leg> legs);

/// customer_buy -> +1, customer_sell -> -1, RPT legs and dealer trades -> 0.
std::vector<SignedTrade> assign_signs(std::span<const CleanTrade> trades, const std::vector<bool>& rpt);

/// Full classification of a multi-bond clean tape (grouped by cusip, each
/// bond chronological). Bonds are processed independently.
std::vector<SignedTrade> classify_trades(const std::vector<CleanTrade>& trades,
                                         Execution exec = Execution::parallel);

/// [begin, end) ranges of consecutive records sharing a cusip.
template <class T>
std::vector<std::pair<std::size_t, std::size_t>> cusip_ranges(const std::vector<T>& rows) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    std::size_t start = 0;
    for (std::size_t i = 1; i <= rows.size(); ++i) {
        if (i == rows.size() || rows[i].cusip != rows[start].cusip) {
            if (i > start) out.emplace_back(start, i);
            start = i;
        }
    }
    return out;
}

std::string format_signed_trades_csv(const std::vector<SignedTrade>& trades);
std::vector<SignedTrade> parse_signed_trades_csv(std::string_view text);

}  // namespace bondtca
