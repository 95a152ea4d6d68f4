#include "doctest.h"

#include "../support/oracles.hpp"

#include "bondtca/classify.hpp"
#include "bondtca/rng.hpp"

using namespace bondtca;

namespace {

std::vector<CleanTrade> make_tape(const std::vector<double>& vol, const std::vector<Leg>& legs, const std::string& cusip = "B") {
    std::vector<CleanTrade> out;
    for (std::size_t i = 0; i < vol.size(); ++i) {
        out.push_back(CleanTrade{cusip, i, Timestamp{make_date(2015, 3, 3), static_cast<std::int32_t>(36000 + i)}, 100.0,
                                 vol[i], legs[i]});
    }
    return out;
}

constexpr Leg B = Leg::customer_buy;
constexpr Leg S = Leg::customer_sell;
constexpr Leg D = Leg::dealer_dealer;

}  // namespace

TEST_CASE("leg compatibility") {
    CHECK(rpt_legs_match(B, D));
    CHECK(rpt_legs_match(D, S));
    CHECK(rpt_legs_match(B, S));
    CHECK(rpt_legs_match(S, B));
    CHECK_FALSE(rpt_legs_match(B, B));
    CHECK_FALSE(rpt_legs_match(S, S));
    CHECK_FALSE(rpt_legs_match(D, D));
}

TEST_CASE("size runs are maximal") {
    const auto tape = make_tape({1, 2, 2, 2, 3, 4, 4, 5}, {B, B, B, B, B, B, B, B});
    const auto runs = find_size_runs(tape);
    REQUIRE(runs.size() == 2);
    CHECK(runs[0].begin == 1);
    CHECK(runs[0].end == 4);
    CHECK(runs[0].common_volume == 2);
    CHECK(runs[1].begin == 5);
    CHECK(runs[1].size() == 2);
}

TEST_CASE("greedy pairing takes the first pair and skips its trades") {
    const std::vector<Leg> legs{B, D, S, D};
    const auto pairs = mark_rpts(SizeRun{0, 4, 1.0}, legs);
    REQUIRE(pairs.size() == 2);
    CHECK(pairs[0] == std::pair<std::size_t, std::size_t>{0, 1});
    CHECK(pairs[1] == std::pair<std::size_t, std::size_t>{2, 3});

    const std::vector<Leg> legs2{B, B, D, S};  // (0,1) fails, (1,2) taken, (2,3) overlaps
    const auto p2 = mark_rpts(SizeRun{0, 4, 1.0}, legs2);
    REQUIRE(p2.size() == 1);
    CHECK(p2[0].first == 1);
}

TEST_CASE("signs") {
    const auto tape = make_tape({5, 5, 7, 8, 9}, {B, D, S, D, B});
    const auto signed_trades = classify_trades(tape);
    CHECK(signed_trades[0].is_rpt);
    CHECK(signed_trades[1].is_rpt);
    CHECK(signed_trades[0].epsilon == 0);
    CHECK(signed_trades[2].epsilon == -1);
    CHECK(signed_trades[3].epsilon == 0);
    CHECK(signed_trades[4].epsilon == 1);
}

TEST_CASE("mark_rpts agrees with exhaustive enumeration on random tapes") {
    CounterRng rng(2024);
    const Leg all[3] = {B, S, D};
    for (int rep = 0; rep < 10000; ++rep) {
        const std::size_t n = 1 + rng.below(12);
        std::vector<double> vol(n);
        std::vector<Leg> legs(n);
        const std::uint64_t sizes = 1 + rng.below(3);
        for (std::size_t i = 0; i < n; ++i) {
            vol[i] = 1000.0 * static_cast<double>(1 + rng.below(sizes));
            legs[i] = all[rng.below(3)];
        }
        const auto expect = oracle::rpt_flags(vol, legs);
        const auto tape = make_tape(vol, legs);
        std::vector<bool> got(n, false);
        for (const auto& run : find_size_runs(tape)) {
            for (auto [a, b] : mark_rpts(run, legs)) {
                CHECK(b == a + 1);
                got[a] = got[b] = true;
            }
        }
        REQUIRE(got == expect);
        const auto classified = classify_trades(tape, Execution::serial);
        for (std::size_t i = 0; i < n; ++i) REQUIRE(classified[i].is_rpt == expect[i]);
    }
}

TEST_CASE("serial and parallel classification agree on many bonds") {
    CounterRng rng(3);
    std::vector<CleanTrade> tape;
    const Leg all[3] = {B, S, D};
    for (int b = 0; b < 40; ++b) {
        std::vector<double> vol(300);
        std::vector<Leg> legs(300);
        for (std::size_t i = 0; i < 300; ++i) {
            vol[i] = 1000.0 * static_cast<double>(1 + rng.below(3));
            legs[i] = all[rng.below(3)];
        }
        auto part = make_tape(vol, legs, "C" + std::to_string(100 + b));
        tape.insert(tape.end(), part.begin(), part.end());
    }
    const auto s = classify_trades(tape, Execution::serial);
    const auto p = classify_trades(tape, Execution::parallel);
    REQUIRE(s.size() == p.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        CHECK(s[i].is_rpt == p[i].is_rpt);
        CHECK(s[i].epsilon == p[i].epsilon);
    }
    CHECK(parse_signed_trades_csv(format_signed_trades_csv(s)).size() == s.size());
}
