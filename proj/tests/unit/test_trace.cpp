#include "doctest.h"

#include "bondtca/error.hpp"
#include "bondtca/rng.hpp"
#include "bondtca/synth.hpp"
#include "bondtca/trace.hpp"

#include <string>

using namespace bondtca;

namespace {

const std::string kHeader =
    "record_id,cusip,exec_date,exec_time,price,volume,report_kind,references_record,capacity,contra_party,"
    "customer_side,sale_condition,sub_product\n";

std::string tape(const std::string& rows) { return kHeader + rows; }

RawTradeReport trade(std::string id, double price = 100.0, double volume = 100000.0) {
    RawTradeReport r;
    r.record_id = std::move(id);
    r.cusip = "ABC";
    r.exec = Timestamp{make_date(2015, 3, 3), 10 * 3600};
    r.price = price;
    r.volume = volume;
    r.contra_party = ContraParty::customer;
    r.customer_side = CustomerSide::customer_buy;
    return r;
}

RawTradeReport follow_up(std::string id, ReportKind kind, std::string ref, double price = 100.0) {
    RawTradeReport r = trade(std::move(id), price);
    r.kind = kind;
    r.references_record = std::move(ref);
    return r;
}

}  // namespace

TEST_CASE("parse a small tape") {
    const auto reports = parse_trace_csv(tape(
        "A1,ABC,2015-03-03,10:00:00,101.5,250000,trade,,principal,customer,customer_buy,,corporate_bond\n"
        "A2,ABC,2015-03-03,10:00:00,101.2,250000,trade,,principal,dealer,,,corporate_bond\n"
        "A3,ABC,2015-03-03,10:05:00,101.3,50000,T,,A,C,S,Z;W,CORP\n"
        "A4,ABC,2015-03-03,10:06:00,0,0,cancel,A3,principal,customer,customer_sell,,corporate_bond\n"));
    REQUIRE(reports.size() == 4);
    CHECK(reports[0].leg() == Leg::customer_buy);
    CHECK(reports[1].leg() == Leg::dealer_dealer);
    CHECK(reports[2].leg() == Leg::customer_sell);
    CHECK(reports[2].capacity == Capacity::agent);
    CHECK(reports[2].sale_conditions == std::vector<std::string>{"Z", "W"});
    CHECK(reports[3].kind == ReportKind::cancel);
    CHECK(*reports[3].references_record == "A3");
    CHECK(reports[3].row == 4);
}

TEST_CASE("a non-numeric price names the row and the column") {
    try {
        parse_trace_csv(tape(
            "A1,ABC,2015-03-03,10:00:00,101.5,250000,trade,,principal,customer,customer_buy,,corporate_bond\n"
            "A2,ABC,2015-03-03,10:00:00,abc,250000,trade,,principal,dealer,,,corporate_bond\n"));
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.row() == 2);
        CHECK(e.column() == "price");
        CHECK(std::string(e.what()).find("abc") != std::string::npos);
    }
}

TEST_CASE("malformed rows are rejected") {
    CHECK_THROWS_AS(parse_trace_csv(tape("A1,ABC,2015-03-03,10:00:00,101.5,250000,trade,,principal,customer,,,corporate_bond\n")),
                    ParseError);
    CHECK_THROWS_AS(parse_trace_csv(tape("A1,ABC,2015-03-03,10:00:00,101.5,250000,cancel,,principal,dealer,,,corporate_bond\n")),
                    ParseError);
    CHECK_THROWS_AS(parse_trace_csv(tape("A1,ABC,2015-03-03,10:00:00,101.5\n")), ParseError);
    CHECK_THROWS_AS(parse_trace_csv("record_id,cusip\nA1,ABC\n"), DataError);
}

TEST_CASE("format and parse round-trip") {
    std::vector<RawTradeReport> in{trade("A1", 99.125), follow_up("A2", ReportKind::correction, "A1", 99.25)};
    in[1].sale_conditions = {"Z", "S"};
    in[1].row = 2;
    in[0].row = 1;
    const auto out = parse_trace_csv(format_trace_csv(in));
    REQUIRE(out.size() == 2);
    CHECK(out[0].price == 99.125);
    CHECK(out[1].sale_conditions == in[1].sale_conditions);
    CHECK(format_trace_csv(out) == format_trace_csv(in));
}

TEST_CASE("lifecycle: the last correction wins") {
    const std::vector<RawTradeReport> reports{trade("T1", 100.0), follow_up("C1", ReportKind::correction, "T1", 101.0),
                                              follow_up("C2", ReportKind::correction, "C1", 102.0),
                                              follow_up("C3", ReportKind::correction, "T1", 103.0)};
    LifecycleStats st;
    const auto settled = reconcile_lifecycle(reports, &st);
    REQUIRE(settled.size() == 1);
    CHECK(settled[0].record_id == "T1");
    CHECK(settled[0].price == 103.0);
    CHECK(st.corrections_applied == 3);
    CHECK(st.dangling_skipped == 0);
}

TEST_CASE("lifecycle: a cancel of a correction removes the original trade") {
    const std::vector<RawTradeReport> reports{trade("T1"), trade("T2"), follow_up("C1", ReportKind::correction, "T1", 99.0),
                                              follow_up("X1", ReportKind::cancel, "C1"),
                                              follow_up("R1", ReportKind::reversal, "T2"),
                                              follow_up("X2", ReportKind::cancel, "T1"),
                                              follow_up("X3", ReportKind::cancel, "NOPE")};
    LifecycleStats st;
    const auto settled = reconcile_lifecycle(reports, &st);
    CHECK(settled.empty());
    CHECK(st.trade_reports == 2);
    CHECK(st.cancels_applied == 1);
    CHECK(st.reversals_applied == 1);
    CHECK(st.trades_removed == 2);
    CHECK(st.dangling_skipped == 2);  // X2 hits a removed trade, X3 an unknown one
    CHECK(st.log.size() == 2);
}

TEST_CASE("filter steps") {
    const BusinessCalendar cal({make_date(2015, 3, 4)});
    const FilterConfig fc;
    auto r = trade("T1");
    CHECK(filter_step_for(r, cal, fc) == 0);

    auto agent = r;
    agent.capacity = Capacity::agent;
    agent.contra_party = ContraParty::dealer;
    agent.customer_side.reset();
    CHECK(filter_step_for(agent, cal, fc) == 2);

    auto saturday = r;
    saturday.exec.date = make_date(2015, 3, 7);
    CHECK(filter_step_for(saturday, cal, fc) == 3);
    auto holiday = r;
    holiday.exec.date = make_date(2015, 3, 4);
    CHECK(filter_step_for(holiday, cal, fc) == 3);

    auto early = r;
    early.exec.seconds = 7 * 3600 + 59 * 60 + 59;
    CHECK(filter_step_for(early, cal, fc) == 4);
    auto close = r;
    close.exec.seconds = 17 * 3600 + 15 * 60;
    CHECK(filter_step_for(close, cal, fc) == 0);
    close.exec.seconds += 1;
    CHECK(filter_step_for(close, cal, fc) == 4);

    auto irregular = r;
    irregular.sale_conditions = {"X", "W"};
    CHECK(filter_step_for(irregular, cal, fc) == 5);

    auto cheap = r;
    cheap.price = 9.99;
    CHECK(filter_step_for(cheap, cal, fc) == 6);
    cheap.price = 10.00;
    CHECK(filter_step_for(cheap, cal, fc) == 0);

    auto other = r;
    other.sub_product = SubProduct::other;
    CHECK(filter_step_for(other, cal, fc) == 7);
}

TEST_CASE("filter pipeline bookkeeping and idempotence") {
    const BusinessCalendar cal;
    CounterRng rng(11);
    std::vector<RawTradeReport> trades;
    for (int i = 0; i < 2000; ++i) {
        auto r = trade("T" + std::to_string(i), 5.0 + 200.0 * rng.uniform());
        r.exec.date = make_date(2015, 3, 2) + std::chrono::days(rng.below(7));
        r.exec.seconds = static_cast<std::int32_t>(6 * 3600 + rng.below(14 * 3600));
        if (rng.bernoulli(0.05)) r.sale_conditions = {"Z"};
        if (rng.bernoulli(0.05)) r.sub_product = SubProduct::other;
        trades.push_back(r);
    }
    const auto res = filter_pipeline(trades, cal);
    REQUIRE(res.report.steps.size() == 6);
    std::size_t removed = 0;
    std::size_t input = trades.size();
    for (const auto& s : res.report.steps) {
        CHECK(s.input == input);
        CHECK(s.remaining == s.input - s.removed);
        CHECK(s.removed_pct == doctest::Approx(s.input ? 100.0 * s.removed / s.input : 0.0));
        removed += s.removed;
        input = s.remaining;
    }
    CHECK(removed + res.kept.size() == trades.size());
    for (const auto& k : res.kept) CHECK(filter_step_for(k, cal, {}) == 0);

    const auto again = filter_pipeline(res.kept, cal);
    CHECK(again.kept.size() == res.kept.size());
    for (const auto& s : again.report.steps) CHECK(s.removed == 0);
}

TEST_CASE("volume caps") {
    std::vector<CleanTrade> trades{{"HY1", 0, {}, 100.0, 2'500'000.0, Leg::customer_buy},
                                   {"HY1", 1, {}, 100.0, 1'000'000.0, Leg::customer_buy},
                                   {"IG1", 0, {}, 100.0, 400'000.0, Leg::customer_sell},
                                   {"IG1", 1, {}, 100.0, 5'000'000.0, Leg::customer_sell},
                                   {"IG1", 2, {}, 100.0, 7'000'000.0, Leg::dealer_dealer}};
    const std::map<std::string, Grade> grade{{"HY1", Grade::HY}, {"IG1", Grade::IG}};
    const auto capped = cap_volumes(trades, grade);
    CHECK(capped[0].volume == 1'000'000.0);
    CHECK(capped[1].volume == 1'000'000.0);
    CHECK(capped[2].volume == 400'000.0);
    CHECK(capped[3].volume == 5'000'000.0);
    CHECK(capped[4].volume == 5'000'000.0);
    CHECK_THROWS_AS(cap_volumes(trades, {{"HY1", Grade::HY}}), DataError);
}

TEST_CASE("capping never increases volume") {
    CounterRng rng(5);
    std::vector<CleanTrade> trades;
    std::map<std::string, Grade> grade{{"A", Grade::HY}, {"B", Grade::IG}};
    for (std::size_t i = 0; i < 5000; ++i) {
        trades.push_back(CleanTrade{i % 2 ? "A" : "B", i, {}, 100.0, 1000.0 * std::floor(rng.lognormal(6.0, 2.0)) + 1000.0,
                                    Leg::customer_buy});
    }
    const auto capped = cap_volumes(trades, grade);
    for (std::size_t i = 0; i < trades.size(); ++i) {
        CHECK(capped[i].volume <= trades[i].volume);
        const double cap = grade[trades[i].cusip] == Grade::HY ? 1e6 : 5e6;
        CHECK(capped[i].volume <= cap);
        if (trades[i].volume <= cap) CHECK(capped[i].volume == trades[i].volume);
    }
}

TEST_CASE("clean trades are grouped and indexed per bond") {
    auto a = trade("1");
    a.cusip = "B";
    a.exec.seconds = 50;
    auto b = trade("2");
    b.cusip = "A";
    auto c = trade("3");
    c.cusip = "B";
    c.exec.seconds = 10;
    const auto clean = to_clean_trades({a, b, c});
    REQUIRE(clean.size() == 3);
    CHECK(clean[0].cusip == "A");
    CHECK(clean[1].cusip == "B");
    CHECK(clean[1].t.seconds == 10);
    CHECK(clean[1].k == 0);
    CHECK(clean[2].k == 1);
    CHECK(parse_clean_trades_csv(format_clean_trades_csv(clean)).size() == 3);
}

TEST_CASE("cancels on a generated tape match the fixture manifest") {
    TraceFixtureConfig cfg;
    cfg.n_bonds = 2;
    cfg.trades_per_bond = 500;
    cfg.n_weeks = 4;
    cfg.cancel_rate = 0.10;
    cfg.violation_rate = 0.0;
    cfg.correction_rate = 0.0;
    const auto fx = generate_trace_fixture(cfg, Execution::serial);
    const auto parsed = parse_trace_csv(format_trace_csv(fx.reports));
    LifecycleStats st;
    const auto settled = reconcile_lifecycle(parsed, &st);
    const auto& life = fx.manifest.at("lifecycle");
    CHECK(st.cancels_applied == life.at("cancels").get<std::size_t>());
    CHECK(st.reversals_applied == life.at("reversals").get<std::size_t>());
    CHECK(st.trades_removed == life.at("trades_removed").get<std::size_t>());
    CHECK(st.dangling_skipped == life.at("dangling").get<std::size_t>());
    CHECK(settled.size() == fx.manifest.at("true_trades").get<std::size_t>());
    CHECK(st.cancels_applied + st.reversals_applied > 50);
}
