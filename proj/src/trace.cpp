#include "bondtca/trace.hpp"

#include "bondtca/csv.hpp"
#include "bondtca/error.hpp"
#include "bondtca/parallel.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_map>

namespace bondtca {

std::string_view to_string(ReportKind k) {
    switch (k) {
        case ReportKind::trade: return "trade";
        case ReportKind::cancel: return "cancel";
        case ReportKind::correction: return "correction";
        case ReportKind::reversal: return "reversal";
    }
    return "?";
}

std::string_view to_string(Capacity c) { return c == Capacity::agent ? "agent" : "principal"; }
std::string_view to_string(ContraParty c) { return c == ContraParty::dealer ? "dealer" : "customer"; }
std::string_view to_string(CustomerSide s) { return s == CustomerSide::customer_buy ? "customer_buy" : "customer_sell"; }
std::string_view to_string(SubProduct s) { return s == SubProduct::corporate_bond ? "corporate_bond" : "other"; }
std::string_view to_string(Grade g) { return g == Grade::IG ? "IG" : "HY"; }

std::string_view to_string(Leg l) {
    switch (l) {
        case Leg::customer_buy: return "customer_buy";
        case Leg::customer_sell: return "customer_sell";
        case Leg::dealer_dealer: return "dealer_dealer";
    }
    return "?";
}

Leg parse_leg(std::string_view text) {
    if (text == "customer_buy") return Leg::customer_buy;
    if (text == "customer_sell") return Leg::customer_sell;
    if (text == "dealer_dealer") return Leg::dealer_dealer;
    throw DataError("unknown leg '" + std::string(text) + "'");
}

Grade parse_grade(std::string_view text) {
    if (text == "IG") return Grade::IG;
    if (text == "HY") return Grade::HY;
    throw DataError("unknown grade '" + std::string(text) + "' (expected IG or HY)");
}

Leg RawTradeReport::leg() const {
    if (contra_party == ContraParty::dealer) return Leg::dealer_dealer;
    return customer_side == CustomerSide::customer_sell ? Leg::customer_sell : Leg::customer_buy;
}

const std::vector<std::string_view>& tape_columns() {
    static const std::vector<std::string_view> cols{
        "record_id", "cusip", "exec_date", "exec_time", "price", "volume", "report_kind", "references_record",
        "capacity", "contra_party", "customer_side", "sale_condition", "sub_product"};
    return cols;
}

namespace {

enum Col { c_id, c_cusip, c_date, c_time, c_price, c_volume, c_kind, c_ref, c_capacity, c_contra, c_side, c_cond, c_sub, c_count };

ReportKind parse_kind(std::string_view s, std::size_t row) {
    if (s == "trade" || s == "T") return ReportKind::trade;
    if (s == "cancel" || s == "X") return ReportKind::cancel;
    if (s == "correction" || s == "C") return ReportKind::correction;
    if (s == "reversal" || s == "R") return ReportKind::reversal;
    throw ParseError(row, "report_kind", "unknown report kind '" + std::string(s) + "'");
}

std::vector<std::string> split_conditions(std::string_view s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        auto end = s.find_first_of("; ", start);
        if (end == std::string_view::npos) end = s.size();
        if (end > start) out.emplace_back(s.substr(start, end - start));
        start = end + 1;
    }
    return out;
}

}  // namespace

std::vector<RawTradeReport> parse_trace_csv(std::string_view text) {
    CsvReader reader(text);
    std::vector<std::string> fields;
    if (!reader.next(fields)) throw DataError("trade tape is empty (header row required)");
    CsvHeader header(fields);
    header.require(tape_columns());
    std::array<std::size_t, c_count> idx{};
    for (std::size_t i = 0; i < c_count; ++i) idx[i] = header.at(tape_columns()[i]);

    std::vector<RawTradeReport> out;
    std::size_t row = 0;
    while (reader.next(fields)) {
        ++row;
        if (fields.size() != header.size()) {
            throw ParseError(row, fields.size() < header.size() ? std::string(tape_columns()[std::min<std::size_t>(fields.size(), c_count - 1)]) : "sale_condition",
                             "expected " + std::to_string(header.size()) + " fields, found " + std::to_string(fields.size()));
        }
        auto field = [&](Col c) -> std::string& { return fields[idx[c]]; };
        RawTradeReport r;
        r.row = row;
        r.record_id = std::move(field(c_id));
        if (r.record_id.empty()) throw ParseError(row, "record_id", "empty record id");
        r.cusip = std::move(field(c_cusip));
        r.kind = parse_kind(field(c_kind), row);
        try {
            r.exec.date = parse_date(field(c_date));
        } catch (const DataError& e) {
            throw ParseError(row, "exec_date", e.what());
        }
        try {
            r.exec.seconds = parse_time_of_day(field(c_time));
        } catch (const DataError& e) {
            throw ParseError(row, "exec_time", e.what());
        }
        auto price = try_parse_double(field(c_price));
        if (!price) throw ParseError(row, "price", "not a number: '" + field(c_price) + "'");
        r.price = *price;
        auto volume = try_parse_double(field(c_volume));
        if (!volume) throw ParseError(row, "volume", "not a number: '" + field(c_volume) + "'");
        r.volume = *volume;
        if (r.kind == ReportKind::trade) {
            if (r.price <= 0.0) throw ParseError(row, "price", "trade price must be positive");
            if (r.volume <= 0.0) throw ParseError(row, "volume", "trade volume must be positive");
            if (!field(c_ref).empty()) throw ParseError(row, "references_record", "a trade must not reference a record");
        } else {
            if (field(c_ref).empty()) throw ParseError(row, "references_record", "missing reference for " + std::string(to_string(r.kind)));
            r.references_record = std::move(field(c_ref));
        }
        const std::string& cap = field(c_capacity);
        if (cap == "principal" || cap == "P") r.capacity = Capacity::principal;
        else if (cap == "agent" || cap == "A") r.capacity = Capacity::agent;
        else throw ParseError(row, "capacity", "unknown capacity '" + cap + "'");
        const std::string& contra = field(c_contra);
        if (contra == "customer" || contra == "C") r.contra_party = ContraParty::customer;
        else if (contra == "dealer" || contra == "D") r.contra_party = ContraParty::dealer;
        else throw ParseError(row, "contra_party", "unknown contra party '" + contra + "'");
        const std::string& side = field(c_side);
        if (side == "customer_buy" || side == "B") r.customer_side = CustomerSide::customer_buy;
        else if (side == "customer_sell" || side == "S") r.customer_side = CustomerSide::customer_sell;
        else if (!side.empty()) throw ParseError(row, "customer_side", "unknown customer side '" + side + "'");
        if (r.contra_party == ContraParty::customer && !r.customer_side) {
            throw ParseError(row, "customer_side", "customer trade without a side");
        }
        if (r.contra_party == ContraParty::dealer && r.customer_side) {
            throw ParseError(row, "customer_side", "dealer trade must not carry a customer side");
        }
        r.sale_conditions = split_conditions(field(c_cond));
        const std::string& sub = field(c_sub);
        if (sub.empty()) throw ParseError(row, "sub_product", "empty sub-product");
        r.sub_product = (sub == "corporate_bond" || sub == "CORP") ? SubProduct::corporate_bond : SubProduct::other;
        out.push_back(std::move(r));
    }
    return out;
}

std::string format_trace_csv(const std::vector<RawTradeReport>& reports) {
    std::string out;
    out.reserve(reports.size() * 110 + 200);
    for (std::size_t i = 0; i < tape_columns().size(); ++i) {
        if (i) out += ',';
        out += tape_columns()[i];
    }
    out += '\n';
    for (const auto& r : reports) {
        out += csv_field(r.record_id);
        out += ',';
        out += csv_field(r.cusip);
        out += ',';
        out += format_date(r.exec.date);
        out += ',';
        out += format_time_of_day(r.exec.seconds);
        out += ',';
        append_number(out, r.price);
        out += ',';
        append_number(out, r.volume);
        out += ',';
        out += to_string(r.kind);
        out += ',';
        if (r.references_record) out += csv_field(*r.references_record);
        out += ',';
        out += to_string(r.capacity);
        out += ',';
        out += to_string(r.contra_party);
        out += ',';
        if (r.customer_side) out += to_string(*r.customer_side);
        out += ',';
        std::string cond;
        for (std::size_t i = 0; i < r.sale_conditions.size(); ++i) {
            if (i) cond += ';';
            cond += r.sale_conditions[i];
        }
        out += csv_field(cond);
        out += ',';
        out += to_string(r.sub_product);
        out += '\n';
    }
    return out;
}

std::vector<RawTradeReport> reconcile_lifecycle(const std::vector<RawTradeReport>& reports, LifecycleStats* stats) {
    LifecycleStats local;
    LifecycleStats& st = stats ? *stats : local;
    st = LifecycleStats{};

    std::vector<RawTradeReport> trades;
    std::unordered_map<std::string, std::size_t> slot_of;  // record id (or correction alias) -> trade slot
    for (const auto& r : reports) {
        if (r.kind != ReportKind::trade) continue;
        if (!slot_of.emplace(r.record_id, trades.size()).second) {
            st.log.push_back("row " + std::to_string(r.row) + ": duplicate trade record_id '" + r.record_id + "' ignored");
            continue;
        }
        trades.push_back(r);
    }
    st.trade_reports = trades.size();
    std::vector<char> alive(trades.size(), 1);

    for (const auto& r : reports) {
        if (r.kind == ReportKind::trade) continue;
        auto it = slot_of.find(*r.references_record);
        if (it == slot_of.end()) {
            ++st.dangling_skipped;
            st.log.push_back("row " + std::to_string(r.row) + ": " + std::string(to_string(r.kind)) + " '" + r.record_id +
                             "' references unknown record '" + *r.references_record + "'");
            continue;
        }
        const std::size_t slot = it->second;
        if (!alive[slot]) {
            ++st.dangling_skipped;
            st.log.push_back("row " + std::to_string(r.row) + ": " + std::string(to_string(r.kind)) + " '" + r.record_id +
                             "' references already-removed record '" + *r.references_record + "'");
            continue;
        }
        if (r.kind == ReportKind::correction) {
            RawTradeReport& t = trades[slot];
            const std::string id = t.record_id;
            const std::size_t row = t.row;
            t = r;
            t.record_id = id;
            t.row = row;
            t.kind = ReportKind::trade;
            t.references_record.reset();
            slot_of.emplace(r.record_id, slot);
            ++st.corrections_applied;
        } else {
            alive[slot] = 0;
            ++st.trades_removed;
            if (r.kind == ReportKind::cancel) ++st.cancels_applied;
            else ++st.reversals_applied;
        }
    }

    std::vector<RawTradeReport> settled;
    settled.reserve(trades.size() - st.trades_removed);
    for (std::size_t i = 0; i < trades.size(); ++i) {
        if (alive[i]) settled.push_back(std::move(trades[i]));
    }
    st.trades_settled = settled.size();
    return settled;
}

int filter_step_for(const RawTradeReport& r, const BusinessCalendar& calendar, const FilterConfig& config) {
    if (r.capacity == Capacity::agent && r.contra_party == ContraParty::dealer) return 2;
    if (!calendar.is_business_day(r.exec.date)) return 3;
    if (r.exec.seconds < config.open_seconds || r.exec.seconds > config.close_seconds) return 4;
    for (const auto& c : r.sale_conditions) {
        if (config.irregular_conditions.contains(c)) return 5;
    }
    if (r.price < config.min_price) return 6;
    if (r.sub_product != SubProduct::corporate_bond) return 7;
    return 0;
}

namespace {

const char* step_name(int step) {
    switch (step) {
        case 1: return "keep settled trades";
        case 2: return "keep trades reported by dealers";
        case 3: return "keep business days";
        case 4: return "keep opened hours";
        case 5: return "keep regular trades";
        case 6: return "keep compatible prices";
        case 7: return "keep bonds only";
    }
    return "";
}

FilterStep make_step(int step, std::size_t input, std::size_t removed) {
    FilterStep s;
    s.step = step;
    s.name = step_name(step);
    s.input = input;
    s.removed = removed;
    s.removed_pct = input == 0 ? 0.0 : 100.0 * static_cast<double>(removed) / static_cast<double>(input);
    s.remaining = input - removed;
    return s;
}

}  // namespace

FilterResult filter_pipeline(const std::vector<RawTradeReport>& trades, const BusinessCalendar& calendar,
                             const FilterConfig& config) {
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(trades.size());
    std::vector<int> removed_at(trades.size(), 0);
    BONDTCA_PARALLEL_FOR
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        removed_at[static_cast<std::size_t>(i)] = filter_step_for(trades[static_cast<std::size_t>(i)], calendar, config);
    }

    std::array<std::size_t, 8> removed{};
    FilterResult result;
    result.kept.reserve(trades.size());
    for (std::size_t i = 0; i < trades.size(); ++i) {
        if (removed_at[i] == 0) result.kept.push_back(trades[i]);
        else ++removed[static_cast<std::size_t>(removed_at[i])];
    }
    std::size_t remaining = trades.size();
    for (int step = 2; step <= 7; ++step) {
        result.report.steps.push_back(make_step(step, remaining, removed[static_cast<std::size_t>(step)]));
        remaining = result.report.steps.back().remaining;
    }
    return result;
}

FilterReport with_lifecycle_step(const FilterReport& filter, const LifecycleStats& lifecycle) {
    FilterReport out;
    out.lifecycle = lifecycle;
    out.steps.push_back(make_step(1, lifecycle.trade_reports, lifecycle.trades_removed));
    for (const auto& s : filter.steps) {
        if (s.step != 1) out.steps.push_back(s);
    }
    return out;
}

std::vector<CleanTrade> to_clean_trades(const std::vector<RawTradeReport>& kept) {
    std::vector<std::size_t> order(kept.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto& x = kept[a];
        const auto& y = kept[b];
        if (x.cusip != y.cusip) return x.cusip < y.cusip;
        return x.exec < y.exec;
    });
    std::vector<CleanTrade> out;
    out.reserve(kept.size());
    std::size_t k = 0;
    for (std::size_t i = 0; i < order.size(); ++i) {
        const auto& r = kept[order[i]];
        if (i == 0 || r.cusip != out.back().cusip) k = 0;
        out.push_back(CleanTrade{r.cusip, k++, r.exec, r.price, r.volume, r.leg()});
    }
    return out;
}

std::vector<CleanTrade> cap_volumes(const std::vector<CleanTrade>& trades, const std::map<std::string, Grade>& grade_of) {
    std::vector<CleanTrade> out = trades;
    for (auto& t : out) {
        auto it = grade_of.find(t.cusip);
        if (it == grade_of.end()) throw DataError("no grade for cusip '" + t.cusip + "'");
        const double cap = it->second == Grade::HY ? kHighYieldCap : kInvestmentGradeCap;
        t.volume = std::min(t.volume, cap);
    }
    return out;
}

nlohmann::json filter_report_to_json(const FilterReport& report) {
    nlohmann::json steps = nlohmann::json::array();
    for (const auto& s : report.steps) {
        steps.push_back({{"step", s.step}, {"name", s.name}, {"removed", s.removed}, {"removed_pct", s.removed_pct},
                         {"remaining", s.remaining}});
    }
    nlohmann::json j{{"steps", steps}, {"input", report.input_count()}, {"remaining", report.final_count()}};
    if (report.lifecycle) {
        const auto& l = *report.lifecycle;
        j["lifecycle"] = {{"trade_reports", l.trade_reports},     {"cancels_applied", l.cancels_applied},
                          {"corrections_applied", l.corrections_applied}, {"reversals_applied", l.reversals_applied},
                          {"dangling_skipped", l.dangling_skipped}, {"trades_removed", l.trades_removed},
                          {"trades_settled", l.trades_settled},   {"log", l.log}};
    }
    return j;
}

std::string format_clean_trades_csv(const std::vector<CleanTrade>& trades) {
    std::string out = "cusip,k,t,price,volume,leg\n";
    out.reserve(trades.size() * 70 + 64);
    for (const auto& t : trades) {
        out += csv_field(t.cusip);
        out += ',';
        out += std::to_string(t.k);
        out += ',';
        out += format_timestamp(t.t);
        out += ',';
        append_number(out, t.price);
        out += ',';
        append_number(out, t.volume);
        out += ',';
        out += to_string(t.leg);
        out += '\n';
    }
    return out;
}

std::vector<CleanTrade> parse_clean_trades_csv(std::string_view text) {
    CsvReader reader(text);
    std::vector<std::string> f;
    if (!reader.next(f)) throw DataError("clean-trade file is empty");
    CsvHeader h(f);
    h.require({"cusip", "k", "t", "price", "volume", "leg"});
    const auto ic = h.at("cusip"), ik = h.at("k"), it = h.at("t"), ip = h.at("price"), iv = h.at("volume"), il = h.at("leg");
    std::vector<CleanTrade> out;
    std::size_t row = 0;
    while (reader.next(f)) {
        ++row;
        if (f.size() != h.size()) throw ParseError(row, "cusip", "wrong field count");
        CleanTrade t;
        t.cusip = f[ic];
        auto k = try_parse_int(f[ik]);
        if (!k || *k < 0) throw ParseError(row, "k", "invalid index");
        t.k = static_cast<std::size_t>(*k);
        try {
            t.t = parse_timestamp(f[it]);
        } catch (const DataError& e) {
            throw ParseError(row, "t", e.what());
        }
        auto p = try_parse_double(f[ip]);
        if (!p) throw ParseError(row, "price", "not a number");
        auto v = try_parse_double(f[iv]);
        if (!v) throw ParseError(row, "volume", "not a number");
        t.price = *p;
        t.volume = *v;
        try {
            t.leg = parse_leg(f[il]);
        } catch (const DataError& e) {
            throw ParseError(row, "leg", e.what());
        }
        out.push_back(std::move(t));
    }
    return out;
}

}  // namespace bondtca
