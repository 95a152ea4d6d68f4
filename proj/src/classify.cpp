#include "bondtca/classify.hpp"

#include "bondtca/csv.hpp"
#include "bondtca/error.hpp"

namespace bondtca {

std::vector<SizeRun> find_size_runs(std::span<const CleanTrade> trades) {
    std::vector<SizeRun> runs;
    std::size_t i = 0;
    while (i < trades.size()) {
        std::size_t j = i + 1;
        while (j < trades.size() && trades[j].volume == trades[i].volume) ++j;
        if (j - i >= 2) runs.push_back(SizeRun{i, j, trades[i].volume});
        i = j;
    }
    return runs;
}

bool rpt_legs_match(Leg a, Leg b) {
    const bool ca = is_customer(a), cb = is_customer(b);
    if (ca != cb) return true;
    return ca && cb && a != b;
}

std::vector<std::pair<std::size_t, std::size_t>> mark_rpts(const SizeRun& run, std::span<const Leg> legs) {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    std::size_t i = run.begin;
    while (i + 1 < run.end) {
        if (rpt_legs_match(legs[i], legs[i + 1])) {
            pairs.emplace_back(i, i + 1);
            i += 2;
        } else {
            ++i;
        }
    }
    return pairs;
}

std::vector<SignedTrade> assign_signs(std::span<const CleanTrade> trades, const std::vector<bool>& rpt) {
    std::vector<SignedTrade> out;
    out.reserve(trades.size());
    for (std::size_t i = 0; i < trades.size(); ++i) {
        SignedTrade s;
        static_cast<CleanTrade&>(s) = trades[i];
        s.is_rpt = rpt[i];
        if (!s.is_rpt) {
            if (s.leg == Leg::customer_buy) s.epsilon = 1;
            else if (s.leg == Leg::customer_sell) s.epsilon = -1;
        }
        out.push_back(std::move(s));
    }
    return out;
}

namespace {

void classify_bond(std::span<const CleanTrade> bond, std::span<SignedTrade> out) {
    std::vector<Leg> legs(bond.size());
    for (std::size_t i = 0; i < bond.size(); ++i) legs[i] = bond[i].leg;
    std::vector<bool> rpt(bond.size(), false);
    for (const auto& run : find_size_runs(bond)) {
        for (auto [a, b] : mark_rpts(run, legs)) {
            rpt[a] = true;
            rpt[b] = true;
        }
    }
    auto signed_trades = assign_signs(bond, rpt);
    std::move(signed_trades.begin(), signed_trades.end(), out.begin());
}

}  // namespace

std::vector<SignedTrade> classify_trades(const std::vector<CleanTrade>& trades, Execution exec) {
    std::vector<SignedTrade> out(trades.size());
    const auto ranges = cusip_ranges(trades);
    const std::span<const CleanTrade> all(trades);
    const std::span<SignedTrade> dst(out);
    const std::ptrdiff_t nb = static_cast<std::ptrdiff_t>(ranges.size());
    if (exec == Execution::parallel) {
        BONDTCA_PARALLEL_FOR_DYNAMIC
        for (std::ptrdiff_t b = 0; b < nb; ++b) {
            auto [lo, hi] = ranges[static_cast<std::size_t>(b)];
            classify_bond(all.subspan(lo, hi - lo), dst.subspan(lo, hi - lo));
        }
    } else {
        for (auto [lo, hi] : ranges) classify_bond(all.subspan(lo, hi - lo), dst.subspan(lo, hi - lo));
    }
    return out;
}

std::string format_signed_trades_csv(const std::vector<SignedTrade>& trades) {
    std::string out = "cusip,k,t,price,volume,leg,epsilon,is_rpt\n";
    out.reserve(trades.size() * 76 + 64);
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
        out += ',';
        out += std::to_string(t.epsilon);
        out += ',';
        out += t.is_rpt ? '1' : '0';
        out += '\n';
    }
    return out;
}

std::vector<SignedTrade> parse_signed_trades_csv(std::string_view text) {
    // The leading columns are the clean-trade layout.
    CsvReader reader(text);
    std::vector<std::string> f;
    if (!reader.next(f)) throw DataError("signed-trade file is empty");
    CsvHeader h(f);
    h.require({"cusip", "k", "t", "price", "volume", "leg", "epsilon", "is_rpt"});
    const auto ic = h.at("cusip"), ik = h.at("k"), it = h.at("t"), ip = h.at("price"), iv = h.at("volume"),
               il = h.at("leg"), ie = h.at("epsilon"), ir = h.at("is_rpt");
    std::vector<SignedTrade> out;
    std::size_t row = 0;
    while (reader.next(f)) {
        ++row;
        if (f.size() != h.size()) throw ParseError(row, "cusip", "wrong field count");
        SignedTrade t;
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
        auto e = try_parse_int(f[ie]);
        if (!e || *e < -1 || *e > 1) throw ParseError(row, "epsilon", "must be -1, 0 or 1");
        t.epsilon = static_cast<int>(*e);
        if (f[ir] != "0" && f[ir] != "1") throw ParseError(row, "is_rpt", "must be 0 or 1");
        t.is_rpt = f[ir] == "1";
        out.push_back(std::move(t));
    }
    return out;
}

}  // namespace bondtca
