#include "bondtca/microstructure.hpp"

#include "bondtca/csv.hpp"
#include "bondtca/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace bondtca {

MidConvention parse_mid_convention(std::string_view text) {
    if (text == "paper") return MidConvention::paper;
    if (text == "corrected") return MidConvention::corrected;
    throw ConfigError("mid_convention must be 'paper' or 'corrected', got '" + std::string(text) + "'");
}

std::string_view to_string(MidConvention c) { return c == MidConvention::paper ? "paper" : "corrected"; }

std::optional<SpreadObservation> spread_from_pair(const SignedTrade& first, const SignedTrade& second, MidConvention mid) {
    const double eps = static_cast<double>(second.epsilon);
    const double psi = (second.price - first.price) * eps;
    const double m = mid == MidConvention::paper ? first.price - eps * psi / 2.0 : first.price + eps * psi / 2.0;
    if (!(m > 0.0)) return std::nullopt;
    SpreadObservation o;
    o.cusip = second.cusip;
    o.k = second.k;
    o.t = second.t;
    o.psi = psi;
    o.mid = m;
    o.s_bp = psi / m * 1e4;
    return o;
}

namespace {

struct BondSpreads {
    std::vector<SpreadObservation> obs;
    SpreadRunStats stats;
};

BondSpreads spreads_for_bond(std::span<const SignedTrade> bond, const SpreadConfig& config) {
    BondSpreads out;
    const SignedTrade* prev = nullptr;
    bool prev_used = false;
    for (const auto& t : bond) {
        if (t.epsilon == 0) continue;
        ++out.stats.signed_trades;
        bool used = false;
        if (prev && prev->epsilon == -t.epsilon &&
            std::abs(static_cast<double>(t.t.epoch_seconds() - prev->t.epoch_seconds())) < config.max_gap_seconds) {
            if (auto o = spread_from_pair(*prev, t, config.mid)) {
                out.obs.push_back(std::move(*o));
                if (!prev_used) ++out.stats.trades_consumed;
                ++out.stats.trades_consumed;
                used = true;
            } else {
                ++out.stats.degenerate_mid;
                out.stats.log.push_back(t.cusip + " k=" + std::to_string(t.k) + ": non-positive mid, pair dropped");
            }
        }
        prev = &t;
        prev_used = used;
    }
    return out;
}

}  // namespace

std::vector<SpreadObservation> estimate_spreads(const std::vector<SignedTrade>& trades, const SpreadConfig& config,
                                                SpreadRunStats* stats) {
    if (!(config.max_gap_seconds > 0.0)) throw ConfigError("spread time window must be positive");
    const auto ranges = cusip_ranges(trades);
    std::vector<BondSpreads> per_bond(ranges.size());
    const std::span<const SignedTrade> all(trades);
    const std::ptrdiff_t nb = static_cast<std::ptrdiff_t>(ranges.size());
    BONDTCA_PARALLEL_FOR_DYNAMIC
    for (std::ptrdiff_t b = 0; b < nb; ++b) {
        auto [lo, hi] = ranges[static_cast<std::size_t>(b)];
        per_bond[static_cast<std::size_t>(b)] = spreads_for_bond(all.subspan(lo, hi - lo), config);
    }
    std::vector<SpreadObservation> out;
    SpreadRunStats total;
    for (auto& b : per_bond) {
        out.insert(out.end(), std::make_move_iterator(b.obs.begin()), std::make_move_iterator(b.obs.end()));
        total.signed_trades += b.stats.signed_trades;
        total.trades_consumed += b.stats.trades_consumed;
        total.degenerate_mid += b.stats.degenerate_mid;
        total.log.insert(total.log.end(), b.stats.log.begin(), b.stats.log.end());
    }
    if (stats) *stats = std::move(total);
    return out;
}

std::vector<WeeklySpread> aggregate_weekly(const std::vector<SpreadObservation>& obs) {
    std::map<std::pair<std::string, int>, std::pair<IsoWeek, std::vector<double>>> groups;
    for (const auto& o : obs) {
        const IsoWeek w = iso_week(o.t.date);
        auto& g = groups[{o.cusip, w.key()}];
        g.first = w;
        g.second.push_back(o.s_bp);
    }
    std::vector<WeeklySpread> out;
    out.reserve(groups.size());
    for (const auto& [key, g] : groups) {
        double sum = 0.0;
        for (double s : g.second) sum += s;
        out.push_back(WeeklySpread{key.first, g.first, sum / static_cast<double>(g.second.size()), g.second.size()});
    }
    return out;
}

std::optional<double> reference_price(std::span<const CleanTrade> day, std::optional<Timestamp> around) {
    std::vector<std::int64_t> anchors;
    if (around) {
        anchors.push_back(around->epoch_seconds());
    } else {
        for (const auto& t : day) {
            if (is_customer(t.leg)) anchors.push_back(t.t.epoch_seconds());
        }
    }
    double pv = 0.0, v = 0.0;
    for (const auto& t : day) {
        if (t.leg != Leg::dealer_dealer || !(t.volume > kReferenceMinVolume)) continue;
        const auto ts = t.t.epoch_seconds();
        const bool excluded = std::any_of(anchors.begin(), anchors.end(), [&](std::int64_t a) {
            return std::llabs(ts - a) <= kReferenceExclusionSeconds;
        });
        if (excluded) continue;
        pv += t.price * t.volume;
        v += t.volume;
    }
    if (v <= 0.0) return std::nullopt;
    return pv / v;
}

OneSidedSpread one_sided_spreads(std::span<const SignedTrade> day, double reference) {
    OneSidedSpread out;
    if (!day.empty()) {
        out.cusip = day.front().cusip;
        out.day = day.front().t.date;
    }
    out.reference = reference;
    double wb = 0.0, ws = 0.0;
    for (const auto& t : day) {
        if (t.epsilon > 0) {
            wb += t.volume * (t.price - reference) / reference;
            out.volume_b += t.volume;
        } else if (t.epsilon < 0) {
            ws += t.volume * (reference - t.price) / reference;
            out.volume_s += t.volume;
        }
    }
    if (out.volume_b > 0.0) out.spread_b = wb / out.volume_b;
    if (out.volume_s > 0.0) out.spread_s = ws / out.volume_s;
    return out;
}

std::vector<OneSidedSpread> one_sided_spreads_by_day(const std::vector<SignedTrade>& trades) {
    std::vector<OneSidedSpread> out;
    for (auto [lo, hi] : cusip_ranges(trades)) {
        std::size_t d0 = lo;
        while (d0 < hi) {
            std::size_t d1 = d0;
            while (d1 < hi && trades[d1].t.date == trades[d0].t.date) ++d1;
            const std::span<const SignedTrade> day(trades.data() + d0, d1 - d0);
            std::vector<CleanTrade> clean(day.begin(), day.end());
            OneSidedSpread s;
            s.cusip = trades[d0].cusip;
            s.day = trades[d0].t.date;
            double wb = 0.0, ws = 0.0;
            for (const auto& t : day) {
                if (t.epsilon == 0) continue;
                auto ref = reference_price(clean, t.t);
                if (!ref) continue;
                const double x = t.epsilon > 0 ? (t.price - *ref) / *ref : (*ref - t.price) / *ref;
                if (t.epsilon > 0) {
                    wb += t.volume * x;
                    s.volume_b += t.volume;
                } else {
                    ws += t.volume * x;
                    s.volume_s += t.volume;
                }
            }
            if (s.volume_b > 0.0) s.spread_b = wb / s.volume_b;
            if (s.volume_s > 0.0) s.spread_s = ws / s.volume_s;
            if (s.spread_b || s.spread_s) out.push_back(std::move(s));
            d0 = d1;
        }
    }
    return out;
}

std::string format_spread_observations_csv(const std::vector<SpreadObservation>& obs) {
    std::string out = "cusip,k,t,psi,mid,s_bp\n";
    out.reserve(obs.size() * 80 + 32);
    for (const auto& o : obs) {
        out += csv_field(o.cusip);
        out += ',';
        out += std::to_string(o.k);
        out += ',';
        out += format_timestamp(o.t);
        out += ',';
        append_number(out, o.psi);
        out += ',';
        append_number(out, o.mid);
        out += ',';
        append_number(out, o.s_bp);
        out += '\n';
    }
    return out;
}

std::vector<SpreadObservation> parse_spread_observations_csv(std::string_view text) {
    CsvReader reader(text);
    std::vector<std::string> f;
    if (!reader.next(f)) throw DataError("spread file is empty");
    CsvHeader h(f);
    h.require({"cusip", "k", "t", "psi", "mid", "s_bp"});
    std::vector<SpreadObservation> out;
    std::size_t row = 0;
    while (reader.next(f)) {
        ++row;
        if (f.size() != h.size()) throw ParseError(row, "cusip", "wrong field count");
        SpreadObservation o;
        o.cusip = f[h.at("cusip")];
        auto k = try_parse_int(f[h.at("k")]);
        if (!k || *k < 0) throw ParseError(row, "k", "invalid index");
        o.k = static_cast<std::size_t>(*k);
        o.t = parse_timestamp(f[h.at("t")]);
        for (auto [name, dst] : {std::pair<const char*, double*>{"psi", &o.psi}, {"mid", &o.mid}, {"s_bp", &o.s_bp}}) {
            auto v = try_parse_double(f[h.at(name)]);
            if (!v) throw ParseError(row, name, "not a number");
            *dst = *v;
        }
        out.push_back(std::move(o));
    }
    return out;
}

std::string format_weekly_spreads_csv(const std::vector<WeeklySpread>& rows) {
    std::string out = "cusip,iso_week,mean_s_bp,n_obs\n";
    for (const auto& r : rows) {
        out += csv_field(r.cusip);
        out += ',';
        out += r.week.str();
        out += ',';
        append_number(out, r.mean_s_bp);
        out += ',';
        out += std::to_string(r.n_obs);
        out += '\n';
    }
    return out;
}

std::vector<WeeklySpread> parse_weekly_spreads_csv(std::string_view text) {
    CsvReader reader(text);
    std::vector<std::string> f;
    if (!reader.next(f)) throw DataError("weekly spread file is empty");
    CsvHeader h(f);
    h.require({"cusip", "iso_week", "mean_s_bp", "n_obs"});
    std::vector<WeeklySpread> out;
    std::size_t row = 0;
    while (reader.next(f)) {
        ++row;
        if (f.size() != h.size()) throw ParseError(row, "cusip", "wrong field count");
        WeeklySpread w;
        w.cusip = f[h.at("cusip")];
        try {
            w.week = parse_iso_week(f[h.at("iso_week")]);
        } catch (const DataError& e) {
            throw ParseError(row, "iso_week", e.what());
        }
        auto m = try_parse_double(f[h.at("mean_s_bp")]);
        if (!m) throw ParseError(row, "mean_s_bp", "not a number");
        auto n = try_parse_int(f[h.at("n_obs")]);
        if (!n || *n < 1) throw ParseError(row, "n_obs", "must be a positive integer");
        w.mean_s_bp = *m;
        w.n_obs = static_cast<std::size_t>(*n);
        out.push_back(std::move(w));
    }
    return out;
}

}  // namespace bondtca
