#include "bondtca/features.hpp"

#include "bondtca/csv.hpp"
#include "bondtca/error.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>

namespace bondtca {

namespace {

Date add_months(Date d, int months) {
    using namespace std::chrono;
    year_month_day ymd{d};
    year_month_day shifted = ymd + std::chrono::months{months};
    if (!shifted.ok()) shifted = year_month_day_last{shifted.year(), month_day_last{shifted.month()}};
    return sys_days{shifted};
}

}  // namespace

std::vector<CashFlow> cashflow_schedule(const BondReference& bond, Date as_of) {
    std::vector<CashFlow> flows;
    if (bond.maturity_date <= as_of) return flows;
    if (bond.frequency <= 0) {
        flows.push_back({bond.maturity_date, 100.0});
        return flows;
    }
    const int step = 12 / bond.frequency;
    const double coupon = bond.coupon_rate / static_cast<double>(bond.frequency);
    for (int i = 0;; ++i) {
        const Date d = add_months(bond.maturity_date, -step * i);
        if (d <= as_of) break;
        flows.push_back({d, coupon + (i == 0 ? 100.0 : 0.0)});
    }
    std::reverse(flows.begin(), flows.end());
    return flows;
}

namespace {

double price_at_yield(const std::vector<std::pair<double, double>>& tc, double y, double f) {
    double pv = 0.0;
    for (auto [t, c] : tc) pv += c * std::pow(1.0 + y / f, -f * t);
    return pv;
}

std::vector<std::pair<double, double>> timed_flows(const BondReference& bond, Date as_of) {
    std::vector<std::pair<double, double>> tc;
    for (const auto& cf : cashflow_schedule(bond, as_of)) tc.emplace_back(years_between(as_of, cf.date), cf.amount);
    return tc;
}

double compounding(const BondReference& bond) { return bond.frequency > 0 ? static_cast<double>(bond.frequency) : 1.0; }

}  // namespace

double yield_from_price(const BondReference& bond, double price, Date as_of) {
    if (!(price > 0.0)) throw DataError("duration: price must be positive for " + bond.cusip);
    const auto tc = timed_flows(bond, as_of);
    if (tc.empty()) throw DataError("duration: " + bond.cusip + " has matured by " + format_date(as_of));
    const double f = compounding(bond);
    double lo = -0.5, hi = 2.0;
    double p_lo = price_at_yield(tc, lo, f), p_hi = price_at_yield(tc, hi, f);
    if (price > p_lo || price < p_hi) {
        throw NumericalError("duration: no yield in [-0.5, 2] reprices " + bond.cusip + " at " + format_number(price));
    }
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double p = price_at_yield(tc, mid, f);
        if (std::abs(p - price) < 1e-8) return mid;
        if (p > price) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

double duration(const BondReference& bond, double price, Date as_of) {
    const double y = yield_from_price(bond, price, as_of);
    const double f = compounding(bond);
    double pv = 0.0, tpv = 0.0;
    for (auto [t, c] : timed_flows(bond, as_of)) {
        const double v = c * std::pow(1.0 + y / f, -f * t);
        pv += v;
        tpv += t * v;
    }
    return tpv / pv;
}

std::optional<double> weekly_volatility(std::span<const double> prices) {
    if (prices.size() < 3) return std::nullopt;
    const std::size_t n = prices.size() - 1;
    std::vector<double> r(n);
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        r[i] = std::log(prices[i + 1] / prices[i]);
        mean += r[i];
    }
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double x : r) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(n - 1)) * 100.0;
}

const std::array<std::string_view, kFeatureCount>& feature_names() {
    static const std::array<std::string_view, kFeatureCount> names{
        "volatility",   "n_trading_days",  "log_zero_trade_days", "prop_n_buy",  "prop_n_sell",
        "prop_vol_buy", "prop_vol_sell",   "trading_activity",    "log_total_volume", "avg_price",
        "coupon",       "duration",        "years_to_maturity",   "years_since_issuance", "turnover",
        "libor_ois",    "ind_HY",          "ind_IG",              "S1", "S2", "S3", "S4", "S5", "S6", "S7", "S8", "S9"};
    return names;
}

double FeatureRow::get(std::string_view name) const {
    const auto& names = feature_names();
    auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw DataError("unknown feature '" + std::string(name) + "'");
    return x[static_cast<std::size_t>(it - names.begin())];
}

std::vector<FeatureRow> build_feature_matrix(const std::vector<WeeklySpread>& weekly,
                                             const std::vector<SignedTrade>& trades,
                                             const std::map<std::string, BondReference>& reference,
                                             const MarketContext& context, const BusinessCalendar& calendar,
                                             FeatureBuildStats* stats) {
    // (cusip, week) -> trade indices, in k order.
    std::map<std::pair<std::string, int>, std::vector<std::size_t>> by_week;
    for (std::size_t i = 0; i < trades.size(); ++i) {
        by_week[{trades[i].cusip, iso_week(trades[i].t.date).key()}].push_back(i);
    }
    for (const auto& w : weekly) {
        if (!reference.contains(w.cusip)) throw DataError("no reference data for cusip '" + w.cusip + "'");
    }

    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(weekly.size());
    std::vector<std::optional<FeatureRow>> rows(weekly.size());
    std::vector<char> no_vol(weekly.size(), 0), no_ctx(weekly.size(), 0);
    std::vector<std::string> errors(weekly.size());
    BONDTCA_PARALLEL_FOR_DYNAMIC
    for (std::ptrdiff_t r = 0; r < n; ++r) {
        const auto ri = static_cast<std::size_t>(r);
        const WeeklySpread& w = weekly[ri];
        try {
            const BondReference& bond = reference.at(w.cusip);
            auto it = by_week.find({w.cusip, w.week.key()});
            if (it == by_week.end()) {
                no_vol[ri] = 1;
                continue;
            }
            const auto& idx = it->second;
            std::vector<double> prices;
            prices.reserve(idx.size());
            std::set<Date> days;
            double nb = 0, ns = 0, vb = 0, vs = 0, vol = 0, price_sum = 0;
            Date last = trades[idx.front()].t.date;
            for (auto i : idx) {
                const auto& t = trades[i];
                prices.push_back(t.price);
                days.insert(t.t.date);
                vol += t.volume;
                price_sum += t.price;
                last = std::max(last, t.t.date);
                if (t.leg == Leg::customer_buy) {
                    ++nb;
                    vb += t.volume;
                } else if (t.leg == Leg::customer_sell) {
                    ++ns;
                    vs += t.volume;
                }
            }
            auto sigma = weekly_volatility(prices);
            if (!sigma) {
                no_vol[ri] = 1;
                continue;
            }
            auto ctx = context.find(w.week);
            if (ctx == context.end()) {
                no_ctx[ri] = 1;
                continue;
            }
            FeatureRow row;
            row.cusip = w.cusip;
            row.week = w.week;
            row.mean_s_bp = w.mean_s_bp;
            auto& x = row.x;
            const double avg_price = price_sum / static_cast<double>(idx.size());
            const int business = calendar.business_days_in_week(w.week);
            const int zero_days = std::max(0, business - static_cast<int>(days.size()));
            x[0] = *sigma;
            x[1] = static_cast<double>(days.size());
            x[2] = std::log10(1.0 + zero_days);
            x[3] = nb + ns > 0 ? nb / (nb + ns) : 0.0;
            x[4] = nb + ns > 0 ? ns / (nb + ns) : 0.0;
            x[5] = vb + vs > 0 ? vb / (vb + vs) : 0.0;
            x[6] = vb + vs > 0 ? vs / (vb + vs) : 0.0;
            x[7] = std::log10(static_cast<double>(idx.size()));
            x[8] = std::log10(vol);
            x[9] = avg_price;
            x[10] = bond.coupon_rate;
            x[11] = duration(bond, avg_price, last);
            x[12] = years_between(last, bond.maturity_date);
            x[13] = years_between(bond.issue_date, last);
            x[14] = vol / bond.amount_outstanding;
            x[15] = ctx->second;
            x[16] = bond.grade == Grade::HY ? 1.0 : 0.0;
            x[17] = bond.grade == Grade::IG ? 1.0 : 0.0;
            x[17 + static_cast<std::size_t>(bond.sector)] = 1.0;
            rows[ri] = std::move(row);
        } catch (const std::exception& e) {
            errors[ri] = e.what();
        }
    }
    for (std::size_t i = 0; i < errors.size(); ++i) {
        if (!errors[i].empty()) throw DataError(weekly[i].cusip + " " + weekly[i].week.str() + ": " + errors[i]);
    }

    std::vector<FeatureRow> out;
    FeatureBuildStats st;
    st.weekly_rows = weekly.size();
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i]) out.push_back(std::move(*rows[i]));
        st.dropped_volatility += static_cast<std::size_t>(no_vol[i]);
        st.dropped_context += static_cast<std::size_t>(no_ctx[i]);
    }
    if (stats) *stats = st;
    return out;
}

std::map<std::string, BondReference> parse_bond_reference_csv(std::string_view text) {
    CsvReader reader(text);
    std::vector<std::string> f;
    if (!reader.next(f)) throw DataError("bond reference file is empty");
    CsvHeader h(f);
    h.require({"cusip", "coupon_rate", "issue_date", "maturity_date", "amount_outstanding", "grade", "sector", "frequency"});
    std::map<std::string, BondReference> out;
    std::size_t row = 0;
    while (reader.next(f)) {
        ++row;
        if (f.size() != h.size()) throw ParseError(row, "cusip", "wrong field count");
        BondReference b;
        b.cusip = f[h.at("cusip")];
        auto coupon = try_parse_double(f[h.at("coupon_rate")]);
        if (!coupon || *coupon < 0) throw ParseError(row, "coupon_rate", "invalid coupon");
        b.coupon_rate = *coupon;
        try {
            b.issue_date = parse_date(f[h.at("issue_date")]);
        } catch (const DataError& e) {
            throw ParseError(row, "issue_date", e.what());
        }
        try {
            b.maturity_date = parse_date(f[h.at("maturity_date")]);
        } catch (const DataError& e) {
            throw ParseError(row, "maturity_date", e.what());
        }
        if (!(b.issue_date < b.maturity_date)) throw ParseError(row, "maturity_date", "must be after issue_date");
        auto amt = try_parse_double(f[h.at("amount_outstanding")]);
        if (!amt || *amt <= 0) throw ParseError(row, "amount_outstanding", "must be positive");
        b.amount_outstanding = *amt;
        try {
            b.grade = parse_grade(f[h.at("grade")]);
        } catch (const DataError& e) {
            throw ParseError(row, "grade", e.what());
        }
        std::string sector = f[h.at("sector")];
        if (!sector.empty() && sector.front() == 'S') sector.erase(0, 1);
        auto s = try_parse_int(sector);
        if (!s || *s < 1 || *s > 9) throw ParseError(row, "sector", "expected S1..S9");
        b.sector = static_cast<int>(*s);
        auto fr = try_parse_int(f[h.at("frequency")]);
        if (!fr || (*fr != 0 && *fr != 1 && *fr != 2 && *fr != 4 && *fr != 12)) {
            throw ParseError(row, "frequency", "expected 0, 1, 2, 4 or 12");
        }
        b.frequency = static_cast<int>(*fr);
        if (!out.emplace(b.cusip, b).second) throw ParseError(row, "cusip", "duplicate cusip " + b.cusip);
    }
    return out;
}

std::string format_bond_reference_csv(const std::vector<BondReference>& bonds) {
    std::string out = "cusip,coupon_rate,issue_date,maturity_date,amount_outstanding,grade,sector,frequency\n";
    for (const auto& b : bonds) {
        out += csv_field(b.cusip) + ',' + format_number(b.coupon_rate) + ',' + format_date(b.issue_date) + ',' +
               format_date(b.maturity_date) + ',' + format_number(b.amount_outstanding) + ',' +
               std::string(to_string(b.grade)) + ",S" + std::to_string(b.sector) + ',' + std::to_string(b.frequency) + '\n';
    }
    return out;
}

MarketContext parse_market_context_csv(std::string_view text) {
    CsvReader reader(text);
    std::vector<std::string> f;
    if (!reader.next(f)) throw DataError("market context file is empty");
    CsvHeader h(f);
    h.require({"iso_week", "libor_ois"});
    MarketContext out;
    std::size_t row = 0;
    while (reader.next(f)) {
        ++row;
        if (f.size() != h.size()) throw ParseError(row, "iso_week", "wrong field count");
        IsoWeek w;
        try {
            w = parse_iso_week(f[h.at("iso_week")]);
        } catch (const DataError& e) {
            throw ParseError(row, "iso_week", e.what());
        }
        auto v = try_parse_double(f[h.at("libor_ois")]);
        if (!v) throw ParseError(row, "libor_ois", "not a number");
        out[w] = *v;
    }
    return out;
}

std::string format_market_context_csv(const MarketContext& ctx) {
    std::string out = "iso_week,libor_ois\n";
    for (const auto& [w, v] : ctx) out += w.str() + ',' + format_number(v) + '\n';
    return out;
}

std::string format_features_csv(const std::vector<FeatureRow>& rows) {
    std::string out = "cusip,iso_week,mean_s_bp";
    for (auto n : feature_names()) {
        out += ',';
        out += n;
    }
    out += '\n';
    for (const auto& r : rows) {
        out += csv_field(r.cusip);
        out += ',';
        out += r.week.str();
        out += ',';
        append_number(out, r.mean_s_bp);
        for (double v : r.x) {
            out += ',';
            append_number(out, v);
        }
        out += '\n';
    }
    return out;
}

std::vector<FeatureRow> parse_features_csv(std::string_view text) {
    CsvReader reader(text);
    std::vector<std::string> f;
    if (!reader.next(f)) throw DataError("feature file is empty");
    CsvHeader h(f);
    std::vector<std::string_view> required{"cusip", "iso_week", "mean_s_bp"};
    for (auto n : feature_names()) required.push_back(n);
    h.require(required);
    std::array<std::size_t, kFeatureCount> idx{};
    for (std::size_t j = 0; j < kFeatureCount; ++j) idx[j] = h.at(feature_names()[j]);
    std::vector<FeatureRow> out;
    std::size_t row = 0;
    while (reader.next(f)) {
        ++row;
        if (f.size() != h.size()) throw ParseError(row, "cusip", "wrong field count");
        FeatureRow r;
        r.cusip = f[h.at("cusip")];
        try {
            r.week = parse_iso_week(f[h.at("iso_week")]);
        } catch (const DataError& e) {
            throw ParseError(row, "iso_week", e.what());
        }
        auto y = try_parse_double(f[h.at("mean_s_bp")]);
        if (!y) throw ParseError(row, "mean_s_bp", "not a number");
        r.mean_s_bp = *y;
        for (std::size_t j = 0; j < kFeatureCount; ++j) {
            auto v = try_parse_double(f[idx[j]]);
            if (!v) throw ParseError(row, std::string(feature_names()[j]), "not a number");
            r.x[j] = *v;
        }
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace bondtca
