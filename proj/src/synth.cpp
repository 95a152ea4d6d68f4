#include "bondtca/synth.hpp"

#include "bondtca/csv.hpp"
#include "bondtca/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace bondtca {

KernelFamily parse_kernel_family(std::string_view text) {
    if (text == "exponential" || text == "exp") return KernelFamily::exponential;
    if (text == "power_law" || text == "power") return KernelFamily::power_law;
    if (text == "constant") return KernelFamily::constant;
    throw ConfigError("unknown kernel family '" + std::string(text) + "'");
}

std::string_view to_string(KernelFamily f) {
    switch (f) {
        case KernelFamily::exponential: return "exponential";
        case KernelFamily::power_law: return "power_law";
        case KernelFamily::constant: return "constant";
    }
    return "";
}

double KernelSpec::value(std::size_t j) const {
    const double dj = static_cast<double>(j);
    switch (family) {
        case KernelFamily::exponential: return g0 * std::exp(-beta * dj);
        case KernelFamily::power_law: return g0 * std::pow(1.0 + dj, -gamma);
        case KernelFamily::constant: return g0;
    }
    return 0.0;
}

std::vector<double> tabulate_kernel(const KernelSpec& k, std::size_t horizon) {
    std::vector<double> g(horizon + 1);
    for (std::size_t j = 0; j <= horizon; ++j) g[j] = k.value(j);
    return g;
}

namespace {

nlohmann::json kernel_json(const KernelSpec& k) {
    return {{"family", to_string(k.family)}, {"g0", k.g0}, {"beta", k.beta}, {"gamma", k.gamma}};
}

nlohmann::json kernel_table(const std::vector<double>& g, std::size_t upto) {
    nlohmann::json a = nlohmann::json::array();
    for (std::size_t j = 0; j <= upto && j < g.size(); ++j) a.push_back(g[j]);
    return a;
}

// Log-mid path in bp for events with signed weights u and types (+1/-1):
// transient part over the last `horizon` events, the plateau G(horizon)
// beyond that, plus the accumulated noise.
std::vector<double> simulate_path(const std::vector<double>& u, const std::vector<int>& type,
                                  const std::vector<double>& eta, const std::vector<double>& g_buy,
                                  const std::vector<double>& g_sell, Execution exec) {
    const std::size_t n = u.size();
    const std::size_t h = g_buy.size() - 1;
    std::vector<double> pb(n), ps(n), noise(n);
    double sb = 0.0, ss = 0.0, se = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        (type[k] > 0 ? sb : ss) += u[k];
        se += eta[k];
        pb[k] = sb;
        ps[k] = ss;
        noise[k] = se;
    }
    std::vector<double> x(n);
    auto one = [&](std::size_t k) {
        double v = noise[k];
        const std::size_t reach = std::min(k + 1, h);
        for (std::size_t j = 0; j < reach; ++j) {
            const std::size_t i = k - j;
            v += (type[i] > 0 ? g_buy[j] : g_sell[j]) * u[i];
        }
        if (k >= h) v += g_buy[h] * pb[k - h] + g_sell[h] * ps[k - h];
        x[k] = v;
    };
    const std::ptrdiff_t nn = static_cast<std::ptrdiff_t>(n);
    if (exec == Execution::parallel) {
        BONDTCA_PARALLEL_FOR
        for (std::ptrdiff_t k = 0; k < nn; ++k) one(static_cast<std::size_t>(k));
    } else {
        for (std::size_t k = 0; k < n; ++k) one(k);
    }
    return x;
}

std::vector<int> draw_signs(std::size_t n, SignProcess process, double p_buy, double flip, CounterRng rng) {
    std::vector<int> eps(n);
    for (std::size_t k = 0; k < n; ++k) {
        if (process == SignProcess::iid || k == 0) eps[k] = rng.bernoulli(p_buy) ? 1 : -1;
        else eps[k] = rng.bernoulli(flip) ? -eps[k - 1] : eps[k - 1];
    }
    return eps;
}

}  // namespace

nlohmann::json SynthConfig::to_json() const {
    return {{"seed", seed},
            {"n_events", n_events},
            {"kernel_buy", kernel_json(kernel_buy)},
            {"kernel_sell", kernel_json(asymmetric ? kernel_sell : kernel_buy)},
            {"asymmetric", asymmetric},
            {"sign_process", sign_process == SignProcess::iid ? "iid" : "markov"},
            {"p_buy", p_buy},
            {"flip_prob", flip_prob},
            {"sigma_eta", sigma_eta},
            {"alpha", alpha},
            {"volume_mu", volume_mu},
            {"volume_sigma", volume_sigma},
            {"m0", m0},
            {"horizon", horizon}};
}

TimSeries generate_tim_series(const SynthConfig& cfg, Execution exec) {
    if (cfg.n_events < 1) throw ConfigError("synthetic series needs at least 1 event");
    if (cfg.horizon < 1) throw ConfigError("kernel horizon must be at least 1");
    if (!(cfg.p_buy > 0.0 && cfg.p_buy < 1.0)) throw ConfigError("p_buy must lie in (0, 1)");
    if (!(cfg.flip_prob >= 0.0 && cfg.flip_prob <= 1.0)) throw ConfigError("flip_prob must lie in [0, 1]");
    if (cfg.sigma_eta < 0.0 || cfg.volume_sigma < 0.0 || cfg.m0 <= 0.0) throw ConfigError("invalid synthetic scale parameter");

    const CounterRng root(cfg.seed, 0x7469);
    const std::size_t n = cfg.n_events;
    TimSeries out;
    out.series.cusip = "SYNTHETIC";
    out.series.eps = draw_signs(n, cfg.sign_process, cfg.p_buy, cfg.flip_prob, root.split(0));
    out.series.type = out.series.eps;
    out.series.volume.resize(n);
    std::vector<double> eta(n), u(n);
    {
        auto rv = root.split(1);
        for (auto& v : out.series.volume) v = rv.lognormal(cfg.volume_mu, cfg.volume_sigma);
        auto re = root.split(2);
        for (auto& e : eta) e = re.normal(0.0, cfg.sigma_eta);
    }
    for (std::size_t k = 0; k < n; ++k) u[k] = std::pow(out.series.volume[k], cfg.alpha) * out.series.eps[k];

    const auto g_buy = tabulate_kernel(cfg.kernel_buy, cfg.horizon);
    const auto g_sell = tabulate_kernel(cfg.asymmetric ? cfg.kernel_sell : cfg.kernel_buy, cfg.horizon);
    out.x = simulate_path(u, out.series.type, eta, g_buy, g_sell, exec);
    out.series.mid.resize(n);
    for (std::size_t k = 0; k < n; ++k) out.series.mid[k] = cfg.m0 * std::exp(out.x[k] * 1e-4);

    std::size_t buys = 0;
    for (int e : out.series.eps) buys += e > 0;
    const double eu2 = std::exp(2.0 * cfg.alpha * cfg.volume_mu + 2.0 * cfg.alpha * cfg.alpha * cfg.volume_sigma * cfg.volume_sigma);
    auto& m = out.manifest;
    m["generator"] = "tim-series";
    m["rng"] = CounterRng::algorithm;
    m["config"] = cfg.to_json();
    m["events"] = n;
    m["buys"] = buys;
    m["sells"] = n - buys;
    m["E_u2"] = eu2;
    m["G_buy"] = kernel_table(g_buy, 32);
    m["G_sell"] = kernel_table(g_sell, 32);
    // sign autocorrelation of the generating process (|u| = 1 at alpha = 0)
    nlohmann::json c = nlohmann::json::array();
    const double mean_sign = cfg.sign_process == SignProcess::iid ? 2.0 * cfg.p_buy - 1.0 : 0.0;
    for (std::size_t lag = 0; lag <= 32; ++lag) {
        if (lag == 0) c.push_back(1.0);
        else if (cfg.sign_process == SignProcess::iid) c.push_back(mean_sign * mean_sign);
        else c.push_back(std::pow(1.0 - 2.0 * cfg.flip_prob, static_cast<double>(lag)));
    }
    m["sign_correlation"] = c;
    return out;
}

nlohmann::json TraceFixtureConfig::to_json() const {
    nlohmann::json hol = nlohmann::json::array();
    for (Date d : holidays) hol.push_back(format_date(d));
    return {{"seed", seed},
            {"n_bonds", n_bonds},
            {"trades_per_bond", trades_per_bond},
            {"start", format_date(start)},
            {"n_weeks", n_weeks},
            {"holidays", hol},
            {"half_spread_bp", half_spread_bp},
            {"customer_share", customer_share},
            {"burst_share", burst_share},
            {"burst_gap_seconds", burst_gap_seconds},
            {"rpt_fraction", rpt_fraction},
            {"kernel", kernel_json(kernel)},
            {"sigma_eta", sigma_eta},
            {"alpha", alpha},
            {"volume_mu", volume_mu},
            {"volume_sigma", volume_sigma},
            {"cancel_rate", cancel_rate},
            {"reversal_share", reversal_share},
            {"correction_rate", correction_rate},
            {"violation_rate", violation_rate},
            {"dangling", dangling},
            {"ig_fraction", ig_fraction}};
}

namespace {

constexpr std::int32_t kOpen = 8 * 3600;
constexpr std::int32_t kClose = 17 * 3600 + 15 * 60;

std::set<Date> default_holidays() {
    std::set<Date> out;
    for (const char* d : {"2015-01-01", "2015-01-19", "2015-02-16", "2015-04-03", "2015-05-25", "2015-07-03",
                          "2015-09-07", "2015-10-12", "2015-11-11", "2015-11-26", "2015-12-25", "2016-01-01",
                          "2016-01-18", "2016-02-15", "2016-03-25", "2016-05-30", "2016-07-04", "2016-09-05",
                          "2016-10-10", "2016-11-11", "2016-11-24", "2016-12-26"}) {
        out.insert(parse_date(d));
    }
    return out;
}

struct GenRecord {
    GenRecord(RawTradeReport rec) : r(std::move(rec)) {}

    RawTradeReport r;
    long ref = -1;       // referenced trade record, local index
    long ref_life = -1;  // or referenced lifecycle record
    std::string ref_external;
};

struct BondCounts {
    std::size_t true_trades = 0, customer = 0, dealer = 0, rpt_pairs = 0;
    std::size_t bogus = 0, cancels = 0, reversals = 0, corrections = 0, dangling = 0;
    std::size_t ambiguous = 0, accidental_pairs = 0;
    std::array<std::size_t, 8> violations{};
};

struct BondOut {
    BondReference ref;
    double half_spread = 0.0;
    std::vector<GenRecord> trades;     // trade records, local chronological order
    std::vector<GenRecord> lifecycle;
    std::vector<PlantedRpt> planted;
    BondCounts counts;
    Date last_date{};
};

std::string make_cusip(std::size_t b) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "SY%07zu", b + 1);
    return buf;
}

double round_volume(double v) { return std::max(1000.0, std::round(v / 1000.0) * 1000.0); }

RawTradeReport base_trade(const std::string& cusip, Timestamp t, double price, double volume, Leg leg) {
    RawTradeReport r;
    r.cusip = cusip;
    r.exec = t;
    r.price = price;
    r.volume = volume;
    r.kind = ReportKind::trade;
    r.capacity = Capacity::principal;
    if (leg == Leg::dealer_dealer) {
        r.contra_party = ContraParty::dealer;
    } else {
        r.contra_party = ContraParty::customer;
        r.customer_side = leg == Leg::customer_buy ? CustomerSide::customer_buy : CustomerSide::customer_sell;
    }
    return r;
}

Timestamp random_time(const std::vector<Date>& days, CounterRng& rng) {
    return {days[static_cast<std::size_t>(rng.below(days.size()))],
            kOpen + static_cast<std::int32_t>(rng.below(static_cast<std::uint64_t>(kClose - kOpen + 1)))};
}

BondOut generate_bond(const TraceFixtureConfig& cfg, std::size_t b, const std::vector<Date>& days,
                      const BusinessCalendar& cal, const std::vector<double>& g) {
    const CounterRng root = CounterRng(cfg.seed, 0x7472).split(b);
    BondOut out;
    auto& cnt = out.counts;
    const std::string cusip = make_cusip(b);

    // static data
    {
        auto r = root.split(0);
        out.ref.cusip = cusip;
        out.ref.coupon_rate = std::round(r.uniform() * 48.0 + 16.0) * 0.125;
        out.ref.issue_date = cfg.start - std::chrono::days(static_cast<int>(180 + r.below(3400)));
        out.ref.maturity_date = cfg.start + std::chrono::days(static_cast<int>(400 + r.below(6900)));
        out.ref.amount_outstanding = std::round(3e8 + r.uniform() * 1.7e9);
        out.ref.grade = r.bernoulli(cfg.ig_fraction) ? Grade::IG : Grade::HY;
        out.ref.sector = 1 + static_cast<int>(r.below(9));
        out.ref.frequency = 2;
        out.half_spread = cfg.half_spread_bp * (out.ref.grade == Grade::HY ? 1.6 : 1.0) * r.lognormal(0.0, 0.25);
    }
    const double m0 = 85.0 + 30.0 * root.split(1).uniform();
    const double h = out.half_spread * 1e-4;

    // slot kinds: 0 customer, 1 dealer, 2 RPT pair
    std::vector<int> kinds;
    {
        auto r = root.split(2);
        const double q = cfg.rpt_fraction / (2.0 - cfg.rpt_fraction);
        std::size_t placed = 0;
        while (placed < cfg.trades_per_bond) {
            int kind;
            if (placed + 1 < cfg.trades_per_bond && r.bernoulli(q)) kind = 2;
            else kind = r.bernoulli(cfg.customer_share) ? 0 : 1;
            kinds.push_back(kind);
            placed += kind == 2 ? 2 : 1;
        }
    }
    const std::size_t n_customer = static_cast<std::size_t>(std::count(kinds.begin(), kinds.end(), 0));

    // customer events drive the mid
    auto rv = root.split(3);
    std::vector<int> eps = draw_signs(n_customer, SignProcess::iid, 0.5, 0.5, root.split(4));
    std::vector<double> cvol(n_customer), u(n_customer), eta(n_customer);
    {
        auto re = root.split(5);
        for (std::size_t k = 0; k < n_customer; ++k) {
            cvol[k] = round_volume(rv.lognormal(cfg.volume_mu, cfg.volume_sigma));
            u[k] = std::pow(cvol[k], cfg.alpha) * eps[k];
            eta[k] = re.normal(0.0, cfg.sigma_eta);
        }
    }
    const auto x = simulate_path(u, eps, eta, g, g, Execution::serial);

    // timestamps within trading hours on business days; gaps are a mix of
    // short (clustered) and long exponentials with the overall mean that
    // spreads the bond's trades over the window
    auto rt = root.split(6);
    const double mean_gap = static_cast<double>(days.size()) * (kClose - kOpen) / static_cast<double>(cfg.trades_per_bond);
    const double short_gap = std::min(cfg.burst_gap_seconds, mean_gap);
    const double long_gap = (mean_gap - cfg.burst_share * short_gap) / (1.0 - cfg.burst_share);
    auto gap = [&]() { return rt.exponential(rt.bernoulli(cfg.burst_share) ? short_gap : long_gap); };
    std::size_t di = 0;
    Date day = days.front();
    double clock = kOpen;
    auto next_time = [&]() {
        clock += gap();
        while (clock > kClose) {
            ++di;
            day = di < days.size() ? days[di] : cal.next_business_day(day + std::chrono::days(1));
            clock = kOpen + rt.uniform() * std::min(long_gap, double(kClose - kOpen));
        }
        return Timestamp{day, static_cast<std::int32_t>(clock)};
    };

    auto rr = root.split(7);
    std::size_t ci = 0;
    double mid = m0;
    for (int kind : kinds) {
        const Timestamp t = next_time();
        if (kind == 0) {
            mid = m0 * std::exp(x[ci] * 1e-4);
            const Leg leg = eps[ci] > 0 ? Leg::customer_buy : Leg::customer_sell;
            out.trades.push_back({base_trade(cusip, t, mid * (1.0 + eps[ci] * h), cvol[ci], leg)});
            ++ci;
            ++cnt.customer;
        } else if (kind == 1) {
            out.trades.push_back({base_trade(cusip, t, mid, round_volume(rv.lognormal(cfg.volume_mu, cfg.volume_sigma)),
                                             Leg::dealer_dealer)});
            ++cnt.dealer;
        } else {
            const double v = round_volume(rv.lognormal(cfg.volume_mu, cfg.volume_sigma));
            Leg a, c;
            if (rr.bernoulli(0.5)) {
                a = rr.bernoulli(0.5) ? Leg::customer_buy : Leg::customer_sell;
                c = Leg::dealer_dealer;
            } else {
                a = Leg::customer_buy;
                c = Leg::customer_sell;
            }
            if (rr.bernoulli(0.5)) std::swap(a, c);
            out.planted.push_back({cusip, out.trades.size(), false});
            out.trades.push_back({base_trade(cusip, t, mid, v, a)});
            out.trades.push_back({base_trade(cusip, t, mid, v, c)});
            ++cnt.rpt_pairs;
        }
    }
    cnt.true_trades = out.trades.size();

    // ambiguity and accidental equal-volume neighbours
    {
        std::vector<bool> in_pair(out.trades.size(), false);
        for (auto& p : out.planted) {
            in_pair[p.k_first] = in_pair[p.k_first + 1] = true;
            const double v = out.trades[p.k_first].r.volume;
            const bool left = p.k_first > 0 && out.trades[p.k_first - 1].r.volume == v;
            const bool right = p.k_first + 2 < out.trades.size() && out.trades[p.k_first + 2].r.volume == v;
            p.ambiguous = left || right;
            cnt.ambiguous += p.ambiguous;
        }
        for (std::size_t i = 0; i + 1 < out.trades.size(); ++i) {
            if (out.trades[i].r.volume == out.trades[i + 1].r.volume && !(in_pair[i] && in_pair[i + 1])) {
                ++cnt.accidental_pairs;
            }
        }
    }

    // corrections of true trades: a wrong print followed by one or two corrections
    auto rc = root.split(8);
    const auto n_true = static_cast<double>(cnt.true_trades);
    const auto n_corr = static_cast<std::size_t>(std::llround(cfg.correction_rate * n_true));
    std::vector<std::size_t> idx(out.trades.size());
    std::iota(idx.begin(), idx.end(), 0);
    rc.shuffle(idx);
    for (std::size_t i = 0; i < n_corr && i < idx.size(); ++i) {
        auto& orig = out.trades[idx[i]];
        GenRecord fix = orig;
        fix.r.kind = ReportKind::correction;
        fix.ref = static_cast<long>(idx[i]);
        orig.r.price *= 1.0 + (rc.bernoulli(0.5) ? 0.01 : -0.01);
        if (rc.bernoulli(0.2)) {
            GenRecord wrong = fix;
            wrong.r.price *= 1.02;
            out.lifecycle.push_back(wrong);
            ++cnt.corrections;
            fix.ref = -1;
            fix.ref_life = static_cast<long>(out.lifecycle.size() - 1);
        }
        out.lifecycle.push_back(fix);
        ++cnt.corrections;
    }

    // bogus trades later cancelled or reversed (some corrected first)
    auto rb = root.split(9);
    const auto n_bogus = static_cast<std::size_t>(std::llround(cfg.cancel_rate * n_true));
    const double ref_mid = m0;
    std::vector<std::pair<std::size_t, bool>> bogus;  // trade index, use reversal
    for (std::size_t i = 0; i < n_bogus; ++i) {
        const Leg leg = rb.bernoulli(0.5) ? Leg::customer_buy : Leg::customer_sell;
        out.trades.push_back({base_trade(cusip, random_time(days, rb), ref_mid * (1.0 + 0.02 * (rb.uniform() - 0.5)),
                                         round_volume(rb.lognormal(cfg.volume_mu, cfg.volume_sigma)), leg)});
        bogus.emplace_back(out.trades.size() - 1, rb.bernoulli(cfg.reversal_share));
        ++cnt.bogus;
    }
    for (auto [ti, reversal] : bogus) {
        GenRecord kill = out.trades[ti];
        kill.ref = static_cast<long>(ti);
        if (rb.bernoulli(0.1)) {
            GenRecord fix = out.trades[ti];
            fix.r.kind = ReportKind::correction;
            fix.r.price *= 1.001;
            fix.ref = static_cast<long>(ti);
            out.lifecycle.push_back(fix);
            ++cnt.corrections;
            kill.ref = -1;
            kill.ref_life = static_cast<long>(out.lifecycle.size() - 1);
        }
        kill.r.kind = reversal ? ReportKind::reversal : ReportKind::cancel;
        out.lifecycle.push_back(kill);
        ++(reversal ? cnt.reversals : cnt.cancels);
    }

    // one violation kind per cleaning step
    auto rw = root.split(10);
    const auto n_viol = static_cast<std::size_t>(std::llround(cfg.violation_rate * n_true));
    for (int step = 2; step <= 7; ++step) {
        for (std::size_t i = 0; i < n_viol; ++i) {
            const Leg leg = rw.bernoulli(0.5) ? Leg::customer_buy : Leg::customer_sell;
            auto r = base_trade(cusip, random_time(days, rw), m0 * (1.0 + 0.01 * (rw.uniform() - 0.5)),
                                round_volume(rw.lognormal(cfg.volume_mu, cfg.volume_sigma)), leg);
            switch (step) {
                case 2:
                    r.capacity = Capacity::agent;
                    r.contra_party = ContraParty::dealer;
                    r.customer_side.reset();
                    break;
                case 3: {
                    Date d = r.exec.date;
                    while (cal.is_business_day(d)) d += std::chrono::days(1);
                    r.exec.date = d;
                    break;
                }
                case 4:
                    r.exec.seconds = rw.bernoulli(0.5) ? 7 * 3600 + static_cast<std::int32_t>(rw.below(3600))
                                                       : kClose + 1 + static_cast<std::int32_t>(rw.below(6000));
                    break;
                case 5: {
                    static const char* codes[] = {"Z", "T", "W", "S"};
                    r.sale_conditions = {codes[rw.below(4)]};
                    break;
                }
                case 6: r.price = 1.0 + 8.9 * rw.uniform(); break;
                case 7: r.sub_product = SubProduct::other; break;
            }
            out.trades.push_back({r});
            ++cnt.violations[static_cast<std::size_t>(step)];
        }
    }

    for (std::size_t i = 0; i < cfg.dangling; ++i) {
        if (b != 0) break;  // all dangling records live on the first bond
        GenRecord d = out.trades.front();
        d.r.kind = i % 2 == 0 ? ReportKind::cancel : ReportKind::reversal;
        d.ref = d.ref_life = -1;
        char buf[24];
        std::snprintf(buf, sizeof buf, "MISSING%06zu", i + 1);
        d.ref_external = buf;
        out.lifecycle.push_back(d);
        ++cnt.dangling;
    }

    for (const auto& t : out.trades) out.last_date = std::max(out.last_date, t.r.exec.date);
    return out;
}

}  // namespace

TraceFixture generate_trace_fixture(const TraceFixtureConfig& cfg, Execution exec) {
    if (cfg.n_bonds == 0 || cfg.trades_per_bond < 10) throw ConfigError("fixture needs bonds with at least 10 trades");
    if (cfg.n_weeks == 0) throw ConfigError("fixture needs at least one week");
    if (!(cfg.rpt_fraction >= 0.0 && cfg.rpt_fraction < 1.0)) throw ConfigError("rpt_fraction must lie in [0, 1)");
    if (!(cfg.customer_share > 0.0 && cfg.customer_share <= 1.0)) throw ConfigError("customer_share must lie in (0, 1]");
    if (cfg.half_spread_bp < 0.0) throw ConfigError("half_spread_bp must be non-negative");
    if (!(cfg.burst_share >= 0.0 && cfg.burst_share < 1.0) || cfg.burst_gap_seconds <= 0.0) {
        throw ConfigError("burst_share must lie in [0, 1) and burst_gap_seconds must be positive");
    }

    TraceFixture fx;
    const Date first = cfg.start;
    const Date last = cfg.start + std::chrono::days(7 * static_cast<int>(cfg.n_weeks) - 1);
    std::set<Date> hol;
    if (cfg.holidays.empty()) {
        for (Date d : default_holidays()) hol.insert(d);
    } else {
        hol.insert(cfg.holidays.begin(), cfg.holidays.end());
    }
    fx.calendar = BusinessCalendar(std::move(hol));
    std::vector<Date> days;
    for (Date d = first; d <= last; d += std::chrono::days(1)) {
        if (fx.calendar.is_business_day(d)) days.push_back(d);
    }
    if (days.empty()) throw ConfigError("fixture window has no business days");

    const auto g = tabulate_kernel(cfg.kernel, 256);
    std::vector<BondOut> bonds(cfg.n_bonds);
    const std::ptrdiff_t nb = static_cast<std::ptrdiff_t>(cfg.n_bonds);
    if (exec == Execution::parallel) {
        BONDTCA_PARALLEL_FOR_DYNAMIC
        for (std::ptrdiff_t b = 0; b < nb; ++b) {
            bonds[static_cast<std::size_t>(b)] = generate_bond(cfg, static_cast<std::size_t>(b), days, fx.calendar, g);
        }
    } else {
        for (std::size_t b = 0; b < cfg.n_bonds; ++b) bonds[b] = generate_bond(cfg, b, days, fx.calendar, g);
    }

    // trade records merged by time, then lifecycle records in generation order
    struct Key {
        Timestamp t;
        std::size_t bond, local;
    };
    std::vector<Key> keys;
    for (std::size_t b = 0; b < bonds.size(); ++b) {
        for (std::size_t i = 0; i < bonds[b].trades.size(); ++i) keys.push_back({bonds[b].trades[i].r.exec, b, i});
    }
    std::stable_sort(keys.begin(), keys.end(), [](const Key& a, const Key& c) {
        if (a.t != c.t) return a.t < c.t;
        if (a.bond != c.bond) return a.bond < c.bond;
        return a.local < c.local;
    });
    std::vector<std::vector<std::string>> ids(bonds.size());
    for (std::size_t b = 0; b < bonds.size(); ++b) ids[b].resize(bonds[b].trades.size() + bonds[b].lifecycle.size());
    std::size_t next_id = 1;
    auto make_id = [&]() {
        char buf[16];
        std::snprintf(buf, sizeof buf, "R%09zu", next_id++);
        return std::string(buf);
    };
    fx.reports.reserve(keys.size());
    for (const auto& k : keys) {
        ids[k.bond][k.local] = make_id();
        auto r = bonds[k.bond].trades[k.local].r;
        r.record_id = ids[k.bond][k.local];
        fx.reports.push_back(std::move(r));
    }
    for (std::size_t b = 0; b < bonds.size(); ++b) {
        const std::size_t base = bonds[b].trades.size();
        for (std::size_t i = 0; i < bonds[b].lifecycle.size(); ++i) {
            const auto& rec = bonds[b].lifecycle[i];
            ids[b][base + i] = make_id();
            auto r = rec.r;
            r.record_id = ids[b][base + i];
            if (rec.ref >= 0) r.references_record = ids[b][static_cast<std::size_t>(rec.ref)];
            else if (rec.ref_life >= 0) r.references_record = ids[b][base + static_cast<std::size_t>(rec.ref_life)];
            else r.references_record = rec.ref_external;
            fx.reports.push_back(std::move(r));
        }
    }
    for (std::size_t i = 0; i < fx.reports.size(); ++i) fx.reports[i].row = i + 1;

    // reference data and weekly market context
    Date max_date = last;
    for (const auto& b : bonds) {
        fx.bonds.push_back(b.ref);
        max_date = std::max(max_date, b.last_date);
        fx.planted_rpts.insert(fx.planted_rpts.end(), b.planted.begin(), b.planted.end());
    }
    {
        auto rc = CounterRng(cfg.seed, 0x6374);
        std::size_t w = 0;
        for (Date d = iso_week_monday(iso_week(first)); d <= max_date; d += std::chrono::days(7), ++w) {
            fx.context[iso_week(d)] = 0.15 + 0.05 * std::sin(static_cast<double>(w) / 4.0) + 0.01 * rc.normal();
        }
    }

    BondCounts tot;
    nlohmann::json spreads = nlohmann::json::object();
    for (const auto& b : bonds) {
        const auto& c = b.counts;
        tot.true_trades += c.true_trades;
        tot.customer += c.customer;
        tot.dealer += c.dealer;
        tot.rpt_pairs += c.rpt_pairs;
        tot.bogus += c.bogus;
        tot.cancels += c.cancels;
        tot.reversals += c.reversals;
        tot.corrections += c.corrections;
        tot.dangling += c.dangling;
        tot.ambiguous += c.ambiguous;
        tot.accidental_pairs += c.accidental_pairs;
        for (std::size_t s = 0; s < 8; ++s) tot.violations[s] += c.violations[s];
        spreads[b.ref.cusip] = b.half_spread;
    }
    std::size_t trade_records = 0;
    for (const auto& r : fx.reports) trade_records += r.kind == ReportKind::trade;

    auto& m = fx.manifest;
    m["generator"] = "trace-fixture";
    m["rng"] = CounterRng::algorithm;
    m["config"] = cfg.to_json();
    m["records"] = fx.reports.size();
    m["true_trades"] = tot.true_trades;
    m["customer_trades"] = tot.customer;
    m["dealer_trades"] = tot.dealer;
    m["rpt_pairs"] = tot.rpt_pairs;
    m["rpt_legs"] = 2 * tot.rpt_pairs;
    m["rpt_fraction"] = tot.true_trades ? 2.0 * static_cast<double>(tot.rpt_pairs) / static_cast<double>(tot.true_trades) : 0.0;
    m["ambiguous_rpt_pairs"] = tot.ambiguous;
    m["accidental_equal_volume_pairs"] = tot.accidental_pairs;
    m["lifecycle"] = {{"trade_reports", trade_records},
                      {"cancels", tot.cancels},
                      {"reversals", tot.reversals},
                      {"corrections", tot.corrections},
                      {"dangling", tot.dangling},
                      {"trades_removed", tot.bogus}};
    nlohmann::json steps = nlohmann::json::array();
    for (int s = 2; s <= 7; ++s) steps.push_back({{"step", s}, {"removed", tot.violations[static_cast<std::size_t>(s)]}});
    m["filter"] = steps;
    m["half_spread_bp"] = spreads;
    m["kernel_G"] = kernel_table(g, 32);
    m["first_date"] = format_date(first);
    m["last_date"] = format_date(max_date);
    return fx;
}

std::string format_planted_rpts_csv(const std::vector<PlantedRpt>& rows) {
    std::string out = "cusip,k_first,k_second,ambiguous\n";
    for (const auto& p : rows) {
        out += csv_field(p.cusip) + ',' + std::to_string(p.k_first) + ',' + std::to_string(p.k_first + 1) + ',' +
               (p.ambiguous ? "1" : "0") + '\n';
    }
    return out;
}

}  // namespace bondtca
