// Acceptance checks, one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria not listed with --known-unattainable.

#include "../support/oracles.hpp"

#include "bondtca/classify.hpp"
#include "bondtca/cross_validation.hpp"
#include "bondtca/csv.hpp"
#include "bondtca/impact.hpp"
#include "bondtca/microstructure.hpp"
#include "bondtca/pipeline.hpp"
#include "bondtca/regress.hpp"
#include "bondtca/rng.hpp"
#include "bondtca/stats.hpp"
#include "bondtca/synth.hpp"
#include "bondtca/trace.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace bondtca;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double a) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

Dataset random_instance(CounterRng& rng, int n, int w) {
    Dataset d;
    d.X.resize(n, w);
    d.y.resize(n);
    Eigen::VectorXd beta(w);
    for (int j = 0; j < w; ++j) beta(j) = rng.normal(0.0, 1.0);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < w; ++j) d.X(i, j) = rng.normal();
        d.y(i) = 1.0 + d.X.row(i).dot(beta) + rng.normal();
    }
    for (int j = 0; j < w; ++j) d.names.push_back("x" + std::to_string(j));
    return d;
}

// Stationarity conditions on the standardized scale, computed independently of the library.
double kkt_gap(const Dataset& d, const FitResult& f) {
    const double n = static_cast<double>(d.rows());
    const Eigen::VectorXd r = (d.y - d.X * f.coef).array() - f.intercept;
    double worst = std::abs(r.mean());
    for (Eigen::Index j = 0; j < d.X.cols(); ++j) {
        const Eigen::VectorXd xc = d.X.col(j).array() - d.X.col(j).mean();
        const double sd = std::sqrt(xc.squaredNorm() / (n - 1.0));
        const double b = f.coef(j) * sd;
        const double grad = -(xc / sd).dot(r) / n + f.lambda * (1.0 - f.alpha) * b;
        const double bound = f.lambda * f.alpha;
        if (b != 0.0) worst = std::max(worst, std::abs(grad + bound * (b > 0 ? 1.0 : -1.0)));
        else worst = std::max(worst, std::max(0.0, std::abs(grad) - bound));
    }
    return worst;
}

Outcome solver_equivalences() {
    const auto t0 = Clock::now();
    CounterRng rng(101);
    double worst = 0.0;
    for (int rep = 0; rep < 100; ++rep) {
        const auto d = random_instance(rng, 200, 10);
        const auto ols = fit_ols(d);
        for (const auto& f : {fit_lasso(d, 0.0), fit_elastic_net(d, 0.0, 0.37), fit_ridge(d, 0.0)}) {
            worst = std::max(worst, (f.coef - ols.coef).cwiseAbs().maxCoeff());
        }
    }
    const double t = seconds_since(t0);
    return {worst < 1e-6 && t < 5.0, fmt("max coefficient gap %.2e", worst) + fmt(", %.2f s", t)};
}

Outcome lasso_correctness() {
    Dataset d;
    d.X = Eigen::Vector3d(-1, 0, 1);
    d.y = Eigen::Vector3d(-1, 0, 1);
    d.names = {"x"};
    const double slope = fit_lasso(d, 1.0 / 3.0).coef(0);
    const bool closed_form = std::abs(slope - 0.5) < 1e-9;

    CounterRng rng(202);
    bool empty_ok = true;
    double worst_kkt = 0.0;
    std::size_t converged = 0;
    for (int rep = 0; rep < 50; ++rep) {
        const auto inst = random_instance(rng, 150, 12);
        const double lmax = lambda_max(inst);
        empty_ok = empty_ok && fit_lasso(inst, lmax).support.empty() && fit_lasso(inst, 3.0 * lmax).support.empty();
        for (double frac : {0.005, 0.05, 0.3, 0.8}) {
            for (double alpha : {1.0, 0.6}) {
                const auto f = fit_elastic_net(inst, frac * lmax, alpha);
                if (!f.converged) continue;
                ++converged;
                worst_kkt = std::max(worst_kkt, kkt_gap(inst, f));
            }
        }
    }
    const bool pass = closed_form && empty_ok && worst_kkt < 1e-5 && converged > 0;
    return {pass, fmt("slope %.12f", slope) + (empty_ok ? ", empty support at lambda_max" : ", NON-EMPTY support at lambda_max") +
                      fmt(", worst KKT gap %.2e", worst_kkt) + " over " + std::to_string(converged) + " converged fits"};
}

Outcome post_lasso_contract() {
    CounterRng rng(303);
    bool support_ok = true;
    double worst = 0.0;
    for (int rep = 0; rep < 50; ++rep) {
        const auto d = random_instance(rng, 200, 10);
        const auto first = fit_lasso(d, 0.3 * lambda_max(d));
        const auto post = post_refit(d, first);
        support_ok = support_ok && post.support == first.support;
        if (first.support.empty()) continue;
        const auto restricted = oracle::normal_equations(d.columns(first.support).X, d.y);
        worst = std::max(worst, std::abs(post.intercept - restricted(0)));
        for (std::size_t i = 0; i < first.support.size(); ++i) {
            worst = std::max(worst, std::abs(post.coef(static_cast<Eigen::Index>(first.support[i])) -
                                             restricted(static_cast<Eigen::Index>(i) + 1)));
        }
    }
    return {support_ok && worst < 1e-8,
            std::string(support_ok ? "supports equal" : "SUPPORT MISMATCH") + fmt(", max gap to restricted OLS %.2e", worst)};
}

Outcome ci_selection() {
    const auto t0 = Clock::now();
    const int n = 500, w = 26;
    const std::size_t n_true = 4;
    const std::vector<double> truth{3.0, -2.0, 1.5, 1.0};
    std::vector<GridPoint> grid;
    for (double l : log_grid(1e-3, 10.0, 20)) grid.push_back({l, 1.0});
    int ok = 0;
    bool degenerate_excluded = true;
    for (int run = 0; run < 50; ++run) {
        CounterRng rng(4000 + static_cast<std::uint64_t>(run));
        Dataset d;
        d.X.resize(n, w);
        d.y.resize(n);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < w; ++j) d.X(i, j) = rng.normal();
            double y = 20.0 + rng.normal(0.0, 3.0);
            for (std::size_t j = 0; j < n_true; ++j) y += truth[j] * d.X(i, static_cast<Eigen::Index>(j));
            d.y(i) = y;
        }
        for (int j = 0; j < w; ++j) d.names.push_back("f" + std::to_string(j));
        const auto report = k_fold_cv(d, Model::lasso, grid, 10, static_cast<std::uint64_t>(run));
        const auto chosen = select_by_ci(report);
        if (report.points.back().degenerate == false) degenerate_excluded = false;
        if (report.points[chosen].degenerate) degenerate_excluded = false;
        const auto fit = fit_lasso(d, report.points[chosen].mu.lambda);
        std::size_t true_in = 0, noise_in = 0;
        for (auto j : fit.support) (j < n_true ? true_in : noise_in)++;
        if (true_in == n_true && noise_in <= 2) ++ok;
    }
    const double t = seconds_since(t0);
    return {ok >= 45 && degenerate_excluded && t < 60.0,
            std::to_string(ok) + "/50 runs recover the 4 true features with <= 2 noise features" +
                (degenerate_excluded ? ", all-zero points excluded" : ", DEGENERATE POINT NOT EXCLUDED") + fmt(", %.1f s", t)};
}

SynthConfig recovery_config(std::uint64_t seed = 1) {
    SynthConfig cfg;
    cfg.seed = seed;
    cfg.n_events = 200000;
    cfg.kernel_buy = {KernelFamily::exponential, 25.0, 0.4, 0.5};
    cfg.sigma_eta = 5.0;
    cfg.alpha = 0.0;
    return cfg;
}

Outcome kernel_recovery() {
    const auto t0 = Clock::now();
    const auto cfg = recovery_config();
    const auto ts = generate_tim_series(cfg);
    ImpactConfig ic;
    ic.tim2 = false;
    const auto est = estimate_bond_impact(ts.series, ic);
    const auto G = tabulate_kernel(cfg.kernel_buy, 10);
    double worst_head = 0.0, worst_tail = 0.0;
    for (std::size_t j = 0; j <= 10; ++j) {
        const double rel = std::abs(est.tim1.g[0][j] - G[j]) / G[j];
        (j <= 5 ? worst_head : worst_tail) = std::max(j <= 5 ? worst_head : worst_tail, rel);
    }
    const double t = seconds_since(t0);
    std::string lags;
    for (std::size_t j = 0; j <= 10; ++j) lags += (j ? " " : "") + fmt("%.3f", est.tim1.g[0][j]);
    return {worst_head <= 0.05 && worst_tail <= 0.10 && t < 30.0,
            fmt("max rel. error lags 0-5 %.2f%%", 100 * worst_head) + fmt(", lags 6-10 %.2f%%", 100 * worst_tail) +
                " (G = " + lags + ")" + fmt(", %.1f s", t)};
}

Outcome signature_consistency() {
    const auto cfg = recovery_config();
    const auto ts = generate_tim_series(cfg);
    ImpactConfig ic;
    ic.tim2 = false;
    const auto est = estimate_bond_impact(ts.series, ic);
    const std::size_t fitted_violations = band_violations(est.signature_tim1, 3.0);

    ImpactKernel wrong = est.tim1;
    for (auto& g : wrong.g[0]) g = cfg.kernel_buy.g0;
    for (auto& d : wrong.dg[0]) d = 0.0;
    const auto u = signed_volume(ts.series, 0.0);
    const auto c = estimate_correlation(u, ic.n + ic.l_max);
    const auto plot = make_signature(est.signature_tim1.d_emp, est.signature_tim1.se, model_signature_tim1(wrong, c, ic.l_max));
    const std::size_t wrong_violations = band_violations(plot, 3.0);
    return {fitted_violations == 0 && wrong_violations >= 3,
            "estimated kernel outside the 3-SE band at " + std::to_string(fitted_violations) +
                " lags, constant kernel at " + std::to_string(wrong_violations) + " of 10"};
}

Outcome asymmetry_detection() {
    int ordered = 0, close = 0, better = 0;
    double worst_rel = 0.0, dev_tim1 = 0.0, dev_tim2 = 0.0;
    for (int run = 0; run < 20; ++run) {
        SynthConfig cfg;
        cfg.seed = 700 + static_cast<std::uint64_t>(run);
        cfg.n_events = 200000;
        cfg.asymmetric = true;
        cfg.kernel_buy = {KernelFamily::exponential, 30.0, 0.4, 0.5};
        cfg.kernel_sell = {KernelFamily::exponential, 20.0, 0.4, 0.5};
        cfg.alpha = 0.5;
        cfg.volume_mu = 0.0;
        cfg.volume_sigma = 1.0;
        cfg.sigma_eta = 5.0;
        const auto ts = generate_tim_series(cfg);
        ImpactConfig ic;
        ic.alpha = 0.5;
        const auto est = estimate_bond_impact(ts.series, ic);
        if (!est.tim2) continue;
        const auto& g = est.tim2->g;
        if (g[0][0] > g[1][0] && g[0][1] > g[1][1]) ++ordered;
        bool both = true;
        for (int a = 0; a < 2; ++a) {
            const auto truth = tabulate_kernel(a == 0 ? cfg.kernel_buy : cfg.kernel_sell, ic.n);
            double num = 0.0, den = 0.0;
            for (std::size_t j = 0; j <= ic.n; ++j) {
                num += (g[a][j] - truth[j]) * (g[a][j] - truth[j]);
                den += truth[j] * truth[j];
            }
            const double rel = std::sqrt(num / den);
            worst_rel = std::max(worst_rel, rel);
            both = both && rel <= 0.10;
        }
        if (both) ++close;
        if (!est.signature_tim2) continue;
        const double d1 = squared_deviation(est.signature_tim1), d2 = squared_deviation(*est.signature_tim2);
        dev_tim1 += d1;
        dev_tim2 += d2;
        if (d2 < d1) ++better;
    }
    return {ordered == 20 && close == 20 && dev_tim2 < dev_tim1,
            "buy > sell at lags 0 and 1 in " + std::to_string(ordered) + "/20, kernels within 10% in " +
                std::to_string(close) + "/20" + fmt(" (worst relative L2 error %.1f%%)", 100 * worst_rel) +
                fmt(", squared deviation over all runs TIM2 %.1f", dev_tim2) + fmt(" vs TIM1 %.1f", dev_tim1) +
                " (TIM2 closer in " + std::to_string(better) + "/20 single runs)"};
}

std::vector<CleanTrade> clean_fixture(const TraceFixture& fx, FilterReport* report) {
    LifecycleStats life;
    const auto settled = reconcile_lifecycle(parse_trace_csv(format_trace_csv(fx.reports)), &life);
    const auto filtered = filter_pipeline(settled, fx.calendar);
    if (report) *report = with_lifecycle_step(filtered.report, life);
    return to_clean_trades(filtered.kept);
}

Outcome classification_oracle() {
    CounterRng rng(808);
    const Leg legs_all[3] = {Leg::customer_buy, Leg::customer_sell, Leg::dealer_dealer};
    int mismatches = 0;
    for (int rep = 0; rep < 10000; ++rep) {
        const std::size_t n = 1 + rng.below(12);
        std::vector<double> vol(n);
        std::vector<Leg> legs(n);
        const std::uint64_t sizes = 1 + rng.below(3);
        std::vector<CleanTrade> tape;
        for (std::size_t i = 0; i < n; ++i) {
            vol[i] = 1000.0 * static_cast<double>(1 + rng.below(sizes));
            legs[i] = legs_all[rng.below(3)];
            tape.push_back(CleanTrade{"B", i, Timestamp{make_date(2015, 3, 3), static_cast<std::int32_t>(36000 + i)}, 100.0,
                                      vol[i], legs[i]});
        }
        std::vector<bool> got(n, false);
        for (const auto& run : find_size_runs(tape)) {
            for (auto [a, b] : mark_rpts(run, legs)) got[a] = got[b] = true;
        }
        if (got != oracle::rpt_flags(vol, legs)) ++mismatches;
    }

    const auto fx = generate_trace_fixture(TraceFixtureConfig{});
    const auto signed_trades = classify_trades(clean_fixture(fx, nullptr));
    std::map<std::pair<std::string, std::size_t>, const SignedTrade*> at;
    for (const auto& t : signed_trades) at[{t.cusip, t.k}] = &t;
    std::size_t found = 0, total = 0;
    for (const auto& p : fx.planted_rpts) {
        if (p.ambiguous) continue;
        ++total;
        auto a = at.find({p.cusip, p.k_first});
        auto b = at.find({p.cusip, p.k_first + 1});
        if (a != at.end() && b != at.end() && a->second->is_rpt && b->second->is_rpt) ++found;
    }
    const double rate = total ? static_cast<double>(found) / static_cast<double>(total) : 0.0;
    return {mismatches == 0 && rate >= 0.99,
            std::to_string(mismatches) + " mismatches on 10000 random tapes; planted pairs recovered " + std::to_string(found) +
                "/" + std::to_string(total) + fmt(" (%.2f%%)", 100 * rate)};
}

Outcome filter_accounting() {
    TraceFixtureConfig cfg;
    cfg.violation_rate = 0.004;
    const auto fx = generate_trace_fixture(cfg);
    FilterReport report;
    const auto clean = clean_fixture(fx, &report);
    bool counts = report.steps.size() == 7;
    const auto& planted = fx.manifest.at("filter");
    for (std::size_t i = 0; counts && i < planted.size(); ++i) {
        counts = report.steps[i + 1].step == planted[i].at("step").get<int>() &&
                 report.steps[i + 1].removed == planted[i].at("removed").get<std::size_t>();
    }
    counts = counts && report.steps[0].removed == fx.manifest.at("lifecycle").at("trades_removed").get<std::size_t>() &&
             clean.size() == fx.manifest.at("true_trades").get<std::size_t>();
    bool reconcile = true;
    std::size_t input = report.input_count(), removed = 0;
    for (const auto& s : report.steps) {
        reconcile = reconcile && s.input == input && s.remaining + s.removed == s.input &&
                    std::abs(s.removed_pct - 100.0 * static_cast<double>(s.removed) / static_cast<double>(s.input)) < 1e-12;
        input = s.remaining;
        removed += s.removed;
    }
    reconcile = reconcile && removed + report.final_count() == report.input_count();
    std::string per_step;
    for (const auto& s : report.steps) per_step += (per_step.empty() ? "" : " ") + std::to_string(s.removed);
    return {counts && reconcile, std::string(counts ? "counts equal the manifest" : "COUNT MISMATCH") + " (removed per step: " +
                                     per_step + ")" + (reconcile ? ", percentages reconcile" : ", PERCENTAGES DO NOT RECONCILE")};
}

Outcome spread_estimator() {
    const double mid = 98.765, h = 0.3125;
    std::vector<SignedTrade> tape;
    for (std::size_t i = 0; i < 500; ++i) {
        SignedTrade t;
        t.cusip = "B";
        t.k = i;
        t.t = Timestamp{make_date(2015, 3, 3), static_cast<std::int32_t>(30000 + 20 * i)};
        t.epsilon = i % 2 ? -1 : 1;
        t.leg = t.epsilon > 0 ? Leg::customer_buy : Leg::customer_sell;
        t.price = mid + t.epsilon * h;
        t.volume = 1e5;
        tape.push_back(t);
    }
    double worst_psi = 0.0, worst_s = 0.0;
    for (auto conv : {MidConvention::paper, MidConvention::corrected}) {
        for (const auto& o : estimate_spreads(tape, SpreadConfig{300.0, conv})) {
            worst_psi = std::max(worst_psi, std::abs(o.psi - 2.0 * h));
            worst_s = std::max(worst_s, std::abs(o.s_bp - o.psi / o.mid * 1e4));
        }
    }
    CounterRng rng(10);
    std::vector<CleanTrade> trades;
    const std::map<std::string, Grade> grade{{"HY", Grade::HY}, {"IG", Grade::IG}};
    for (std::size_t i = 0; i < 20000; ++i) {
        const double v = i % 100 == 0 ? (i % 200 == 0 ? 1e6 : 5e6) : 1000.0 * std::floor(rng.lognormal(5.5, 2.0) + 1.0);
        trades.push_back(CleanTrade{i % 2 ? "HY" : "IG", i, {}, 100.0, v, Leg::customer_buy});
    }
    const auto capped = cap_volumes(trades, grade);
    bool caps_ok = true;
    for (std::size_t i = 0; i < trades.size(); ++i) {
        const double cap = trades[i].cusip == "HY" ? 1e6 : 5e6;
        caps_ok = caps_ok && capped[i].volume <= trades[i].volume && capped[i].volume == std::min(trades[i].volume, cap);
    }
    return {worst_psi == 0.0 && worst_s < 1e-9 && caps_ok,
            fmt("max |psi - 2h| %.1e", worst_psi) + fmt(", max |s - psi/M 1e4| %.1e", worst_s) +
                (caps_ok ? ", caps respected" : ", CAP VIOLATION")};
}

Outcome stats_fixtures() {
    const double f = anova_f({{0, 1}, {2, 3}}).statistic;
    const double h = kruskal_h({{1, 2}, {3, 4}}).statistic;
    const double d = ks_two_sample({1, 2, 3}, {2, 3, 4}).statistic;
    CounterRng rng(11);
    std::vector<double> x(500), y(500);
    for (auto& v : x) v = rng.normal();
    for (auto& v : y) v = rng.normal(3.0, 1.0);
    const double p = welch_t(x, y).p_value;
    const bool pass = std::abs(f - 8.0) < 1e-6 && std::abs(h - 2.4) < 1e-6 && std::abs(d - std::sqrt(1.5) / 3.0) < 1e-6 && p < 1e-6;
    return {pass, fmt("F %.9f", f) + fmt(", H %.9f", h) + fmt(", D %.9f", d) + fmt(", Welch p %.1e", p)};
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = read_text_file(e.path().string());
    }
    return out;
}

Outcome end_to_end() {
    const auto base = fs::temp_directory_path() / "bondtca_acceptance";
    fs::remove_all(base);
    double worst = 0.0;
    std::size_t records = 0;
    std::vector<std::map<std::string, std::string>> snaps;
    for (const char* name : {"a", "b"}) {
        RunConfig c;
        c.dir = (base / name).string();
        c.seed = 42;
        c.synth.n_bonds = 300;
        c.synth.trades_per_bond = 3334;
        const auto t0 = Clock::now();
        const auto gen = run_generate(c);
        run_ingest(c);
        run_classify(c);
        run_spread(c);
        run_features(c);
        run_fit(c);
        run_impact(c);
        worst = std::max(worst, seconds_since(t0));
        records = gen.at("true_trades").get<std::size_t>();
        snaps.push_back(snapshot(c.dir));
    }
    const bool same = snaps[0] == snaps[1];
    fs::remove_all(base);
    return {same && worst < 300.0 && records >= 1'000'000,
            std::to_string(records) + " trades, " + std::to_string(snaps[0].size()) + " artifacts " +
                (same ? "byte-identical" : "DIFFER") + fmt(", slowest run %.1f s", worst) + " with " +
                std::to_string(max_threads()) + " thread(s)"};
}

}  // namespace

int main(int argc, char** argv) {
    std::set<std::size_t> known;
    for (int i = 1; i < argc; ++i) {
        if (std::string(argv[i]) == "--known-unattainable" && i + 1 < argc) {
            std::stringstream list(argv[++i]);
            for (std::string item; std::getline(list, item, ',');) known.insert(std::stoul(item));
        }
    }
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"solver equivalences", solver_equivalences},
        {"lasso correctness", lasso_correctness},
        {"post-lasso contract", post_lasso_contract},
        {"CI selection", ci_selection},
        {"kernel recovery (TIM1)", kernel_recovery},
        {"signature-plot consistency", signature_consistency},
        {"asymmetry detection (TIM2)", asymmetry_detection},
        {"classification oracle", classification_oracle},
        {"filter accounting", filter_accounting},
        {"spread estimator", spread_estimator},
        {"stats fixtures", stats_fixtures},
        {"end-to-end determinism and throughput", end_to_end},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const bool excused = known.count(i + 1) > 0;
        failed += !o.pass && !excused;
        std::printf("%s %2zu %s: %s%s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str(),
                    !o.pass && excused ? " [known unattainable]" : "");
        std::fflush(stdout);
    }
    return failed;
}
