#include "doctest.h"

#include "../support/oracles.hpp"

#include "bondtca/error.hpp"
#include "bondtca/impact.hpp"
#include "bondtca/rng.hpp"
#include "bondtca/synth.hpp"

#include <cmath>

using namespace bondtca;

namespace {

// S(l) implied by a kernel and a symmetric correlation, for l = 0..max_lag.
std::vector<double> implied_response(const std::vector<double>& G, const std::vector<double>& C, std::size_t max_lag) {
    auto c = [&](long n) { return C[static_cast<std::size_t>(std::abs(n))]; };
    std::vector<double> s(max_lag + 1);
    for (std::size_t l = 0; l <= max_lag; ++l) {
        double v = G[0] * c(static_cast<long>(l));
        for (std::size_t j = 0; j + 1 < G.size(); ++j) v += (G[j + 1] - G[j]) * c(static_cast<long>(l) - static_cast<long>(j) - 1);
        s[l] = v;
    }
    return s;
}

std::vector<double> exp_kernel(double g0, double beta, std::size_t n) {
    std::vector<double> g(n + 1);
    for (std::size_t j = 0; j <= n; ++j) g[j] = g0 * std::exp(-beta * static_cast<double>(j));
    return g;
}

SignSeries to_series(const std::vector<int>& eps, const std::vector<double>& x) {
    SignSeries s;
    s.cusip = "T";
    s.eps = eps;
    s.type = eps;
    s.volume.assign(eps.size(), 1.0);
    for (double v : x) s.mid.push_back(100.0 * std::exp(v / 1e4));
    return s;
}

}  // namespace

TEST_CASE("sample moments match direct loops") {
    CounterRng rng(21);
    std::vector<double> u(3000), r(2999);
    for (auto& v : u) v = rng.bernoulli(0.5) ? rng.lognormal(0, 1) : -rng.lognormal(0, 1);
    for (auto& v : r) v = rng.normal();
    const auto c = estimate_correlation(u, 15, Execution::serial);
    const auto cp = estimate_correlation(u, 15, Execution::parallel);
    const auto co = oracle::correlation(u, 15);
    const auto s = estimate_response(u, r, 15, Execution::serial);
    const auto sp = estimate_response(u, r, 15, Execution::parallel);
    const auto so = oracle::response(u, r, 15);
    for (std::size_t i = 0; i <= 15; ++i) {
        CHECK(c[i] == doctest::Approx(co[i]).epsilon(1e-12));
        CHECK(s[i] == doctest::Approx(so[i]).epsilon(1e-12));
        CHECK(c[i] == cp[i]);
        CHECK(s[i] == sp[i]);
    }
    CHECK_THROWS_AS(estimate_correlation(std::vector<double>(10, 1.0), 5), DataError);
}

TEST_CASE("exact moments give back the kernel") {
    const std::size_t n = 10;
    const auto G = exp_kernel(25.0, 0.4, n);
    for (double rho : {0.0, 0.3, -0.4}) {
        std::vector<double> C(40);
        for (std::size_t i = 0; i < C.size(); ++i) C[i] = std::pow(rho, static_cast<double>(i));
        const auto S = implied_response(G, C, 20);
        for (std::size_t l : {std::size_t{10}, std::size_t{15}}) {
            const auto k = solve_tim1(C, S, G[0], n, l);
            for (std::size_t j = 0; j <= n; ++j) CHECK(k.g[0][j] == doctest::Approx(G[j]).epsilon(1e-9));
            const auto kj = solve_tim1_joint(C, S, n, l);
            for (std::size_t j = 0; j <= n; ++j) CHECK(kj.g[0][j] == doctest::Approx(G[j]).epsilon(1e-9));
        }
    }
    CHECK_THROWS_AS(solve_tim1(std::vector<double>(40, 0.0), std::vector<double>(40, 0.0), 1.0, n, n), NumericalError);
    CHECK_THROWS_AS(solve_tim1(std::vector<double>(40, 1.0), std::vector<double>(40, 0.0), 1.0, 10, 5), ConfigError);
}

TEST_CASE("model signature matches the quadratic form and the textbook expansion") {
    const std::size_t n = 10, l_max = 10;
    ImpactKernel k;
    k.n = n;
    k.g = {exp_kernel(25.0, 0.4, n)};
    for (double rho : {0.0, 0.5, -0.3}) {
        std::vector<double> C(n + l_max + 5);
        for (std::size_t i = 0; i < C.size(); ++i) C[i] = std::pow(rho, static_cast<double>(i));
        const auto got = model_signature_tim1(k, C, l_max);
        const auto expect = oracle::diffusion(k.g[0], std::vector<double>(C.begin(), C.begin() + static_cast<long>(n + l_max)), l_max);
        for (std::size_t l = 0; l < l_max; ++l) CHECK(got[l] == doctest::Approx(expect[l]).epsilon(1e-12));
        if (rho == 0.0) {
            // The expansion indexes the kernel from the pre-trade mid: H(j) = G(j - 1).
            std::vector<double> H(n + 2, 0.0);
            for (std::size_t j = 1; j <= n + 1; ++j) H[j] = k.g[0][j - 1];
            const auto printed = oracle::printed_tim1(H, C, l_max, 200);
            for (std::size_t l = 0; l < l_max; ++l) CHECK(got[l] == doctest::Approx(printed[l]).epsilon(1e-12));
        }
    }
}

TEST_CASE("textbook expansion with correlated signs") {
    const std::size_t n = 6, l_max = 8;
    ImpactKernel k;
    k.n = n;
    k.g = {exp_kernel(10.0, 0.7, n)};
    std::vector<double> C(n + l_max);
    for (std::size_t i = 0; i < C.size(); ++i) C[i] = std::pow(0.4, static_cast<double>(i));
    std::vector<double> H(n + 2, 0.0);
    for (std::size_t j = 1; j <= n + 1; ++j) H[j] = k.g[0][j - 1];
    // beyond the covered lags the expansion needs zero correlation, like the quadratic form
    const auto printed = oracle::printed_tim1(H, C, l_max, 60);
    const auto got = model_signature_tim1(k, C, l_max);
    for (std::size_t l = 0; l < l_max; ++l) CHECK(got[l] == doctest::Approx(printed[l]).epsilon(1e-12));
}

TEST_CASE("empirical signature and its standard errors") {
    CounterRng rng(5);
    std::vector<double> x(5000);
    double v = 0.0;
    for (auto& e : x) e = (v += rng.normal(0.0, 2.0));
    std::vector<double> d, se;
    empirical_signature(x, 6, d, se);
    for (std::size_t l = 1; l <= 6; ++l) {
        double s = 0.0;
        for (std::size_t t = 0; t + l < x.size(); ++t) s += (x[t + l] - x[t]) * (x[t + l] - x[t]);
        CHECK(d[l - 1] == doctest::Approx(s / static_cast<double>(x.size() - l) / static_cast<double>(l)));
        CHECK(d[l - 1] == doctest::Approx(4.0).epsilon(0.1));
        CHECK(se[l - 1] > 0.0);
        CHECK(se[l - 1] < 0.5);
    }
    const auto plot = make_signature(d, se, std::vector<double>(6, 1.0));
    CHECK(plot.d_const == doctest::Approx(fit_d_const(d, std::vector<double>(6, 0.0)) - 1.0));
    CHECK(band_violations(plot, 3.0) <= 1);
    CHECK(squared_deviation(plot) >= 0.0);
}

TEST_CASE("single event and pure noise") {
    SynthConfig cfg;
    cfg.n_events = 1;
    cfg.sigma_eta = 0.0;
    cfg.kernel_buy = {KernelFamily::exponential, 25.0, 0.4, 0.5};
    const auto one = generate_tim_series(cfg, Execution::serial);
    REQUIRE(one.x.size() == 1);
    CHECK(one.x[0] == doctest::Approx(25.0 * one.series.eps[0]));

    cfg.n_events = 20000;
    cfg.sigma_eta = 3.0;
    cfg.kernel_buy.g0 = 0.0;
    const auto walk = generate_tim_series(cfg);
    std::vector<double> d, se;
    empirical_signature(walk.x, 5, d, se);
    for (double v : d) CHECK(v == doctest::Approx(9.0).epsilon(0.05));
}

TEST_CASE("zero-noise impact follows the kernel exactly") {
    SynthConfig cfg;
    cfg.n_events = 300;
    cfg.sigma_eta = 0.0;
    cfg.kernel_buy = {KernelFamily::power_law, 12.0, 0.4, 0.6};
    const auto ts = generate_tim_series(cfg, Execution::serial);
    const auto G = tabulate_kernel(cfg.kernel_buy, cfg.horizon);
    for (std::size_t k = 0; k < ts.x.size(); k += 37) {
        double x = 0.0;
        for (std::size_t j = 0; j <= k; ++j) x += G[std::min(k - j, cfg.horizon)] * ts.series.eps[j];
        CHECK(ts.x[k] == doctest::Approx(x).epsilon(1e-10));
    }
}

TEST_CASE("sign statistics of the generator") {
    SynthConfig cfg;
    cfg.n_events = 100000;
    cfg.kernel_buy.g0 = 1.0;
    const auto iid = generate_tim_series(cfg);
    const auto c = estimate_correlation(signed_volume(iid.series, 0.0), 5);
    CHECK(c[0] == 1.0);
    for (std::size_t i = 1; i <= 5; ++i) CHECK(std::abs(c[i]) < 0.015);

    cfg.sign_process = SignProcess::markov;
    cfg.flip_prob = 0.3;
    const auto mk = generate_tim_series(cfg);
    const auto cm = estimate_correlation(signed_volume(mk.series, 0.0), 5);
    for (std::size_t i = 1; i <= 5; ++i) CHECK(cm[i] == doctest::Approx(std::pow(0.4, static_cast<double>(i))).epsilon(0.1));
    CHECK(mk.manifest.at("sign_correlation")[2].get<double>() == doctest::Approx(0.16));
}

TEST_CASE("generator is reproducible across execution modes") {
    SynthConfig cfg;
    cfg.n_events = 5000;
    cfg.alpha = 0.5;
    cfg.asymmetric = true;
    cfg.kernel_sell = {KernelFamily::exponential, 15.0, 0.2, 0.5};
    const auto a = generate_tim_series(cfg, Execution::serial);
    const auto b = generate_tim_series(cfg, Execution::parallel);
    CHECK(a.x == b.x);
    CHECK(a.series.eps == b.series.eps);
    CHECK(a.series.volume == b.series.volume);
    cfg.seed = 2;
    CHECK(generate_tim_series(cfg).x != a.x);
}

TEST_CASE("TIM1 on simulated iid flow and the alpha = 0 degeneracy of TIM2") {
    SynthConfig cfg;
    cfg.n_events = 100000;
    cfg.kernel_buy = {KernelFamily::exponential, 25.0, 0.4, 0.5};
    const auto ts = generate_tim_series(cfg);
    ImpactConfig ic;
    const auto est = estimate_bond_impact(ts.series, ic);
    const auto G = tabulate_kernel(cfg.kernel_buy, 10);
    for (std::size_t j = 0; j <= 3; ++j) CHECK(est.tim1.g[0][j] == doctest::Approx(G[j]).epsilon(0.1));
    CHECK_FALSE(est.tim2.has_value());
    CHECK(est.tim2_error.find("not identified") != std::string::npos);
    CHECK(est.signature_tim1.d_emp.size() == 10);
}

TEST_CASE("TIM2 collapses to TIM1 when both kernels are equal") {
    SynthConfig cfg;
    cfg.n_events = 200000;
    cfg.alpha = 0.5;
    cfg.kernel_buy = {KernelFamily::exponential, 20.0, 0.4, 0.5};
    const auto ts = generate_tim_series(cfg);
    ImpactConfig ic;
    ic.alpha = 0.5;
    const auto est = estimate_bond_impact(ts.series, ic);
    REQUIRE(est.tim2.has_value());
    for (std::size_t j = 0; j <= 5; ++j) {
        CHECK(est.tim2->g[0][j] == doctest::Approx(est.tim1.g[0][j]).epsilon(0.1));
        CHECK(est.tim2->g[1][j] == doctest::Approx(est.tim1.g[0][j]).epsilon(0.1));
    }
}

TEST_CASE("series validation") {
    SignSeries s = to_series({1, -1, 1}, {0.0, 1.0, 2.0});
    CHECK_NOTHROW(validate(s));
    s.eps[1] = 0;
    CHECK_THROWS_AS(validate(s), DataError);
    s = to_series({1, -1, 1}, {0.0, 1.0, 2.0});
    s.mid.pop_back();
    CHECK_THROWS_AS(validate(s), DataError);
}

TEST_CASE("kernel aggregation") {
    ImpactKernel a, b;
    a.n = b.n = 2;
    a.g = {{2.0, 1.0, 0.5}};
    b.g = {{4.0, 3.0, 1.5}};
    a.dg = {{-1.0, -0.5}};
    b.dg = {{-1.0, -1.5}};
    const auto m = aggregate_kernels({&a, &b});
    CHECK(m.g[0] == std::vector<double>{3.0, 2.0, 1.0});
    CHECK(m.at(0, 50) == 1.0);
}
