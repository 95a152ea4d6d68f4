// bondtca: command-line front end for the cost-analysis pipeline.

#include "bondtca/csv.hpp"
#include "bondtca/error.hpp"
#include "bondtca/parallel.hpp"
#include "bondtca/pipeline.hpp"

#include <CLI11.hpp>

#include <functional>
#include <iostream>
#include <optional>

using namespace bondtca;

namespace {

struct Overrides {
    std::string config_file;
    std::optional<std::string> dir, tape, reference, context, calendar, quotes;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;

    std::optional<std::size_t> bonds, trades_per_bond, weeks;
    std::optional<std::string> start;
    std::optional<double> half_spread, rpt_fraction, cancel_rate, correction_rate, violation_rate;

    bool cap_volumes = false;

    std::optional<double> max_gap;
    std::optional<std::string> mid;

    std::optional<std::string> model, lambda_grid, train_range, test_range;
    std::optional<std::vector<double>> alphas;
    std::optional<std::size_t> k_folds;
    std::optional<std::vector<std::string>> features;

    std::optional<std::size_t> n, l, l_max, min_events, top_k;
    std::optional<double> impact_alpha;
    std::optional<std::string> g0_mode, impact_mid;
    bool no_tim2 = false;

    bool skip_generate = false;
};

void add_common(CLI::App* app, Overrides& o) {
    app->add_option("--config", o.config_file, "JSON config file (flags override its values)")->check(CLI::ExistingFile);
    app->add_option("--dir", o.dir, "run directory holding every artifact (default: run)");
    app->add_option("--seed", o.seed, "seed for the generator and the CV fold shuffle (default: 42)");
    app->add_option("--threads", o.threads, "worker threads (default: all available)")->check(CLI::NonNegativeNumber);
}

void add_generate(CLI::App* app, Overrides& o) {
    app->add_option("--bonds", o.bonds, "number of synthetic bonds")->check(CLI::PositiveNumber);
    app->add_option("--trades-per-bond", o.trades_per_bond, "settled trades per bond, RPT legs included");
    app->add_option("--weeks", o.weeks, "calendar window length in weeks")->check(CLI::PositiveNumber);
    app->add_option("--start", o.start, "first day of the window, YYYY-MM-DD");
    app->add_option("--half-spread", o.half_spread, "base half spread h in bp");
    app->add_option("--rpt-fraction", o.rpt_fraction, "fraction of trades planted as RPT legs");
    app->add_option("--cancel-rate", o.cancel_rate, "bogus trades later cancelled or reversed, per trade");
    app->add_option("--correction-rate", o.correction_rate, "corrected trades, per trade");
    app->add_option("--violation-rate", o.violation_rate, "planted filter violations per step, per trade");
}

void add_inputs(CLI::App* app, Overrides& o, bool tape) {
    if (tape) app->add_option("--tape", o.tape, "trade tape CSV (default: <dir>/tape.csv)");
    app->add_option("--reference", o.reference, "bond reference CSV (default: <dir>/reference.csv)");
    app->add_option("--context", o.context, "weekly LIBOR-OIS CSV (default: <dir>/context.csv)");
    app->add_option("--calendar", o.calendar, "holiday file (default: <dir>/calendar.txt)");
}

void add_ingest(CLI::App* app, Overrides& o) {
    app->add_flag("--cap-volumes", o.cap_volumes, "cap volumes at 1MM (HY) / 5MM (IG) as on the Standard tape");
}

void add_spread(CLI::App* app, Overrides& o) {
    app->add_option("--max-gap", o.max_gap, "longest gap in seconds between the two trades of a pair (default: 300)");
    app->add_option("--mid", o.mid, "mid-price convention")->check(CLI::IsMember({"paper", "corrected"}));
}

void add_fit(CLI::App* app, Overrides& o) {
    app->add_option("--model", o.model, "regression model")->check(CLI::IsMember({"ols", "ridge", "lasso", "lslasso", "en"}));
    app->add_option("--lambda-grid", o.lambda_grid, "lo:hi:count (log-uniform) or a comma list");
    app->add_option("--alpha", o.alphas, "elastic-net mixing values (default: 0.2 0.5 0.8)");
    app->add_option("--k-folds", o.k_folds, "number of CV folds (default: 10)");
    app->add_option("--train-range", o.train_range, "training weeks, e.g. 2015-W02:2015-W18");
    app->add_option("--test-range", o.test_range, "test weeks; must start after the training range");
    app->add_option("--features", o.features, "covariate names (default depends on the model)");
}

void add_impact(CLI::App* app, Overrides& o) {
    app->add_option("--N", o.n, "kernel length N (default: 10)");
    app->add_option("--L", o.l, "number of response lags L >= N (default: 10)");
    app->add_option("--impact-alpha", o.impact_alpha, "volume power index (default: 0)");
    app->add_option("--l-max", o.l_max, "largest signature-plot lag (default: 10)");
    app->add_option("--min-events", o.min_events, "events a bond needs to enter the aggregate kernel (default: 1000)");
    app->add_option("--top-k", o.top_k, "estimate only the k most traded bonds (default: all)");
    app->add_option("--g0-mode", o.g0_mode, "how G(0) is estimated")->check(CLI::IsMember({"projection", "joint"}));
    app->add_option("--impact-mid", o.impact_mid, "mid used for impact")->check(CLI::IsMember({"spread_adjusted", "trade"}));
    app->add_flag("--no-tim2", o.no_tim2, "skip the buy/sell two-kernel model");
}

void add_report(CLI::App* app, Overrides& o) {
    app->add_option("--quotes", o.quotes, "quoted spreads CSV (cusip,iso_week,s_quote_bp) for the stationarity ratio");
}

RunConfig build_config(const Overrides& o) {
    RunConfig c;
    if (!o.config_file.empty()) {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(read_text_file(o.config_file));
        } catch (const nlohmann::json::parse_error& e) {
            throw ConfigError(o.config_file + ": " + e.what());
        }
        c.apply_json(j);
    }
    auto set = [](auto& dst, const auto& src) {
        if (src) dst = *src;
    };
    set(c.dir, o.dir);
    set(c.tape, o.tape);
    set(c.reference, o.reference);
    set(c.context, o.context);
    set(c.calendar, o.calendar);
    set(c.quotes, o.quotes);
    set(c.seed, o.seed);
    set(c.threads, o.threads);
    set(c.synth.n_bonds, o.bonds);
    set(c.synth.trades_per_bond, o.trades_per_bond);
    set(c.synth.n_weeks, o.weeks);
    if (o.start) c.synth.start = parse_date(*o.start);
    set(c.synth.half_spread_bp, o.half_spread);
    set(c.synth.rpt_fraction, o.rpt_fraction);
    set(c.synth.cancel_rate, o.cancel_rate);
    set(c.synth.correction_rate, o.correction_rate);
    set(c.synth.violation_rate, o.violation_rate);
    if (o.cap_volumes) c.cap_volumes = true;
    set(c.spread.max_gap_seconds, o.max_gap);
    if (o.mid) c.spread.mid = parse_mid_convention(*o.mid);
    if (o.model) c.model = parse_model(*o.model);
    if (o.lambda_grid) c.lambda_grid = parse_lambda_grid(*o.lambda_grid);
    set(c.alphas, o.alphas);
    set(c.k_folds, o.k_folds);
    if (o.train_range) c.train_range = parse_week_range(*o.train_range);
    if (o.test_range) c.test_range = parse_week_range(*o.test_range);
    set(c.features, o.features);
    set(c.impact_n, o.n);
    set(c.impact_l, o.l);
    set(c.impact_alpha, o.impact_alpha);
    set(c.l_max, o.l_max);
    set(c.min_events, o.min_events);
    set(c.top_k, o.top_k);
    if (o.g0_mode) c.g0_mode = *o.g0_mode == "joint" ? G0Mode::joint : G0Mode::projection;
    if (o.impact_mid) c.impact_mid = *o.impact_mid == "trade" ? ImpactMid::trade : ImpactMid::spread_adjusted;
    if (o.no_tim2) c.tim2 = false;
    c.validate();
    return c;
}

std::string_view kind_name(ErrorKind k) {
    switch (k) {
        case ErrorKind::config: return "config";
        case ErrorKind::data: return "data";
        case ErrorKind::numerical: return "numerical";
    }
    return "unknown";
}

int fail(ErrorKind kind, const std::string& message, const std::string& stage) {
    nlohmann::json j{{"error", {{"kind", kind_name(kind)}, {"message", message}, {"exit_code", static_cast<int>(kind)}}}};
    if (!stage.empty()) j["error"]["stage"] = stage;
    std::cerr << j.dump() << '\n';
    return static_cast<int>(kind);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"bondtca: transaction-cost analysis for corporate bond trade tapes"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kToolVersion));
    Overrides o;

    using Stage = std::function<nlohmann::json(const RunConfig&)>;
    std::vector<std::pair<CLI::App*, std::vector<std::pair<std::string, Stage>>>> commands;

    auto* gen = app.add_subcommand("generate", "write a synthetic tape, reference data, calendar and manifest");
    add_common(gen, o);
    add_generate(gen, o);
    commands.push_back({gen, {{"generate", run_generate}}});

    auto* ingest = app.add_subcommand("ingest", "parse, reconcile and filter a tape into clean trades");
    add_common(ingest, o);
    add_inputs(ingest, o, true);
    add_ingest(ingest, o);
    commands.push_back({ingest, {{"ingest", run_ingest}}});

    auto* classify = app.add_subcommand("classify", "sign trades and flag riskless principal trades");
    add_common(classify, o);
    commands.push_back({classify, {{"classify", run_classify}}});

    auto* spread = app.add_subcommand("spread", "estimate spreads, weekly means and one-sided spreads");
    add_common(spread, o);
    add_spread(spread, o);
    commands.push_back({spread, {{"spread", run_spread}}});

    auto* features = app.add_subcommand("features", "build the weekly feature matrix");
    add_common(features, o);
    add_inputs(features, o, false);
    commands.push_back({features, {{"features", run_features}}});

    auto* fit = app.add_subcommand("fit", "cross-validate and fit a spread model");
    add_common(fit, o);
    add_fit(fit, o);
    commands.push_back({fit, {{"fit", run_fit}}});

    auto* impact = app.add_subcommand("impact", "estimate transient impact kernels and signature plots");
    add_common(impact, o);
    add_impact(impact, o);
    commands.push_back({impact, {{"impact", run_impact}}});

    auto* report = app.add_subcommand("report", "combined summary with asymmetry and stationarity tests");
    add_common(report, o);
    add_report(report, o);
    commands.push_back({report, {{"report", run_report}}});

    auto* run = app.add_subcommand("run", "every stage in order");
    add_common(run, o);
    add_generate(run, o);
    add_inputs(run, o, true);
    add_ingest(run, o);
    add_spread(run, o);
    add_fit(run, o);
    add_impact(run, o);
    add_report(run, o);
    run->add_flag("--skip-generate", o.skip_generate, "start from an existing tape instead of generating one");
    commands.push_back({run,
                        {{"generate", run_generate},
                         {"ingest", run_ingest},
                         {"classify", run_classify},
                         {"spread", run_spread},
                         {"features", run_features},
                         {"fit", run_fit},
                         {"impact", run_impact},
                         {"report", run_report}}});

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        app.exit(e);
        return fail(ErrorKind::config, e.what(), "");
    }

    std::string stage;
    try {
        const RunConfig config = build_config(o);
        if (config.threads > 0) set_threads(config.threads);
        for (const auto& [cmd, stages] : commands) {
            if (!cmd->parsed()) continue;
            for (const auto& [name, fn] : stages) {
                if (name == "generate" && o.skip_generate) continue;
                stage = name;
                std::cout << fn(config).dump() << std::endl;
            }
        }
    } catch (const Error& e) {
        return fail(e.kind(), e.what(), stage);
    } catch (const std::exception& e) {
        return fail(ErrorKind::data, e.what(), stage);
    }
    return 0;
}
