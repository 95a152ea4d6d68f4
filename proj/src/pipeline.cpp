#include "bondtca/pipeline.hpp"

#include "bondtca/csv.hpp"
#include "bondtca/error.hpp"
#include "bondtca/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace bondtca {

namespace fs = std::filesystem;
using nlohmann::json;

WeekRange parse_week_range(std::string_view text) {
    const auto colon = text.find(':');
    if (colon == std::string_view::npos) throw ConfigError("week range must look like 2015-W02:2015-W20, got '" + std::string(text) + "'");
    try {
        WeekRange r{parse_iso_week(text.substr(0, colon)), parse_iso_week(text.substr(colon + 1))};
        if (r.second < r.first) throw ConfigError("week range '" + std::string(text) + "' ends before it starts");
        return r;
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError("bad week range '" + std::string(text) + "': " + e.what());
    }
}

std::string format_week_range(const WeekRange& r) { return r.first.str() + ":" + r.second.str(); }

std::vector<double> parse_lambda_grid(std::string_view text) {
    auto number = [&](std::string_view s) {
        auto v = try_parse_double(s);
        if (!v || !std::isfinite(*v) || *v < 0.0) throw ConfigError("bad lambda grid value '" + std::string(s) + "'");
        return *v;
    };
    std::vector<std::string_view> parts;
    const char sep = text.find(':') != std::string_view::npos ? ':' : ',';
    std::size_t pos = 0;
    while (true) {
        const auto next = text.find(sep, pos);
        parts.push_back(text.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos));
        if (next == std::string_view::npos) break;
        pos = next + 1;
    }
    if (sep == ':') {
        if (parts.size() != 3) throw ConfigError("lambda grid 'lo:hi:count' needs three parts");
        const auto count = try_parse_int(parts[2]);
        if (!count || *count < 1) throw ConfigError("lambda grid count must be a positive integer");
        const double lo = number(parts[0]), hi = number(parts[1]);
        if (lo <= 0.0 || hi < lo) throw ConfigError("lambda grid needs 0 < lo <= hi");
        return log_grid(lo, hi, static_cast<std::size_t>(*count));
    }
    std::vector<double> out;
    for (auto p : parts) out.push_back(number(p));
    if (out.empty()) throw ConfigError("empty lambda grid");
    return out;
}

namespace {

std::string_view to_string(ImpactMid m) { return m == ImpactMid::trade ? "trade" : "spread_adjusted"; }

ImpactMid parse_impact_mid(std::string_view s) {
    if (s == "spread_adjusted") return ImpactMid::spread_adjusted;
    if (s == "trade") return ImpactMid::trade;
    throw ConfigError("impact mid must be 'spread_adjusted' or 'trade', got '" + std::string(s) + "'");
}

std::string_view to_string(G0Mode m) { return m == G0Mode::joint ? "joint" : "projection"; }

G0Mode parse_g0_mode(std::string_view s) {
    if (s == "projection") return G0Mode::projection;
    if (s == "joint") return G0Mode::joint;
    throw ConfigError("g0 mode must be 'projection' or 'joint', got '" + std::string(s) + "'");
}

void check_keys(const json& j, const std::string& where, std::initializer_list<std::string_view> allowed) {
    if (!j.is_object()) throw ConfigError("config section '" + where + "' must be an object");
    for (const auto& item : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
            throw ConfigError("unknown config key '" + (where.empty() ? "" : where + ".") + item.key() + "'");
        }
    }
}

template <class T>
void read(const json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config key '") + key + "': " + e.what());
    }
}

template <class T, class Parse>
void read_parsed(const json& j, const char* key, T& out, Parse parse) {
    std::string s;
    read(j, key, s);
    if (j.contains(key)) out = parse(s);
}

void apply_generate(const json& j, TraceFixtureConfig& c) {
    check_keys(j, "generate",
               {"n_bonds", "trades_per_bond", "start", "n_weeks", "holidays", "half_spread_bp", "customer_share",
                "rpt_fraction", "burst_share", "burst_gap_seconds", "kernel", "sigma_eta", "alpha", "volume_mu", "volume_sigma", "cancel_rate",
                "reversal_share", "correction_rate", "violation_rate", "dangling", "ig_fraction"});
    read(j, "n_bonds", c.n_bonds);
    read(j, "trades_per_bond", c.trades_per_bond);
    read_parsed(j, "start", c.start, [](const std::string& s) { return parse_date(s); });
    read(j, "n_weeks", c.n_weeks);
    if (j.contains("holidays")) {
        std::vector<std::string> h;
        read(j, "holidays", h);
        c.holidays.clear();
        for (const auto& s : h) c.holidays.push_back(parse_date(s));
    }
    read(j, "half_spread_bp", c.half_spread_bp);
    read(j, "customer_share", c.customer_share);
    read(j, "rpt_fraction", c.rpt_fraction);
    read(j, "burst_share", c.burst_share);
    read(j, "burst_gap_seconds", c.burst_gap_seconds);
    if (j.contains("kernel")) {
        const auto& k = j.at("kernel");
        check_keys(k, "generate.kernel", {"family", "g0", "beta", "gamma"});
        read_parsed(k, "family", c.kernel.family, [](const std::string& s) { return parse_kernel_family(s); });
        read(k, "g0", c.kernel.g0);
        read(k, "beta", c.kernel.beta);
        read(k, "gamma", c.kernel.gamma);
    }
    read(j, "sigma_eta", c.sigma_eta);
    read(j, "alpha", c.alpha);
    read(j, "volume_mu", c.volume_mu);
    read(j, "volume_sigma", c.volume_sigma);
    read(j, "cancel_rate", c.cancel_rate);
    read(j, "reversal_share", c.reversal_share);
    read(j, "correction_rate", c.correction_rate);
    read(j, "violation_rate", c.violation_rate);
    read(j, "dangling", c.dangling);
    read(j, "ig_fraction", c.ig_fraction);
}

bool in_range(const IsoWeek& w, const std::optional<WeekRange>& r) { return !r || (r->first <= w && w <= r->second); }

void write_json(const std::string& path, const json& j) { write_text_file(path, j.dump(2) + "\n"); }

json read_json(const std::string& path) {
    try {
        return json::parse(read_text_file(path));
    } catch (const json::parse_error& e) {
        throw DataError(path + ": " + e.what());
    }
}

std::string period_of(const IsoWeek& w) {
    const std::chrono::year_month_day ymd(iso_week_monday(w));
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-P%u", static_cast<int>(ymd.year()), (static_cast<unsigned>(ymd.month()) + 1) / 2);
    return buf;
}

json test_json(const TestResult& t) {
    json j{{"statistic", t.statistic}, {"p_value", t.p_value}, {"df1", t.df1}, {"df2", t.df2}};
    if (t.degenerate) j["degenerate"] = true;
    return j;
}

}  // namespace

json RunConfig::to_json() const {
    json gen = synth.to_json();
    gen.erase("seed");
    json fit{{"model", bondtca::to_string(model)}, {"lambda_grid", lambda_grid}, {"alpha", alphas},
             {"k_folds", k_folds},                 {"features", features}};
    fit["train_range"] = train_range ? json(format_week_range(*train_range)) : json(nullptr);
    fit["test_range"] = test_range ? json(format_week_range(*test_range)) : json(nullptr);
    return {{"seed", seed},
            {"generate", gen},
            {"ingest", {{"cap_volumes", cap_volumes}}},
            {"spread", {{"max_gap_seconds", spread.max_gap_seconds}, {"mid", bondtca::to_string(spread.mid)}}},
            {"fit", fit},
            {"impact",
             {{"N", impact_n},
              {"L", impact_l},
              {"alpha", impact_alpha},
              {"l_max", l_max},
              {"min_events", min_events},
              {"top_k", top_k},
              {"g0_mode", to_string(g0_mode)},
              {"tim2", tim2},
              {"mid", to_string(impact_mid)}}}};
}

void RunConfig::apply_json(const json& j) {
    check_keys(j, "", {"seed", "threads", "paths", "generate", "ingest", "spread", "fit", "impact"});
    read(j, "seed", seed);
    read(j, "threads", threads);
    if (j.contains("paths")) {
        const auto& p = j.at("paths");
        check_keys(p, "paths", {"dir", "tape", "reference", "context", "calendar", "quotes"});
        read(p, "dir", dir);
        read(p, "tape", tape);
        read(p, "reference", reference);
        read(p, "context", context);
        read(p, "calendar", calendar);
        read(p, "quotes", quotes);
    }
    if (j.contains("generate")) apply_generate(j.at("generate"), synth);
    if (j.contains("ingest")) {
        check_keys(j.at("ingest"), "ingest", {"cap_volumes"});
        read(j.at("ingest"), "cap_volumes", cap_volumes);
    }
    if (j.contains("spread")) {
        const auto& s = j.at("spread");
        check_keys(s, "spread", {"max_gap_seconds", "mid"});
        read(s, "max_gap_seconds", spread.max_gap_seconds);
        read_parsed(s, "mid", spread.mid, [](const std::string& v) { return parse_mid_convention(v); });
    }
    if (j.contains("fit")) {
        const auto& f = j.at("fit");
        check_keys(f, "fit", {"model", "lambda_grid", "alpha", "k_folds", "train_range", "test_range", "features"});
        read_parsed(f, "model", model, [](const std::string& v) { return parse_model(v); });
        if (f.contains("lambda_grid")) {
            if (f.at("lambda_grid").is_string()) lambda_grid = parse_lambda_grid(f.at("lambda_grid").get<std::string>());
            else read(f, "lambda_grid", lambda_grid);
        }
        if (f.contains("alpha")) {
            if (f.at("alpha").is_number()) alphas = {f.at("alpha").get<double>()};
            else read(f, "alpha", alphas);
        }
        read(f, "k_folds", k_folds);
        for (const char* key : {"train_range", "test_range"}) {
            if (!f.contains(key)) continue;
            auto& target = std::string_view(key) == "train_range" ? train_range : test_range;
            if (f.at(key).is_null()) target.reset();
            else target = parse_week_range(f.at(key).get<std::string>());
        }
        read(f, "features", features);
    }
    if (j.contains("impact")) {
        const auto& m = j.at("impact");
        check_keys(m, "impact", {"N", "L", "alpha", "l_max", "min_events", "top_k", "g0_mode", "tim2", "mid"});
        read(m, "N", impact_n);
        read(m, "L", impact_l);
        read(m, "alpha", impact_alpha);
        read(m, "l_max", l_max);
        read(m, "min_events", min_events);
        read(m, "top_k", top_k);
        read_parsed(m, "g0_mode", g0_mode, [](const std::string& v) { return parse_g0_mode(v); });
        read(m, "tim2", tim2);
        read_parsed(m, "mid", impact_mid, [](const std::string& v) { return parse_impact_mid(v); });
    }
}

void RunConfig::validate() const {
    auto prob = [](double p, const char* name) {
        if (!(p >= 0.0 && p <= 1.0)) throw ConfigError(std::string(name) + " must lie in [0, 1]");
    };
    prob(synth.customer_share, "generate.customer_share");
    prob(synth.cancel_rate, "generate.cancel_rate");
    prob(synth.reversal_share, "generate.reversal_share");
    prob(synth.correction_rate, "generate.correction_rate");
    prob(synth.violation_rate, "generate.violation_rate");
    prob(synth.ig_fraction, "generate.ig_fraction");
    if (!(synth.rpt_fraction >= 0.0 && synth.rpt_fraction < 1.0)) throw ConfigError("generate.rpt_fraction must lie in [0, 1)");
    if (synth.half_spread_bp < 0.0 || synth.sigma_eta < 0.0 || synth.kernel.g0 < 0.0) {
        throw ConfigError("generate: half_spread_bp, sigma_eta and kernel.g0 must be non-negative");
    }
    if (spread.max_gap_seconds <= 0.0) throw ConfigError("spread.max_gap_seconds must be positive");
    if (k_folds < 2) throw ConfigError("fit.k_folds must be at least 2");
    for (double a : alphas) prob(a, "fit.alpha");
    for (double l : lambda_grid) {
        if (!(l >= 0.0) || !std::isfinite(l)) throw ConfigError("fit.lambda_grid values must be non-negative");
    }
    if (train_range && test_range && !(train_range->second < test_range->first)) {
        throw ConfigError("train range " + format_week_range(*train_range) + " must end before test range " +
                          format_week_range(*test_range) + " starts");
    }
    if (impact_n == 0 || impact_l < impact_n) throw ConfigError("impact needs N >= 1 and L >= N");
    if (l_max == 0) throw ConfigError("impact.l_max must be positive");
    if (impact_alpha < 0.0) throw ConfigError("impact.alpha must be non-negative");
}

std::string RunConfig::path(const std::string& name) const { return (fs::path(dir) / name).string(); }

std::uint64_t config_hash(const RunConfig& config) {
    const std::string text = config.to_json().dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string config_hash_hex(const RunConfig& config) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(config_hash(config)));
    return buf;
}

std::string csv_metadata(const RunConfig& config, std::string_view stage) {
    return "# bondtca " + std::string(kToolVersion) + " stage=" + std::string(stage) + " config_hash=" +
           config_hash_hex(config) + " seed=" + std::to_string(config.seed) + "\n";
}

json json_metadata(const RunConfig& config, std::string_view stage) {
    return {{"tool", "bondtca"},
            {"version", kToolVersion},
            {"stage", stage},
            {"config_hash", config_hash_hex(config)},
            {"seed", config.seed}};
}

std::vector<std::string> top_traded(const std::vector<SignedTrade>& trades, std::size_t k) {
    std::map<std::string, std::size_t> count;
    for (const auto& t : trades) ++count[t.cusip];
    std::vector<std::pair<std::string, std::size_t>> v(count.begin(), count.end());
    std::stable_sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    if (k > 0 && v.size() > k) v.resize(k);
    std::vector<std::string> out;
    for (auto& [c, n] : v) out.push_back(c);
    return out;
}

std::string format_one_sided_csv(const std::vector<OneSidedSpread>& rows) {
    std::string out = "cusip,date,spread_b,spread_s,volume_b,volume_s\n";
    for (const auto& r : rows) {
        out += csv_field(r.cusip) + ',' + format_date(r.day) + ',';
        if (r.spread_b) append_number(out, *r.spread_b);
        out += ',';
        if (r.spread_s) append_number(out, *r.spread_s);
        out += ',';
        append_number(out, r.volume_b);
        out += ',';
        append_number(out, r.volume_s);
        out += '\n';
    }
    return out;
}

std::vector<OneSidedRow> parse_one_sided_csv(std::string_view text) {
    CsvReader reader(text);
    std::vector<std::string> f;
    if (!reader.next(f)) throw DataError("one-sided spread file is empty");
    const CsvHeader h(f);
    h.require({"cusip", "date", "spread_b", "spread_s", "volume_b", "volume_s"});
    std::vector<OneSidedRow> out;
    std::size_t row = 0;
    while (reader.next(f)) {
        ++row;
        if (f.size() != h.size()) throw ParseError(row, "cusip", "wrong field count");
        OneSidedRow r;
        r.cusip = f[h.at("cusip")];
        try {
            r.day = parse_date(f[h.at("date")]);
        } catch (const std::exception& e) {
            throw ParseError(row, "date", e.what());
        }
        for (const char* col : {"spread_b", "spread_s"}) {
            const auto& s = f[h.at(col)];
            if (s.empty()) continue;
            auto v = try_parse_double(s);
            if (!v) throw ParseError(row, col, "not a number");
            (std::string_view(col) == "spread_b" ? r.spread_b : r.spread_s) = *v;
        }
        auto vb = try_parse_double(f[h.at("volume_b")]);
        auto vs = try_parse_double(f[h.at("volume_s")]);
        if (!vb || !vs) throw ParseError(row, vb ? "volume_s" : "volume_b", "not a number");
        r.volume_b = *vb;
        r.volume_s = *vs;
        out.push_back(std::move(r));
    }
    return out;
}

// ---------------------------------------------------------------- stages

namespace {

std::string input_or(const std::string& explicit_path, const RunConfig& c, const std::string& name) {
    return explicit_path.empty() ? c.path(name) : explicit_path;
}

void ensure_dir(const RunConfig& c) {
    std::error_code ec;
    fs::create_directories(c.dir, ec);
    if (ec) throw ConfigError("cannot create run directory '" + c.dir + "': " + ec.message());
}

std::string require_file(const std::string& path, std::string_view produced_by) {
    if (!fs::exists(path)) {
        throw ConfigError("missing input '" + path + "'" +
                          (produced_by.empty() ? std::string() : " (run the " + std::string(produced_by) + " stage first)"));
    }
    return read_text_file(path);
}

BusinessCalendar load_calendar(const RunConfig& c) {
    const auto p = input_or(c.calendar, c, "calendar.txt");
    require_file(p, "generate");
    return BusinessCalendar::load(p);
}

}  // namespace

json run_generate(const RunConfig& c) {
    ensure_dir(c);
    auto sc = c.synth;
    sc.seed = c.seed;
    const auto fx = generate_trace_fixture(sc);
    const auto meta = csv_metadata(c, "generate");
    write_text_file(c.path("tape.csv"), meta + format_trace_csv(fx.reports));
    write_text_file(c.path("reference.csv"), meta + format_bond_reference_csv(fx.bonds));
    write_text_file(c.path("context.csv"), meta + format_market_context_csv(fx.context));
    std::ostringstream cal;
    cal << meta;
    fx.calendar.write(cal);
    write_text_file(c.path("calendar.txt"), cal.str());
    json manifest = fx.manifest;
    manifest["meta"] = json_metadata(c, "generate");
    write_json(c.path("manifest.json"), manifest);
    write_text_file(c.path("planted_rpts.csv"), meta + format_planted_rpts_csv(fx.planted_rpts));
    return {{"stage", "generate"},
            {"records", fx.reports.size()},
            {"true_trades", fx.manifest["true_trades"]},
            {"bonds", fx.bonds.size()}};
}

json run_ingest(const RunConfig& c) {
    ensure_dir(c);
    const auto reports = parse_trace_csv(require_file(input_or(c.tape, c, "tape.csv"), "generate"));
    const auto calendar = load_calendar(c);
    LifecycleStats life;
    const auto settled = reconcile_lifecycle(reports, &life);
    const auto filtered = filter_pipeline(settled, calendar);
    const auto report = with_lifecycle_step(filtered.report, life);
    auto clean = to_clean_trades(filtered.kept);
    if (c.cap_volumes) {
        const auto ref = parse_bond_reference_csv(require_file(input_or(c.reference, c, "reference.csv"), "generate"));
        std::map<std::string, Grade> grade_of;
        for (const auto& [cusip, b] : ref) grade_of[cusip] = b.grade;
        clean = cap_volumes(clean, grade_of);
    }
    write_text_file(c.path("clean_trades.csv"), csv_metadata(c, "ingest") + format_clean_trades_csv(clean));
    json j = filter_report_to_json(report);
    j["meta"] = json_metadata(c, "ingest");
    j["volume_capping"] = c.cap_volumes;
    write_json(c.path("filter_report.json"), j);
    return {{"stage", "ingest"},
            {"records", reports.size()},
            {"clean_trades", clean.size()},
            {"dangling_skipped", life.dangling_skipped}};
}

json run_classify(const RunConfig& c) {
    ensure_dir(c);
    const auto clean = parse_clean_trades_csv(require_file(c.path("clean_trades.csv"), "ingest"));
    const auto signed_trades = classify_trades(clean);
    write_text_file(c.path("signed_trades.csv"), csv_metadata(c, "classify") + format_signed_trades_csv(signed_trades));
    std::size_t rpt = 0, buy = 0, sell = 0;
    for (const auto& t : signed_trades) {
        rpt += t.is_rpt;
        buy += t.epsilon > 0;
        sell += t.epsilon < 0;
    }
    return {{"stage", "classify"},
            {"trades", signed_trades.size()},
            {"rpt_legs", rpt},
            {"rpt_fraction", signed_trades.empty() ? 0.0 : static_cast<double>(rpt) / static_cast<double>(signed_trades.size())},
            {"buys", buy},
            {"sells", sell}};
}

json run_spread(const RunConfig& c) {
    ensure_dir(c);
    const auto trades = parse_signed_trades_csv(require_file(c.path("signed_trades.csv"), "classify"));
    SpreadRunStats stats;
    const auto obs = estimate_spreads(trades, c.spread, &stats);
    const auto weekly = aggregate_weekly(obs);
    const auto one_sided = one_sided_spreads_by_day(trades);
    const auto meta = csv_metadata(c, "spread");
    write_text_file(c.path("spreads.csv"), meta + format_spread_observations_csv(obs));
    write_text_file(c.path("weekly_spreads.csv"), meta + format_weekly_spreads_csv(weekly));
    write_text_file(c.path("one_sided_spreads.csv"), meta + format_one_sided_csv(one_sided));
    return {{"stage", "spread"},
            {"observations", obs.size()},
            {"weekly_rows", weekly.size()},
            {"bond_days_one_sided", one_sided.size()},
            {"signed_trades", stats.signed_trades},
            {"trades_consumed", stats.trades_consumed},
            {"degenerate_mid", stats.degenerate_mid},
            {"mid_convention", to_string(c.spread.mid)}};
}

json run_features(const RunConfig& c) {
    ensure_dir(c);
    const auto weekly = parse_weekly_spreads_csv(require_file(c.path("weekly_spreads.csv"), "spread"));
    const auto trades = parse_signed_trades_csv(require_file(c.path("signed_trades.csv"), "classify"));
    const auto ref = parse_bond_reference_csv(require_file(input_or(c.reference, c, "reference.csv"), "generate"));
    const auto ctx = parse_market_context_csv(require_file(input_or(c.context, c, "context.csv"), "generate"));
    const auto calendar = load_calendar(c);
    FeatureBuildStats stats;
    const auto rows = build_feature_matrix(weekly, trades, ref, ctx, calendar, &stats);
    write_text_file(c.path("features.csv"), csv_metadata(c, "features") + format_features_csv(rows));
    return {{"stage", "features"},
            {"rows", rows.size()},
            {"weekly_rows", stats.weekly_rows},
            {"dropped_volatility", stats.dropped_volatility},
            {"dropped_context", stats.dropped_context}};
}

json run_fit(const RunConfig& c) {
    ensure_dir(c);
    const auto rows = parse_features_csv(require_file(c.path("features.csv"), "features"));
    std::vector<FeatureRow> train_rows, test_rows;
    for (const auto& r : rows) {
        if (in_range(r.week, c.train_range)) train_rows.push_back(r);
        else if (c.test_range && in_range(r.week, c.test_range)) test_rows.push_back(r);
    }
    if (c.test_range && !c.train_range) {
        // everything before the test window trains
        train_rows.clear();
        test_rows.clear();
        for (const auto& r : rows) {
            if (r.week < c.test_range->first) train_rows.push_back(r);
            else if (in_range(r.week, c.test_range)) test_rows.push_back(r);
        }
    }
    if (train_rows.empty()) throw DataError("no feature rows fall in the training range");

    std::vector<std::string> names = c.features;
    if (names.empty()) names = c.model == Model::ols ? default_ols_features() : default_penalized_features();
    const auto train = make_dataset(train_rows, names);

    std::vector<GridPoint> grid;
    if (c.model == Model::ols) {
        grid.push_back({0.0, 1.0});
    } else {
        auto lambdas = c.lambda_grid;
        if (lambdas.empty()) lambdas = c.model == Model::ridge ? log_grid(1e2, 1e8, 20) : log_grid(0.1, 1000.0, 20);
        std::vector<double> alphas{1.0};
        if (c.model == Model::ridge) alphas = {0.0};
        if (c.model == Model::elastic_net) alphas = c.alphas;
        for (double a : alphas) {
            for (double l : lambdas) grid.push_back({l, a});
        }
    }
    const auto cv = k_fold_cv(train, c.model, grid, c.k_folds, c.seed);
    const std::size_t chosen = select_by_ci(cv);
    const auto& mu = cv.points[chosen].mu;
    const auto fit = fit_model(train, c.model, mu.lambda, mu.alpha);

    json test = {{"rows", test_rows.size()}};
    if (!test_rows.empty()) {
        const auto data = make_dataset(test_rows, names);
        const Eigen::VectorXd yhat = predict(fit, data.X);
        test["r2"] = r_squared(data.y, yhat, train.y.mean());
        try {
            test["relative_error"] = relative_error(data.y, yhat);
        } catch (const DataError& e) {
            test["relative_error"] = nullptr;
            test["note"] = e.what();
        }
    }
    json out{{"meta", json_metadata(c, "fit")},
             {"fit", fit_to_json(fit)},
             {"selected",
              {{"index", chosen},
               {"lambda", mu.lambda},
               {"alpha", mu.alpha},
               {"cv_mean_r2", cv.points[chosen].mean},
               {"cv_sd_r2", cv.points[chosen].sd},
               {"in_i1", cv.points[chosen].in_i1},
               {"in_i2", cv.points[chosen].in_i2}}},
             {"train", {{"rows", train_rows.size()}, {"range", c.train_range ? json(format_week_range(*c.train_range)) : json("all")}}},
             {"test", test},
             {"k_folds", c.k_folds}};
    write_json(c.path("fit.json"), out);
    json cvj = cv_report_to_json(cv);
    write_json(c.path("cv_report.json"), {{"meta", json_metadata(c, "fit")}, {"report", cvj}});
    return {{"stage", "fit"},
            {"model", to_string(c.model)},
            {"lambda", mu.lambda},
            {"alpha", mu.alpha},
            {"support", fit.support.size()},
            {"r2_train", fit.r2},
            {"test", test}};
}

namespace {

std::string signature_csv(const RunConfig& c, const SignaturePlot& p) {
    std::string out = csv_metadata(c, "impact") + "lag,d_emp,d_model,se\n";
    for (std::size_t i = 0; i < p.d_emp.size(); ++i) {
        out += std::to_string(i + 1) + ',';
        append_number(out, p.d_emp[i]);
        out += ',';
        append_number(out, p.d_model[i]);
        out += ',';
        append_number(out, p.se[i]);
        out += '\n';
    }
    return out;
}

}  // namespace

json run_impact(const RunConfig& c) {
    ensure_dir(c);
    const auto trades = parse_signed_trades_csv(require_file(c.path("signed_trades.csv"), "classify"));
    std::map<std::string, double> mean_s;
    if (c.impact_mid == ImpactMid::spread_adjusted) {
        const auto obs = parse_spread_observations_csv(require_file(c.path("spreads.csv"), "spread"));
        std::map<std::string, std::pair<double, std::size_t>> acc;
        for (const auto& o : obs) {
            acc[o.cusip].first += o.s_bp;
            ++acc[o.cusip].second;
        }
        for (const auto& [cusip, a] : acc) mean_s[cusip] = a.first / static_cast<double>(a.second);
    }
    const auto bonds = top_traded(trades, c.top_k);
    const std::set<std::string> wanted(bonds.begin(), bonds.end());
    std::map<std::string, SignSeries> series;
    std::size_t unadjusted = 0;
    for (const auto& b : bonds) series[b].cusip = b;
    for (const auto& t : trades) {
        if (t.epsilon == 0 || !wanted.contains(t.cusip)) continue;
        auto& s = series[t.cusip];
        s.eps.push_back(t.epsilon);
        s.type.push_back(t.epsilon);
        s.volume.push_back(t.volume);
        double mid = t.price;
        if (c.impact_mid == ImpactMid::spread_adjusted) {
            auto it = mean_s.find(t.cusip);
            if (it != mean_s.end()) mid = t.price / (1.0 + t.epsilon * it->second / 2e4);
        }
        s.mid.push_back(mid);
    }
    if (c.impact_mid == ImpactMid::spread_adjusted) {
        for (const auto& b : bonds) unadjusted += !mean_s.contains(b);
    }

    ImpactConfig ic;
    ic.n = c.impact_n;
    ic.l = c.impact_l;
    ic.alpha = c.impact_alpha;
    ic.l_max = c.l_max;
    ic.g0_mode = c.g0_mode;
    ic.tim2 = c.tim2;
    ic.exec = Execution::serial;

    std::vector<std::optional<BondImpact>> results(bonds.size());
    std::vector<std::string> errors(bonds.size());
    const std::ptrdiff_t nb = static_cast<std::ptrdiff_t>(bonds.size());
    BONDTCA_PARALLEL_FOR_DYNAMIC
    for (std::ptrdiff_t i = 0; i < nb; ++i) {
        const auto idx = static_cast<std::size_t>(i);
        try {
            results[idx] = estimate_bond_impact(series.at(bonds[idx]), ic);
        } catch (const Error& e) {
            errors[idx] = e.what();
        }
    }

    const auto sig_dir = fs::path(c.dir) / "signatures";
    fs::create_directories(sig_dir);
    json per_bond = json::array();
    std::vector<const ImpactKernel*> agg1, agg2;
    for (std::size_t i = 0; i < bonds.size(); ++i) {
        json b{{"cusip", bonds[i]}, {"events", series.at(bonds[i]).size()}};
        if (!results[i]) {
            b["error"] = errors[i];
            per_bond.push_back(b);
            continue;
        }
        const auto& r = *results[i];
        b["tim1"] = kernel_to_json(r.tim1, r.cusip);
        b["signature_tim1_violations"] = band_violations(r.signature_tim1);
        write_text_file((sig_dir / (r.cusip + "_tim1.csv")).string(), signature_csv(c, r.signature_tim1));
        const bool enough = r.events >= c.min_events;
        if (enough) agg1.push_back(&r.tim1);
        if (r.tim2) {
            b["tim2"] = kernel_to_json(*r.tim2, r.cusip);
            b["signature_tim2_violations"] = band_violations(*r.signature_tim2);
            write_text_file((sig_dir / (r.cusip + "_tim2.csv")).string(), signature_csv(c, *r.signature_tim2));
            if (enough) agg2.push_back(&*r.tim2);
        } else if (c.tim2) {
            b["tim2_error"] = r.tim2_error;
        }
        b["in_aggregate"] = enough;
        per_bond.push_back(b);
    }
    json aggregate = json::object();
    if (!agg1.empty()) aggregate["tim1"] = kernel_to_json(aggregate_kernels(agg1), "aggregate");
    if (!agg2.empty()) aggregate["tim2"] = kernel_to_json(aggregate_kernels(agg2), "aggregate");
    aggregate["bonds_tim1"] = agg1.size();
    aggregate["bonds_tim2"] = agg2.size();

    json out{{"meta", json_metadata(c, "impact")},
             {"config", c.to_json()["impact"]},
             {"mid_unadjusted_bonds", unadjusted},
             {"bonds", per_bond},
             {"aggregate", aggregate}};
    write_json(c.path("kernels.json"), out);
    std::size_t failed = 0;
    for (const auto& e : errors) failed += !e.empty();
    return {{"stage", "impact"}, {"bonds", bonds.size()}, {"failed", failed}, {"aggregated_tim1", agg1.size()},
            {"aggregated_tim2", agg2.size()}};
}

json run_report(const RunConfig& c) {
    ensure_dir(c);
    json out{{"meta", json_metadata(c, "report")}};

    if (fs::exists(c.path("filter_report.json"))) {
        auto f = read_json(c.path("filter_report.json"));
        f.erase("meta");
        if (f.contains("lifecycle")) f["lifecycle"].erase("log");
        out["filter"] = f;
    }

    const auto trades = parse_signed_trades_csv(require_file(c.path("signed_trades.csv"), "classify"));
    {
        std::size_t rpt = 0, buy = 0, sell = 0, dd = 0;
        for (const auto& t : trades) {
            rpt += t.is_rpt;
            buy += t.epsilon > 0;
            sell += t.epsilon < 0;
            dd += t.leg == Leg::dealer_dealer;
        }
        const double n = std::max<double>(1.0, static_cast<double>(trades.size()));
        out["classification"] = {{"trades", trades.size()},
                                 {"rpt_legs", rpt},
                                 {"rpt_fraction", static_cast<double>(rpt) / n},
                                 {"customer_buys", buy},
                                 {"customer_sells", sell},
                                 {"dealer_dealer", dd}};
    }

    const auto weekly = parse_weekly_spreads_csv(require_file(c.path("weekly_spreads.csv"), "spread"));
    {
        std::vector<double> s;
        for (const auto& w : weekly) s.push_back(w.mean_s_bp);
        std::sort(s.begin(), s.end());
        json j{{"bond_weeks", s.size()}};
        if (!s.empty()) {
            double sum = 0.0;
            for (double v : s) sum += v;
            j["mean_s_bp"] = sum / static_cast<double>(s.size());
            j["median_s_bp"] = s.size() % 2 ? s[s.size() / 2] : 0.5 * (s[s.size() / 2 - 1] + s[s.size() / 2]);
        }
        out["spreads"] = j;
    }

    // buy/sell asymmetry of one-sided spreads, pooled over bond-days (bp)
    {
        const auto rows = parse_one_sided_csv(require_file(c.path("one_sided_spreads.csv"), "spread"));
        std::vector<double> b, s;
        std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> by_bond;
        for (const auto& r : rows) {
            if (r.spread_b) {
                b.push_back(*r.spread_b * 1e4);
                by_bond[r.cusip].first.push_back(*r.spread_b * 1e4);
            }
            if (r.spread_s) {
                s.push_back(*r.spread_s * 1e4);
                by_bond[r.cusip].second.push_back(*r.spread_s * 1e4);
            }
        }
        json j{{"bond_days", rows.size()}, {"n_buy", b.size()}, {"n_sell", s.size()}};
        if (b.size() >= 2 && s.size() >= 2) {
            double mb = 0.0, ms = 0.0;
            for (double v : b) mb += v;
            for (double v : s) ms += v;
            j["mean_buy_bp"] = mb / static_cast<double>(b.size());
            j["mean_sell_bp"] = ms / static_cast<double>(s.size());
            j["welch_t"] = test_json(welch_t(b, s));
            j["ks"] = test_json(ks_two_sample(b, s));
            std::size_t tested = 0, buy_larger = 0, significant = 0;
            for (const auto& [cusip, v] : by_bond) {
                if (v.first.size() < 2 || v.second.size() < 2) continue;
                const auto t = welch_t(v.first, v.second);
                ++tested;
                buy_larger += t.statistic > 0.0;
                significant += t.p_value < 0.05;
            }
            j["per_bond"] = {{"tested", tested}, {"buy_larger", buy_larger}, {"significant_5pct", significant}};
        } else {
            j["note"] = "fewer than two buy or sell bond-days";
        }
        out["asymmetry"] = j;
    }

    // stationarity across two-month periods
    {
        std::vector<PeriodValue> values;
        std::string statistic = "weekly_s_bp";
        if (!c.quotes.empty()) {
            statistic = "quote_ratio";
            const auto text = require_file(c.quotes, "");
            CsvReader reader(text);
            std::vector<std::string> f;
            if (!reader.next(f)) throw DataError("quote file is empty");
            const CsvHeader h(f);
            h.require({"cusip", "iso_week", "s_quote_bp"});
            std::map<std::pair<std::string, IsoWeek>, double> ours;
            for (const auto& w : weekly) ours[{w.cusip, w.week}] = w.mean_s_bp;
            std::size_t row = 0;
            while (reader.next(f)) {
                ++row;
                if (f.size() != h.size()) throw ParseError(row, "cusip", "wrong field count");
                IsoWeek wk;
                try {
                    wk = parse_iso_week(f[h.at("iso_week")]);
                } catch (const std::exception& e) {
                    throw ParseError(row, "iso_week", e.what());
                }
                auto q = try_parse_double(f[h.at("s_quote_bp")]);
                if (!q) throw ParseError(row, "s_quote_bp", "not a number");
                auto it = ours.find({f[h.at("cusip")], wk});
                if (it == ours.end() || it->second == 0.0) continue;
                values.push_back({it->first.first, period_of(wk), *q / it->second});
            }
        } else {
            for (const auto& w : weekly) values.push_back({w.cusip, period_of(w.week), w.mean_s_bp});
        }
        std::set<std::string> periods;
        for (const auto& v : values) periods.insert(v.period);
        json j{{"statistic", statistic}, {"periods", periods.size()}};
        if (periods.size() >= 2) {
            const auto res = stationarity_by_period(values);
            write_text_file(c.path("stationarity.csv"), csv_metadata(c, "report") + format_stationarity_csv(res));
            json pairs = json::array();
            for (const auto& r : res) {
                json p{{"pair", r.first + "/" + r.second}};
                if (r.anova) p["anova"] = test_json(*r.anova);
                if (r.kruskal) p["kruskal"] = test_json(*r.kruskal);
                if (!r.note.empty()) p["note"] = r.note;
                pairs.push_back(p);
            }
            j["pairs"] = pairs;
        } else {
            j["note"] = "fewer than two periods";
        }
        out["stationarity"] = j;
    }

    if (fs::exists(c.path("fit.json"))) {
        auto f = read_json(c.path("fit.json"));
        f.erase("meta");
        out["fit"] = f;
    }
    if (fs::exists(c.path("kernels.json"))) {
        const auto k = read_json(c.path("kernels.json"));
        json imp = k.at("aggregate");
        if (imp.contains("tim2")) {
            const auto& g = imp["tim2"]["g"];
            if (g.contains("+1") && g.contains("-1") && !g["+1"].empty() && !g["-1"].empty()) {
                imp["buy_minus_sell_g0"] = g["+1"][0].get<double>() - g["-1"][0].get<double>();
            }
        }
        out["impact"] = imp;
    }
    write_json(c.path("report.json"), out);
    return {{"stage", "report"}, {"sections", out.size() - 1}};
}

}  // namespace bondtca
