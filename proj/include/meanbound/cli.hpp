// cli.hpp
//
// Command-line front end: bound, beta-n, table, simulate, demo-lognormal.
// Each subcommand parses flags, calls one library function and formats the
// result. Exit codes: 0 success, 1 unexpected failure, 2 invalid input,
// 3 output file not writable.
#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "meanbound.hpp"

namespace meanbound::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitInvalid = 2;
inline constexpr int kExitUnwritable = 3;
inline constexpr int kJsonSchemaVersion = 1;

/// Raised when --out cannot be opened or written.
class OutputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// One decimal value per line; blank lines and `#` comments are skipped.
inline std::vector<double> read_values(std::istream& in, const std::string& source) {
    std::vector<double> values;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        const auto e = line.find_last_not_of(" \t\r");
        const std::string tok = line.substr(b, e - b + 1);
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(tok, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != tok.size())
            detail::fail(source, ": line ", line_no, ": '", tok, "' is not a decimal value");
        values.push_back(v);
    }
    if (values.empty()) detail::fail(source, ": no data values");
    return values;
}

inline std::string format_fixed(double v) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(6) << v;
    return os.str();
}

/// Writes `content` to `path` or throws OutputError.
inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw OutputError("cannot open output file '" + path + "'");
    f << content;
    f.flush();
    if (!f) throw OutputError("cannot write output file '" + path + "'");
}

/// Support flags shared by several subcommands.
struct SupportFlags {
    std::vector<double> support;
    std::optional<double> upper;
    std::optional<double> lower;
    bool two_point = false;

    void attach(CLI::App& app) {
        auto* s = app.add_option("--support", support, "two-ended support A B")->expected(2);
        auto* u = app.add_option("--upper", upper, "one-ended support (-inf, B]");
        auto* l = app.add_option("--lower", lower, "one-ended support [A, inf)");
        s->excludes(u)->excludes(l);
        u->excludes(l);
        app.add_flag("--two-point", two_point, "values can only be the two --support endpoints");
    }

    [[nodiscard]] bool given() const { return !support.empty() || upper || lower; }

    [[nodiscard]] SupportInterval resolve() const {
        if (two_point && support.empty()) detail::fail("--two-point needs --support A B");
        if (!support.empty()) {
            if (support[0] > support[1]) detail::fail("--support: lower end exceeds the upper end");
            return two_point ? SupportInterval::two_point(support[0], support[1])
                             : SupportInterval::two_ended(support[0], support[1]);
        }
        if (upper) return SupportInterval::upper_only(*upper);
        if (lower) return SupportInterval::lower_only(*lower);
        return SupportInterval();
    }
};

inline CLI::Validator open_unit_interval() {
    return CLI::Validator(
        [](std::string& s) -> std::string {
            double v = 0.0;
            try {
                v = std::stod(s);
            } catch (const std::exception&) {
                return "must be a number in (0,1)";
            }
            if (!(v > 0.0 && v < 1.0)) return "must lie in (0,1), got " + s;
            return {};
        },
        "(0,1)");
}

inline CLI::Validator positive_count() {
    return CLI::Validator(
        [](std::string& s) -> std::string {
            if (s.empty() || s[0] == '-' || s == "0") return "must be a positive integer";
            return {};
        },
        "POSITIVE");
}

inline std::string result_json(const BoundResult& r, std::size_t n, const SupportInterval& support) {
    nlohmann::ordered_json j;
    j["schema_version"] = kJsonSchemaVersion;
    j["method"] = r.method;
    j["side"] = std::string(to_string(r.side));
    j["alpha"] = r.alpha;
    j["value"] = r.value;
    j["n"] = n;
    nlohmann::ordered_json s;
    s["lower"] = support.lower() ? nlohmann::ordered_json(*support.lower()) : nlohmann::ordered_json(nullptr);
    s["upper"] = support.upper() ? nlohmann::ordered_json(*support.upper()) : nlohmann::ordered_json(nullptr);
    s["two_point"] = support.is_two_point();
    j["support"] = s;
    j["diagnostics"] = r.diagnostics;
    j["warnings"] = r.warnings;
    return j.dump();
}

inline std::string result_text(const BoundResult& r) {
    std::ostringstream os;
    os << "method  " << r.method << '\n';
    os << "side    " << to_string(r.side) << '\n';
    os << "alpha   " << format_fixed(r.alpha) << '\n';
    os << "value   " << format_fixed(r.value) << '\n';
    for (const auto& [k, v] : r.diagnostics) os << "  " << k << " = " << format_fixed(v) << '\n';
    for (const auto& w : r.warnings) os << "warning: " << w << '\n';
    return os.str();
}

/// Runs the CLI on `args` (program name excluded). `in` stands in for stdin.
inline int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
    CLI::App app{"Confidence bounds on the mean of a distribution with bounded support", "meanbound"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "meanbound 1.0.0");

    // bound
    auto* bound = app.add_subcommand("bound", "compute one confidence bound from data");
    std::string data_path;
    std::string method_name = "new-anderson";
    double alpha = 0.05;
    std::string side_name = "upper";
    std::size_t mc_samples = kDefaultMcSamples;
    std::uint64_t seed = 0;
    std::optional<double> safe_epsilon;
    std::size_t safe_ceiling = kDefaultSafeSampleCeiling;
    std::size_t beta_mc = kDefaultBetaMcSamples;
    std::optional<std::uint64_t> beta_seed;
    bool json = false;
    bool clamp = false;
    bool no_cache = false;
    SupportFlags bound_support;
    bound->add_option("--data", data_path, "file with one value per line (default: stdin)");
    bound->add_option("--method", method_name, "new-anderson, new-l2, new-mean, anderson, hoeffding, "
                                                "maurer-pontil, student-t, clopper-pearson")
        ->capture_default_str();
    bound->add_option("--alpha", alpha, "confidence parameter")->check(open_unit_interval())->capture_default_str();
    bound->add_option("--side", side_name, "upper or lower")->check(CLI::IsMember({"upper", "lower"}))
        ->capture_default_str();
    bound->add_option("--mc-samples", mc_samples, "Monte-Carlo draws l")->check(positive_count())
        ->capture_default_str();
    bound->add_option("--seed", seed, "64-bit seed")->capture_default_str();
    bound->add_option("--safe-epsilon", safe_epsilon, "use the safe estimator with this epsilon")
        ->check(CLI::PositiveNumber);
    bound->add_option("--safe-ceiling", safe_ceiling, "largest l safe mode may use")->check(positive_count())
        ->capture_default_str();
    bound->add_option("--beta-mc-samples", beta_mc, "Monte-Carlo draws for beta(n)")->check(positive_count())
        ->capture_default_str();
    bound->add_option("--beta-seed", beta_seed, "seed for beta(n) (default: --seed)");
    bound->add_flag("--json", json, "print one JSON record");
    bound->add_flag("--clamp", clamp, "clamp the bound into the support");
    bound->add_flag("--no-cache", no_cache, "do not read or write the beta(n) cache");
    bound_support.attach(*bound);

    // beta-n
    auto* beta_n = app.add_subcommand("beta-n", "estimate the one-sided KS quantile beta(n)");
    std::size_t bn_n = 1;
    double bn_alpha = 0.05;
    std::size_t bn_mc = kDefaultBetaMcSamples;
    std::uint64_t bn_seed = 0;
    std::string bn_out;
    bool bn_no_cache = false;
    beta_n->add_option("--n", bn_n, "sample size")->required()->check(positive_count());
    beta_n->add_option("--alpha", bn_alpha, "confidence parameter")->check(open_unit_interval())
        ->capture_default_str();
    beta_n->add_option("--mc,--mc-samples", bn_mc, "Monte-Carlo draws L")->check(positive_count())
        ->capture_default_str();
    beta_n->add_option("--seed", bn_seed, "64-bit seed")->capture_default_str();
    beta_n->add_option("--out", bn_out, "CSV output path (default: stdout)");
    beta_n->add_flag("--no-cache", bn_no_cache, "do not read or write the beta(n) cache");

    // table
    auto* table = app.add_subcommand("table", "precompute bounds over a grid of T-levels");
    std::vector<double> grid;
    std::size_t tb_n = 0;
    double tb_alpha = 0.05;
    std::string tb_method = "new-mean";
    std::size_t tb_mc = kDefaultMcSamples;
    std::uint64_t tb_seed = 0;
    std::size_t tb_beta_mc = kDefaultBetaMcSamples;
    std::string tb_out;
    SupportFlags tb_support;
    table->add_option("--grid", grid, "sorted T-levels, comma-separated")->required()->delimiter(',');
    table->add_option("--n", tb_n, "sample size")->required()->check(positive_count());
    table->add_option("--alpha", tb_alpha, "confidence parameter")->check(open_unit_interval())
        ->capture_default_str();
    table->add_option("--method", tb_method, "new-anderson, new-l2 or new-mean")
        ->check(CLI::IsMember({"new-anderson", "new-l2", "new-mean"}))
        ->capture_default_str();
    table->add_option("--mc-samples", tb_mc, "Monte-Carlo draws l")->check(positive_count())->capture_default_str();
    table->add_option("--seed", tb_seed, "64-bit seed")->capture_default_str();
    table->add_option("--beta-mc-samples", tb_beta_mc, "Monte-Carlo draws for beta(n)")->check(positive_count())
        ->capture_default_str();
    table->add_option("--out", tb_out, "CSV output path")->required();
    tb_support.attach(*table);

    // simulate
    auto* simulate = app.add_subcommand("simulate", "run a simulation experiment from a config file");
    std::string config_path;
    std::string sim_out;
    simulate->add_option("--config", config_path, "experiment config (key = value lines)")->required();
    simulate->add_option("--out", sim_out, "CSV output path")->required();

    // demo-lognormal
    auto* demo = app.add_subcommand("demo-lognormal", "histogram of lognormal(0,1) sample means");
    std::size_t demo_n = 80;
    std::size_t demo_trials = 10'000;
    std::uint64_t demo_seed = 0;
    std::size_t demo_bins = 50;
    std::string demo_out;
    demo->add_option("--n", demo_n, "sample size")->check(positive_count())->capture_default_str();
    demo->add_option("--trials", demo_trials, "number of sample means")->check(positive_count())
        ->capture_default_str();
    demo->add_option("--seed", demo_seed, "64-bit seed")->capture_default_str();
    demo->add_option("--bins", demo_bins, "histogram bins")->check(positive_count())->capture_default_str();
    demo->add_option("--out", demo_out, "CSV output path")->required();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::CallForVersion&) {
        out << "meanbound 1.0.0\n";
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitInvalid;
    }

    try {
        if (bound->parsed()) {
            std::vector<double> values;
            if (data_path.empty()) {
                values = read_values(in, "stdin");
            } else {
                std::ifstream f(data_path);
                if (!f) detail::fail("--data: cannot open '", data_path, "'");
                values = read_values(f, "--data " + data_path);
            }
            const Sample x(std::move(values));
            const Method method = parse_method(method_name);
            SupportInterval support = bound_support.resolve();
            if (method == Method::clopper_pearson && !bound_support.given())
                support = SupportInterval::two_point(0.0, 1.0);
            if (!bound_support.given() && method != Method::clopper_pearson && method != Method::student_t)
                detail::fail("--support, --upper or --lower is required for method ", method_name);

            MethodOptions opts;
            opts.alpha = alpha;
            opts.side = parse_side(side_name);
            opts.mc_samples = mc_samples;
            opts.seed = seed;
            opts.safe_epsilon = safe_epsilon;
            opts.safe_sample_ceiling = safe_ceiling;
            opts.beta_mc_samples = beta_mc;
            opts.beta_seed = beta_seed.value_or(seed);
            if (!no_cache) opts.cache = BetaNCache::from_environment();
            BoundResult r = compute_bound(method, x, support, opts);
            if (clamp) r = clamp_to_support(r, support);
            out << (json ? result_json(r, x.size(), support) + "\n" : result_text(r));
            return kExitOk;
        }
        if (beta_n->parsed()) {
            std::optional<BetaNCache> cache;
            if (!bn_no_cache) cache = BetaNCache::from_environment();
            const BetaNEstimate est = cached_beta_n(bn_n, bn_alpha, bn_mc, bn_seed, cache);
            const std::string csv = std::string(BetaNCache::kHeader) + "\n" + BetaNCache::format_row(est) + "\n";
            if (bn_out.empty()) out << csv;
            else write_file(bn_out, csv);
            return kExitOk;
        }
        if (table->parsed()) {
            const SupportInterval support = tb_support.resolve();
            if (!support.has_upper()) detail::fail("--support or --upper is required for table");
            OrderingFunction T = OrderingFunction::mean();
            if (tb_method == "new-l2") {
                T = OrderingFunction::l2();
            } else if (tb_method == "new-anderson") {
                MethodOptions opts;
                opts.alpha = tb_alpha;
                opts.beta_mc_samples = tb_beta_mc;
                opts.beta_seed = tb_seed;
                opts.cache = BetaNCache::from_environment();
                T = OrderingFunction::anderson(resolve_envelope(tb_n, opts));
            }
            const BoundTable t = bound_table(grid, support, tb_alpha, T, tb_n, tb_mc, tb_seed);
            std::ostringstream os;
            t.write_csv(os);
            write_file(tb_out, os.str());
            return kExitOk;
        }
        if (simulate->parsed()) {
            std::ifstream f(config_path);
            if (!f) detail::fail("--config: cannot open '", config_path, "'");
            const ExperimentSpec spec = parse_experiment_config(f);
            const auto rows = run_experiment(spec, BetaNCache::from_environment());
            std::ostringstream os;
            write_experiment_csv(os, rows);
            write_file(sim_out, os.str());
            return kExitOk;
        }
        if (demo->parsed()) {
            const SkewDemo d = lognormal_skew_demo(demo_n, demo_trials, demo_seed, demo_bins);
            std::ostringstream os;
            write_histogram_csv(os, d.bins);
            write_file(demo_out, os.str());
            out << "n " << d.n << " trials " << d.trials << " skewness " << format_fixed(d.skewness) << " z "
                << format_fixed(d.z_score) << '\n';
            return kExitOk;
        }
    } catch (const OutputError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUnwritable;
    } catch (const InvalidArgument& e) {
        err << "error: " << e.what() << '\n';
        return kExitInvalid;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitFailure;
}

}  // namespace meanbound::cli
