// simharness.hpp
//
// Simulation protocol for comparing bounds: draw `trials` samples per sample
// size, compute every requested bound on each, and reduce to expected value,
// alpha-quantile or coverage rows. Trial i of size n always sees the same
// sample regardless of method or alpha; Monte-Carlo seeds are fresh per
// (n, alpha, method, trial).
#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "core.hpp"
#include "newbound.hpp"
#include "parallel.hpp"
#include "random.hpp"

namespace meanbound {

enum class DistributionKind { beta, uniform, binomial, poisson, lognormal };

class Distribution {
public:
    static Distribution beta(double a, double b) {
        if (!(a > 0.0 && b > 0.0)) detail::fail("beta parameters must be positive");
        return {DistributionKind::beta, a, b};
    }
    static Distribution uniform() { return {DistributionKind::uniform, 0.0, 1.0}; }
    static Distribution binomial(unsigned trials, double p) {
        if (trials < 1) detail::fail("binomial needs at least one trial");
        if (!(p >= 0.0 && p <= 1.0)) detail::fail("binomial p must lie in [0,1]");
        return {DistributionKind::binomial, static_cast<double>(trials), p};
    }
    static Distribution poisson(double lambda) {
        if (!(lambda > 0.0 && lambda <= 50.0)) detail::fail("poisson lambda must lie in (0, 50]");
        return {DistributionKind::poisson, lambda, 0.0};
    }
    static Distribution lognormal(double mu = 0.0, double sigma = 1.0) {
        if (!(sigma > 0.0)) detail::fail("lognormal sigma must be positive");
        return {DistributionKind::lognormal, mu, sigma};
    }

    /// Parses `beta(1,5)`, `uniform`, `uniform(0,1)`, `binomial(10,0.5)`, `poisson(2)`, `lognormal(0,1)`.
    static Distribution parse(std::string_view text) {
        std::string s;
        for (char c : text)
            if (!std::isspace(static_cast<unsigned char>(c))) s.push_back(c);
        const auto open = s.find('(');
        const std::string name = s.substr(0, open);
        std::vector<double> args;
        if (open != std::string::npos) {
            if (s.back() != ')') detail::fail("malformed distribution '", text, "'");
            std::istringstream in(s.substr(open + 1, s.size() - open - 2));
            std::string tok;
            while (std::getline(in, tok, ',')) args.push_back(parse_number(tok, text));
        }
        auto want = [&](std::size_t k) {
            if (args.size() != k) detail::fail("distribution '", name, "' takes ", k, " parameter(s)");
        };
        if (name == "beta") {
            want(2);
            return beta(args[0], args[1]);
        }
        if (name == "uniform") {
            if (!args.empty() && !(args.size() == 2 && args[0] == 0.0 && args[1] == 1.0))
                detail::fail("only uniform(0,1) is supported");
            return uniform();
        }
        if (name == "binomial") {
            want(2);
            if (args[0] != std::floor(args[0]) || args[0] < 1 || args[0] > 1e6)
                detail::fail("binomial trials must be a positive integer");
            return binomial(static_cast<unsigned>(args[0]), args[1]);
        }
        if (name == "poisson") {
            want(1);
            return poisson(args[0]);
        }
        if (name == "lognormal") {
            if (args.empty()) return lognormal();
            want(2);
            return lognormal(args[0], args[1]);
        }
        detail::fail("unknown distribution '", text, "' (expected beta, uniform, binomial, poisson or lognormal)");
    }

    [[nodiscard]] DistributionKind kind() const noexcept { return kind_; }

    [[nodiscard]] std::string name() const {
        switch (kind_) {
            case DistributionKind::beta: return "beta";
            case DistributionKind::uniform: return "uniform";
            case DistributionKind::binomial: return "binomial";
            case DistributionKind::poisson: return "poisson";
            case DistributionKind::lognormal: return "lognormal";
        }
        return "unknown";
    }

    /// Parameters joined by ';' so they fit in one CSV field.
    [[nodiscard]] std::string params() const {
        std::ostringstream os;
        os.precision(17);
        switch (kind_) {
            case DistributionKind::poisson: os << p1_; break;
            default: os << p1_ << ';' << p2_; break;
        }
        return os.str();
    }

    [[nodiscard]] std::string label() const {
        std::string p = params();
        std::replace(p.begin(), p.end(), ';', ',');
        return name() + "(" + p + ")";
    }

    [[nodiscard]] double sample(random::SplitMix64& rng) const {
        switch (kind_) {
            case DistributionKind::beta: return random::beta(rng, p1_, p2_);
            case DistributionKind::uniform: return random::uniform01(rng);
            case DistributionKind::binomial: return random::binomial(rng, static_cast<unsigned>(p1_), p2_);
            case DistributionKind::poisson: return random::poisson(rng, p1_);
            case DistributionKind::lognormal: return random::lognormal(rng, p1_, p2_);
        }
        throw InternalError("unreachable distribution kind");
    }

    [[nodiscard]] std::optional<double> true_mean() const {
        switch (kind_) {
            case DistributionKind::beta: return p1_ / (p1_ + p2_);
            case DistributionKind::uniform: return 0.5;
            case DistributionKind::binomial: return p1_ * p2_;
            case DistributionKind::poisson: return p1_;
            case DistributionKind::lognormal: return std::exp(p1_ + 0.5 * p2_ * p2_);
        }
        return std::nullopt;
    }

    /// Smallest interval holding every value the sampler can produce.
    [[nodiscard]] SupportInterval natural_support() const {
        switch (kind_) {
            case DistributionKind::beta:
            case DistributionKind::uniform: return SupportInterval::two_ended(0.0, 1.0);
            case DistributionKind::binomial:
                return p1_ == 1.0 ? SupportInterval::two_point(0.0, 1.0) : SupportInterval::two_ended(0.0, p1_);
            case DistributionKind::poisson:
            case DistributionKind::lognormal: return SupportInterval::lower_only(0.0);
        }
        throw InternalError("unreachable distribution kind");
    }

private:
    Distribution(DistributionKind kind, double p1, double p2) : kind_(kind), p1_(p1), p2_(p2) {}

    static double parse_number(const std::string& tok, std::string_view context) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(tok, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != tok.size()) detail::fail("bad number '", tok, "' in '", context, "'");
        return v;
    }

    DistributionKind kind_;
    double p1_;
    double p2_;
};

enum class Metric { expected_value, alpha_quantile, coverage };

inline std::string_view to_string(Metric m) {
    switch (m) {
        case Metric::expected_value: return "expected_value";
        case Metric::alpha_quantile: return "alpha_quantile";
        case Metric::coverage: return "coverage";
    }
    return "unknown";
}

inline Metric parse_metric(std::string_view s) {
    if (s == "expected_value") return Metric::expected_value;
    if (s == "alpha_quantile") return Metric::alpha_quantile;
    if (s == "coverage") return Metric::coverage;
    detail::fail("unknown metric '", s, "' (expected expected_value, alpha_quantile or coverage)");
}

struct ExperimentSpec {
    Distribution distribution = Distribution::uniform();
    /// Declared superset of the support; defaults to the distribution's natural support.
    std::optional<SupportInterval> support;
    std::vector<std::size_t> sample_sizes;
    std::vector<double> alphas{0.05};
    std::size_t trials = 10'000;
    std::vector<Method> methods;
    std::uint64_t seed = 0;
    std::vector<Metric> metrics{Metric::expected_value};
    Side side = Side::upper;
    std::size_t mc_samples = kDefaultMcSamples;
    std::size_t beta_mc_samples = kDefaultBetaMcSamples;

    [[nodiscard]] SupportInterval declared_support() const {
        return support ? *support : distribution.natural_support();
    }
};

struct ExperimentRow {
    std::string distribution;
    std::string params;
    std::size_t n = 0;
    double alpha = 0.0;
    std::string method;
    std::string metric;
    double value = 0.0;
    double stderr_ = 0.0;
    std::size_t trials = 0;
    std::uint64_t seed = 0;
};

inline constexpr const char* kExperimentCsvHeader = "distribution,params,n,alpha,method,metric,value,stderr,trials,seed";

inline void write_experiment_csv(std::ostream& out, const std::vector<ExperimentRow>& rows) {
    const auto old = out.precision(17);
    out << kExperimentCsvHeader << '\n';
    for (const auto& r : rows)
        out << r.distribution << ',' << r.params << ',' << r.n << ',' << r.alpha << ',' << r.method << ','
            << r.metric << ',' << r.value << ',' << r.stderr_ << ',' << r.trials << ',' << r.seed << '\n';
    out.precision(old);
}

inline void validate(const ExperimentSpec& spec) {
    if (spec.trials < 1) detail::fail("trials must be at least 1");
    if (spec.sample_sizes.empty()) detail::fail("sample_sizes must be nonempty");
    if (spec.methods.empty()) detail::fail("methods must be nonempty");
    if (spec.metrics.empty()) detail::fail("metric must be nonempty");
    if (spec.alphas.empty()) detail::fail("alpha must be nonempty");
    for (double a : spec.alphas) detail::require_alpha(a);
    if (spec.mc_samples < 1) detail::fail("mc_samples must be at least 1");
    for (std::size_t n : spec.sample_sizes)
        if (n < 1) detail::fail("sample sizes must be positive");
    const SupportInterval declared = spec.declared_support();
    if (!spec.distribution.natural_support().subset_of(declared))
        detail::fail("declared support ", declared.describe(), " does not contain the support of ",
                     spec.distribution.label(), " ", spec.distribution.natural_support().describe());
    if (spec.side == Side::upper && !declared.has_upper())
        detail::fail("upper bounds need a finite upper support end; ", spec.distribution.label(),
                     " only admits lower bounds here");
    if (spec.side == Side::lower && !declared.has_lower())
        detail::fail("lower bounds need a finite lower support end");
    for (Method m : spec.methods) {
        const bool two_ended_only = m == Method::hoeffding || m == Method::maurer_pontil;
        if (two_ended_only && !declared.is_two_ended())
            detail::fail(to_string(m), " needs a two-ended declared support");
        if (m == Method::clopper_pearson && !(declared == SupportInterval::two_point(0.0, 1.0)))
            detail::fail("clopper-pearson needs the two-point support {0,1}");
        if ((m == Method::maurer_pontil || m == Method::student_t) &&
            *std::min_element(spec.sample_sizes.begin(), spec.sample_sizes.end()) < 2)
            detail::fail(to_string(m), " needs n >= 2");
    }
    if (std::find(spec.metrics.begin(), spec.metrics.end(), Metric::coverage) != spec.metrics.end() &&
        !spec.distribution.true_mean())
        detail::fail("coverage needs an analytic mean for ", spec.distribution.label());
}

namespace detail {

inline ExperimentRow reduce(const ExperimentSpec& spec, std::size_t n, double alpha, Method method, Metric metric,
                            const std::vector<double>& bounds) {
    ExperimentRow row;
    row.distribution = spec.distribution.name();
    row.params = spec.distribution.params();
    row.n = n;
    row.alpha = alpha;
    row.method = std::string(to_string(method));
    row.metric = std::string(to_string(metric));
    row.trials = bounds.size();
    row.seed = spec.seed;
    const double count = static_cast<double>(bounds.size());
    switch (metric) {
        case Metric::expected_value: {
            double sum = 0.0;
            for (double b : bounds) sum += b;
            const double mean = sum / count;
            double ss = 0.0;
            for (double b : bounds) ss += (b - mean) * (b - mean);
            row.value = mean;
            row.stderr_ = bounds.size() > 1 ? std::sqrt(ss / (count - 1.0) / count) : 0.0;
            break;
        }
        case Metric::alpha_quantile: {
            std::vector<double> sorted(bounds);
            std::sort(sorted.begin(), sorted.end());
            const double p = spec.side == Side::upper ? alpha : 1.0 - alpha;
            const std::size_t rank = quantile_rank(p, sorted.size());
            row.value = sorted[rank - 1];
            // Half-width of the distribution-free order-statistic band around the rank.
            const double spread = std::sqrt(count * p * (1.0 - p));
            const auto lo = static_cast<std::size_t>(std::max(1.0, static_cast<double>(rank) - spread));
            const auto hi = static_cast<std::size_t>(std::min(count, static_cast<double>(rank) + spread));
            row.stderr_ = 0.5 * (sorted[hi - 1] - sorted[lo - 1]);
            break;
        }
        case Metric::coverage: {
            const double mu = *spec.distribution.true_mean();
            std::size_t covered = 0;
            for (double b : bounds)
                if (spec.side == Side::upper ? b >= mu : b <= mu) ++covered;
            const double c = static_cast<double>(covered) / count;
            row.value = c;
            row.stderr_ = std::sqrt(c * (1.0 - c) / count);
            break;
        }
    }
    return row;
}

}  // namespace detail

/// The shared sample of trial `trial` at size n.
inline Sample experiment_sample(const ExperimentSpec& spec, std::size_t n, std::size_t trial) {
    random::SplitMix64 rng(random::derive_seed(spec.seed, 0, n, trial));
    std::vector<double> values(n);
    for (double& v : values) v = spec.distribution.sample(rng);
    return Sample(std::move(values));
}

/// Rows ordered by (n, alpha, method, metric) in configuration order.
inline std::vector<ExperimentRow> run_experiment(const ExperimentSpec& spec,
                                                 const std::optional<BetaNCache>& cache = std::nullopt) {
    validate(spec);
    const SupportInterval support = spec.declared_support();
    std::vector<ExperimentRow> rows;
    for (std::size_t n : spec.sample_sizes) {
        std::vector<Sample> samples;
        samples.reserve(spec.trials);
        for (std::size_t i = 0; i < spec.trials; ++i) {
            samples.push_back(experiment_sample(spec, n, i));
            for (double v : samples.back().sorted())
                if (!support.contains(v))
                    detail::fail("drawn value ", v, " lies outside the declared support ", support.describe());
        }
        for (std::size_t ai = 0; ai < spec.alphas.size(); ++ai) {
            const double alpha = spec.alphas[ai];
            for (std::size_t mi = 0; mi < spec.methods.size(); ++mi) {
                const Method method = spec.methods[mi];
                MethodOptions opts;
                opts.alpha = alpha;
                opts.side = spec.side;
                opts.mc_samples = spec.mc_samples;
                opts.beta_mc_samples = spec.beta_mc_samples;
                opts.beta_seed = random::derive_seed(spec.seed, 1, n, ai);
                opts.cache = cache;
                if (needs_envelope(method)) opts.envelope = resolve_envelope(n, opts);

                std::vector<double> bounds(spec.trials);
                parallel_for(
                    spec.trials,
                    [&](std::size_t begin, std::size_t end) {
                        MethodOptions local = opts;
                        for (std::size_t i = begin; i < end; ++i) {
                            local.seed = random::derive_seed(spec.seed, 2 + mi, n, i * spec.alphas.size() + ai);
                            bounds[i] = compute_bound(method, samples[i], support, local).value;
                        }
                    },
                    2);
                for (Metric metric : spec.metrics) rows.push_back(detail::reduce(spec, n, alpha, method, metric, bounds));
            }
        }
    }
    return rows;
}

/// Parses `key = value` lines; `#` starts a comment. Keys:
///   distribution    beta(a,b) | uniform | binomial(m,p) | poisson(lambda) | lognormal(mu,sigma)
///   support         "A B" with -inf / inf for a missing end, or "{0,1}" for two-point data
///   sample_sizes    comma-separated positive integers
///   alpha           comma-separated values in (0,1)
///   trials          positive integer
///   methods         comma-separated method names
///   metric          comma-separated: expected_value, alpha_quantile, coverage
///   side            upper | lower
///   seed            unsigned 64-bit integer
///   mc_samples      Monte-Carlo draws per new bound
///   beta_mc_samples Monte-Carlo draws for beta(n)
inline ExperimentSpec parse_experiment_config(std::istream& in) {
    ExperimentSpec spec;
    bool have_distribution = false;
    bool have_methods = false;
    bool have_sizes = false;
    std::string line;
    std::size_t line_no = 0;

    auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return std::string();
        const auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
    };
    auto split = [&](const std::string& s) {
        std::vector<std::string> out;
        std::istringstream is(s);
        std::string tok;
        while (std::getline(is, tok, ',')) {
            tok = trim(tok);
            if (!tok.empty()) out.push_back(tok);
        }
        return out;
    };
    auto to_unsigned = [&](const std::string& s, const std::string& key) -> std::uint64_t {
        std::size_t used = 0;
        std::uint64_t v = 0;
        try {
            if (!s.empty() && s[0] == '-') throw std::invalid_argument("negative");
            v = std::stoull(s, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != s.size()) detail::fail("line ", line_no, ": '", key, "' needs a non-negative integer");
        return v;
    };
    auto to_double = [&](const std::string& s, const std::string& key) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(s, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != s.size()) detail::fail("line ", line_no, ": '", key, "' needs a number");
        return v;
    };

    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) detail::fail("line ", line_no, ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key == "distribution") {
            spec.distribution = Distribution::parse(value);
            have_distribution = true;
        } else if (key == "support") {
            std::string compact;
            for (char c : value)
                if (!std::isspace(static_cast<unsigned char>(c))) compact.push_back(c);
            if (compact == "{0,1}") {
                spec.support = SupportInterval::two_point(0.0, 1.0);
                continue;
            }
            std::istringstream is(value);
            std::string a, b, extra;
            if (!(is >> a >> b) || (is >> extra)) detail::fail("line ", line_no, ": support needs two endpoints 'A B'");
            const bool lo_inf = a == "-inf";
            const bool hi_inf = b == "inf" || b == "+inf";
            if (lo_inf && hi_inf) detail::fail("line ", line_no, ": support needs at least one finite end");
            if (lo_inf) spec.support = SupportInterval::upper_only(to_double(b, key));
            else if (hi_inf) spec.support = SupportInterval::lower_only(to_double(a, key));
            else spec.support = SupportInterval::two_ended(to_double(a, key), to_double(b, key));
        } else if (key == "sample_sizes") {
            spec.sample_sizes.clear();
            for (const auto& t : split(value)) spec.sample_sizes.push_back(to_unsigned(t, key));
            have_sizes = true;
        } else if (key == "alpha") {
            spec.alphas.clear();
            for (const auto& t : split(value)) spec.alphas.push_back(to_double(t, key));
        } else if (key == "trials") {
            spec.trials = to_unsigned(value, key);
        } else if (key == "methods") {
            spec.methods.clear();
            for (const auto& t : split(value)) spec.methods.push_back(parse_method(t));
            have_methods = true;
        } else if (key == "metric" || key == "metrics") {
            spec.metrics.clear();
            for (const auto& t : split(value)) spec.metrics.push_back(parse_metric(t));
        } else if (key == "side") {
            spec.side = parse_side(value);
        } else if (key == "seed") {
            spec.seed = to_unsigned(value, key);
        } else if (key == "mc_samples") {
            spec.mc_samples = to_unsigned(value, key);
        } else if (key == "beta_mc_samples") {
            spec.beta_mc_samples = to_unsigned(value, key);
        } else {
            detail::fail("line ", line_no, ": unknown key '", key, "'");
        }
    }
    if (!have_distribution) detail::fail("config is missing 'distribution'");
    if (!have_sizes) detail::fail("config is missing 'sample_sizes'");
    if (!have_methods) detail::fail("config is missing 'methods'");
    validate(spec);
    return spec;
}

// ---- lognormal sample-mean skew ------------------------------------------------

struct HistogramBin {
    double lower;
    double upper;
    std::size_t count;
};

struct SkewDemo {
    std::size_t n = 0;
    std::size_t trials = 0;
    std::vector<HistogramBin> bins;
    double skewness = 0.0;  // adjusted Fisher-Pearson coefficient
    double skewness_stderr = 0.0;
    double z_score = 0.0;
};

inline constexpr const char* kHistogramCsvHeader = "bin_lower,bin_upper,count";

inline void write_histogram_csv(std::ostream& out, const std::vector<HistogramBin>& bins) {
    const auto old = out.precision(17);
    out << kHistogramCsvHeader << '\n';
    for (const auto& b : bins) out << b.lower << ',' << b.upper << ',' << b.count << '\n';
    out.precision(old);
}

/// Distribution of the mean of n lognormal(0,1) draws over `trials` repetitions.
inline SkewDemo lognormal_skew_demo(std::size_t n, std::size_t trials, std::uint64_t seed, std::size_t bin_count = 50) {
    if (n < 1) detail::fail("n must be at least 1");
    if (trials < 3) detail::fail("the skew demo needs at least 3 trials");
    if (bin_count < 1) detail::fail("the histogram needs at least one bin");
    const Distribution dist = Distribution::lognormal();
    std::vector<double> means(trials);
    parallel_for(trials, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            random::SplitMix64 rng(random::derive_seed(seed, 0, n, i));
            double s = 0.0;
            for (std::size_t k = 0; k < n; ++k) s += dist.sample(rng);
            means[i] = s / static_cast<double>(n);
        }
    });

    SkewDemo demo;
    demo.n = n;
    demo.trials = trials;
    const auto [lo_it, hi_it] = std::minmax_element(means.begin(), means.end());
    const double lo = *lo_it;
    const double hi = *hi_it;
    const double width = hi > lo ? (hi - lo) / static_cast<double>(bin_count) : 1.0;
    demo.bins.resize(bin_count);
    for (std::size_t b = 0; b < bin_count; ++b)
        demo.bins[b] = {lo + width * static_cast<double>(b), lo + width * static_cast<double>(b + 1), 0};
    for (double m : means) {
        auto b = static_cast<std::size_t>((m - lo) / width);
        demo.bins[std::min(b, bin_count - 1)].count++;
    }

    const double N = static_cast<double>(trials);
    double mean = 0.0;
    for (double m : means) mean += m;
    mean /= N;
    double m2 = 0.0, m3 = 0.0;
    for (double m : means) {
        const double d = m - mean;
        m2 += d * d;
        m3 += d * d * d;
    }
    m2 /= N;
    m3 /= N;
    const double g1 = m2 > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0;
    demo.skewness = g1 * std::sqrt(N * (N - 1.0)) / (N - 2.0);
    demo.skewness_stderr = std::sqrt(6.0 * N * (N - 1.0) / ((N - 2.0) * (N + 1.0) * (N + 3.0)));
    demo.z_score = demo.skewness / demo.skewness_stderr;
    return demo;
}

}  // namespace meanbound
