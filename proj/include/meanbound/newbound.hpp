// newbound.hpp
//
// The Monte-Carlo bound: the ceil((1-alpha) l)-th smallest of l maximized
// induced means b(x, U^j), its safety-margin variant, precomputed bound
// tables, and a dispatcher over every bound in the library.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "classical.hpp"
#include "core.hpp"
#include "envelopes.hpp"
#include "ordering.hpp"
#include "parallel.hpp"
#include "random.hpp"

namespace meanbound {

inline constexpr std::size_t kDefaultMcSamples = 10'000;
inline constexpr std::size_t kDefaultSafeSampleCeiling = 100'000'000;

struct BoundRequest {
    Sample x;
    SupportInterval support;
    double alpha = 0.05;
    OrderingFunction T = OrderingFunction::mean();
    std::size_t mc_samples = kDefaultMcSamples;
    std::uint64_t seed = 0;
    Side side = Side::upper;
    std::optional<double> safe_epsilon;
    /// Safe mode refuses plans needing more draws than this.
    std::size_t safe_sample_ceiling = kDefaultSafeSampleCeiling;
};

struct SafePlan {
    double gamma = 0.0;
    /// Saturates at SIZE_MAX when the exact count does not fit.
    std::size_t required_samples = 1;
    /// Unrounded sample count, kept so oversized plans can be reported.
    double required_samples_exact = 1.0;
    double epsilon = 0.0;
    double phi = 0.0;
};

/// gamma = min(alpha, (eps / (3 (s_D - phi)))^n), l = ceil(-ln(gamma/2)/2 * (3 (s_D - phi)/eps)^n).
/// Evaluated in log space so large n does not underflow.
inline SafePlan safe_plan(const Sample& x, const SupportInterval& support, const OrderingFunction& T, double alpha,
                          double epsilon) {
    detail::require_alpha(alpha);
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) detail::fail("safe epsilon must be positive, got ", epsilon);
    SafePlan plan;
    plan.epsilon = epsilon;
    plan.phi = sup_first_order_statistic(x, T, support);
    const double gap = support.upper_value() - plan.phi;
    if (!(gap > 0.0)) {
        plan.gamma = alpha;
        return plan;
    }
    const double n = static_cast<double>(x.size());
    const double log_ratio = n * std::log(epsilon / (3.0 * gap));
    const double log_gamma = std::min(std::log(alpha), log_ratio);
    plan.gamma = log_ratio >= std::log(alpha) ? alpha : std::exp(log_ratio);
    const double log_count = std::log((std::numbers::ln2 - log_gamma) / 2.0) - log_ratio;
    plan.required_samples_exact = std::exp(log_count);
    const double count = std::ceil(plan.required_samples_exact);
    if (!(count < static_cast<double>(std::numeric_limits<std::size_t>::max())))
        plan.required_samples = std::numeric_limits<std::size_t>::max();
    else
        plan.required_samples = std::max<std::size_t>(1, static_cast<std::size_t>(count));
    return plan;
}

/// b(x, U^j) for j = 0..l-1, indexed by draw.
inline std::vector<double> draw_maxima(const InducedMeanMaximizer& maximizer, std::size_t mc_samples,
                                       std::uint64_t seed) {
    std::vector<double> maxima(mc_samples);
    parallel_for(mc_samples, [&](std::size_t begin, std::size_t end) {
        MaximizerWorkspace ws;
        std::vector<double> u(maximizer.size());
        for (std::size_t j = begin; j < end; ++j) {
            random::sorted_uniform_draw(seed, j, u);
            maxima[j] = maximizer.value(u, ws);
        }
    });
    return maxima;
}

/// The ceil(p * count)-th smallest entry; reorders `values`.
inline double order_statistic_at(std::vector<double>& values, double p) {
    const std::size_t rank = detail::quantile_rank(std::min(p, 1.0), values.size());
    auto nth = values.begin() + static_cast<std::ptrdiff_t>(rank - 1);
    std::nth_element(values.begin(), nth, values.end());
    return *nth;
}

namespace detail {

inline std::string new_method_name(const OrderingFunction& T) { return "new-" + std::string(T.name()); }

inline BoundResult new_upper_bound(const Sample& x, const SupportInterval& support, const BoundRequest& req) {
    const auto maximizer = InducedMeanMaximizer::for_sample(req.T, x, support);
    BoundResult r;
    r.method = new_method_name(req.T);
    r.alpha = req.alpha;
    std::size_t l = req.mc_samples;
    double p = 1.0 - req.alpha;
    std::optional<SafePlan> plan;
    if (req.safe_epsilon) {
        plan = safe_plan(x, support, req.T, req.alpha, *req.safe_epsilon);
        if (plan->required_samples > req.safe_sample_ceiling)
            fail("safe mode needs ", plan->required_samples_exact, " Monte-Carlo samples, above the ceiling of ",
                 req.safe_sample_ceiling, " (raise --safe-epsilon or the ceiling)");
        if (plan->required_samples > l) {
            r.warnings.push_back("mc_samples raised from " + std::to_string(l) + " to " +
                                 std::to_string(plan->required_samples) + " for safe mode");
            r.diagnostics["mc_samples_requested"] = static_cast<double>(l);
            l = plan->required_samples;
        }
        p = 1.0 - req.alpha + plan->gamma;
        r.diagnostics["safe_gamma"] = plan->gamma;
        r.diagnostics["safe_required_samples"] = static_cast<double>(plan->required_samples);
        r.diagnostics["safe_epsilon"] = plan->epsilon;
        r.diagnostics["phi"] = plan->phi;
    }
    auto maxima = draw_maxima(maximizer, l, req.seed);
    r.value = order_statistic_at(maxima, p);
    if (plan) r.value += plan->epsilon / 3.0;
    r.diagnostics["mc_samples"] = static_cast<double>(l);
    r.diagnostics["quantile_rank"] = static_cast<double>(quantile_rank(std::min(p, 1.0), l));
    r.diagnostics["t_level"] = maximizer.level();
    r.diagnostics["effective_lower"] = maximizer.effective_lower();
    r.diagnostics["clamped_one_ended"] = maximizer.status() == MaximizerStatus::clamped_one_ended ? 1.0 : 0.0;
    return r;
}

}  // namespace detail

/// Monte-Carlo bound of a request. Lower bounds are -UCB(-x) on the negated support.
inline BoundResult new_bound(const BoundRequest& req) {
    detail::require_alpha(req.alpha);
    if (req.mc_samples < 1) detail::fail("mc_samples must be at least 1");
    req.x.require_within(req.support);
    if (req.side == Side::upper) {
        if (!req.support.has_upper()) detail::fail("an upper bound needs a finite upper support end");
        return detail::new_upper_bound(req.x, req.support, req);
    }
    return lower_bound_via_negation(
        [&](const Sample& nx, const SupportInterval& ns) { return detail::new_upper_bound(nx, ns, req); }, req.x,
        req.support);
}

/// Precomputed bounds indexed by T-level, for samples of a fixed size.
class BoundTable {
public:
    struct Entry {
        double t_value;
        double bound;
    };

    static constexpr const char* kHeader = "t_value,bound,alpha,n,method,l,seed";

    BoundTable(std::vector<Entry> entries, double alpha, std::size_t n, std::string method, std::size_t l,
               std::uint64_t seed)
        : entries_(std::move(entries)), alpha_(alpha), n_(n), method_(std::move(method)), l_(l), seed_(seed) {}

    [[nodiscard]] const std::vector<Entry>& entries() const noexcept { return entries_; }
    [[nodiscard]] double alpha() const noexcept { return alpha_; }
    [[nodiscard]] std::size_t n() const noexcept { return n_; }
    [[nodiscard]] const std::string& method() const noexcept { return method_; }

    /// Bound at the smallest grid point >= t (conservative).
    [[nodiscard]] double lookup(double t) const {
        for (const auto& e : entries_)
            if (e.t_value >= t || detail::close_rel(e.t_value, t)) return e.bound;
        detail::fail("T-level ", t, " lies above the table's largest grid point ", entries_.back().t_value);
    }

    /// Bound for a sample, evaluating T on it.
    [[nodiscard]] double lookup(const OrderingFunction& T, const Sample& x, const SupportInterval& support) const {
        if (x.size() != n_) detail::fail("table was built for n = ", n_, " but the sample has ", x.size());
        return lookup(eval_T(T, x, support));
    }

    void write_csv(std::ostream& out) const {
        const auto old = out.precision(17);
        out << kHeader << '\n';
        for (const auto& e : entries_)
            out << e.t_value << ',' << e.bound << ',' << alpha_ << ',' << n_ << ',' << method_ << ',' << l_ << ','
                << seed_ << '\n';
        out.precision(old);
    }

private:
    std::vector<Entry> entries_;
    double alpha_;
    std::size_t n_;
    std::string method_;
    std::size_t l_;
    std::uint64_t seed_;
};

/// Upper bound for every T-level on a sorted grid. All grid points share the uniform draws.
inline BoundTable bound_table(const std::vector<double>& grid, const SupportInterval& support, double alpha,
                              const OrderingFunction& T, std::size_t n, std::size_t mc_samples, std::uint64_t seed) {
    if (grid.empty()) detail::fail("bound table grid must be nonempty");
    if (!std::is_sorted(grid.begin(), grid.end())) detail::fail("bound table grid must be sorted");
    detail::require_alpha(alpha);
    if (mc_samples < 1) detail::fail("mc_samples must be at least 1");
    std::vector<BoundTable::Entry> entries;
    entries.reserve(grid.size());
    for (double t : grid) {
        const InducedMeanMaximizer maximizer(T, t, n, support);
        auto maxima = draw_maxima(maximizer, mc_samples, seed);
        entries.push_back({t, order_statistic_at(maxima, 1.0 - alpha)});
    }
    return BoundTable(std::move(entries), alpha, n, detail::new_method_name(T), mc_samples, seed);
}

/// True when b_D(x, u^j) <= b_D+(x, u^j) on every shared draw and at the quantile.
/// T is evaluated on each support's own s_D.
inline bool check_superset_monotonicity(const Sample& x, const SupportInterval& D, const SupportInterval& D_plus,
                                        const OrderingFunction& T, double alpha, std::size_t mc_samples,
                                        std::uint64_t seed) {
    if (!D.subset_of(D_plus)) detail::fail("support ", D.describe(), " is not contained in ", D_plus.describe());
    detail::require_alpha(alpha);
    auto inner = draw_maxima(InducedMeanMaximizer::for_sample(T, x, D), mc_samples, seed);
    auto outer = draw_maxima(InducedMeanMaximizer::for_sample(T, x, D_plus), mc_samples, seed);
    const double tol = 1e-9 * std::max({1.0, std::abs(D_plus.upper_value()), std::abs(x.min())});
    for (std::size_t j = 0; j < mc_samples; ++j)
        if (inner[j] > outer[j] + tol) return false;
    return order_statistic_at(inner, 1.0 - alpha) <= order_statistic_at(outer, 1.0 - alpha) + tol;
}

// ---- method dispatch --------------------------------------------------------

enum class Method { new_anderson, new_l2, new_mean, anderson, hoeffding, maurer_pontil, student_t, clopper_pearson };

inline constexpr Method kAllMethods[] = {Method::new_anderson, Method::new_l2,        Method::new_mean,
                                         Method::anderson,     Method::hoeffding,     Method::maurer_pontil,
                                         Method::student_t,    Method::clopper_pearson};

inline std::string_view to_string(Method m) {
    switch (m) {
        case Method::new_anderson: return "new-anderson";
        case Method::new_l2: return "new-l2";
        case Method::new_mean: return "new-mean";
        case Method::anderson: return "anderson";
        case Method::hoeffding: return "hoeffding";
        case Method::maurer_pontil: return "maurer-pontil";
        case Method::student_t: return "student-t";
        case Method::clopper_pearson: return "clopper-pearson";
    }
    return "unknown";
}

inline Method parse_method(std::string_view s) {
    for (Method m : kAllMethods)
        if (to_string(m) == s) return m;
    detail::fail("unknown method '", s,
                 "' (expected new-anderson, new-l2, new-mean, anderson, hoeffding, maurer-pontil, student-t or "
                 "clopper-pearson)");
}

/// Student-t is the only bound here without a coverage guarantee.
inline bool has_coverage_guarantee(Method m) noexcept { return m != Method::student_t; }

inline bool needs_envelope(Method m) noexcept { return m == Method::new_anderson || m == Method::anderson; }

struct MethodOptions {
    double alpha = 0.05;
    Side side = Side::upper;
    std::size_t mc_samples = kDefaultMcSamples;
    std::uint64_t seed = 0;
    std::optional<double> safe_epsilon;
    std::size_t safe_sample_ceiling = kDefaultSafeSampleCeiling;
    /// Envelope for the Anderson-based methods; estimated from the fields below when absent.
    std::optional<Envelope> envelope;
    std::size_t beta_mc_samples = kDefaultBetaMcSamples;
    std::uint64_t beta_seed = 0;
    std::optional<BetaNCache> cache;
};

/// Anderson's envelope u^And for n at the options' alpha.
inline Envelope resolve_envelope(std::size_t n, const MethodOptions& opts, BoundResult* diagnostics_sink = nullptr) {
    if (opts.envelope) {
        if (opts.envelope->size() != n)
            detail::fail("envelope has length ", opts.envelope->size(), " but the sample has ", n);
        return *opts.envelope;
    }
    const BetaNEstimate est = cached_beta_n(n, opts.alpha, opts.beta_mc_samples, opts.beta_seed, opts.cache);
    if (diagnostics_sink) {
        diagnostics_sink->diagnostics["beta_n"] = est.value;
        diagnostics_sink->diagnostics["beta_mc_samples"] = static_cast<double>(est.mc_samples);
    }
    return anderson_envelope(est);
}

namespace detail {

inline BoundResult classical_upper(Method m, const Sample& x, const SupportInterval& support, double alpha,
                                   const Envelope* envelope) {
    switch (m) {
        case Method::anderson: return anderson_ucb(x, support, *envelope);
        case Method::hoeffding: return hoeffding_ucb(x, support, alpha);
        case Method::maurer_pontil: return maurer_pontil_ucb(x, support, alpha);
        case Method::student_t: return student_t_ucb(x, alpha);
        case Method::clopper_pearson: return clopper_pearson_ucb(x, alpha);
        default: break;
    }
    throw InternalError("not a classical method");
}

}  // namespace detail

/// Any bound in the library, upper or lower, on one sample.
inline BoundResult compute_bound(Method m, const Sample& x, const SupportInterval& support, const MethodOptions& opts) {
    detail::require_alpha(opts.alpha);
    BoundResult env_info;
    std::optional<Envelope> envelope;
    if (needs_envelope(m)) envelope = resolve_envelope(x.size(), opts, &env_info);

    BoundResult r;
    if (m == Method::new_anderson || m == Method::new_l2 || m == Method::new_mean) {
        OrderingFunction T = m == Method::new_anderson ? OrderingFunction::anderson(*envelope)
                             : m == Method::new_l2     ? OrderingFunction::l2()
                                                       : OrderingFunction::mean();
        r = new_bound(BoundRequest{x, support, opts.alpha, std::move(T), opts.mc_samples, opts.seed, opts.side,
                                   opts.safe_epsilon, opts.safe_sample_ceiling});
    } else if (m == Method::clopper_pearson) {
        x.require_within(SupportInterval::two_point(0.0, 1.0));
        if (opts.side == Side::upper) {
            r = clopper_pearson_ucb(x, opts.alpha);
        } else {
            // Negation followed by the shift that maps {-1, 0} back onto {0, 1}.
            r = clopper_pearson_ucb(x.affine(-1.0, 1.0), opts.alpha);
            r.value = 1.0 - r.value;
            r.side = Side::lower;
        }
    } else {
        x.require_within(support);
        const Envelope* env = envelope ? &*envelope : nullptr;
        auto upper = [&](const Sample& sx, const SupportInterval& ss) {
            return detail::classical_upper(m, sx, ss, opts.alpha, env);
        };
        if (opts.side == Side::upper) {
            r = upper(x, support);
        } else {
            r = lower_bound_via_negation(upper, x, support, m != Method::student_t);
        }
    }
    r.method = std::string(to_string(m));
    r.side = opts.side;
    for (const auto& [k, v] : env_info.diagnostics) r.diagnostics[k] = v;
    return r;
}

struct ConfidenceInterval {
    BoundResult lower;
    BoundResult upper;
};

/// Naive two-sided interval: LCB(alpha/2) and UCB(alpha/2) computed independently.
/// Coverage 1 - alpha follows from the union bound; nothing sharper is claimed.
/// A supplied envelope is dropped and re-estimated at alpha/2.
inline ConfidenceInterval confidence_interval(Method m, const Sample& x, const SupportInterval& support,
                                              MethodOptions opts) {
    opts.alpha /= 2.0;
    opts.envelope.reset();
    MethodOptions lo = opts;
    lo.side = Side::lower;
    MethodOptions hi = opts;
    hi.side = Side::upper;
    return {compute_bound(m, x, support, lo), compute_bound(m, x, support, hi)};
}

}  // namespace meanbound
