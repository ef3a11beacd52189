// classical.hpp
//
// Baseline confidence bounds on the mean: Hoeffding, Maurer & Pontil,
// Student-t, Anderson (for a given envelope) and Clopper-Pearson, plus the
// negation adapter that turns any upper bound into a lower bound.
//
// Values are raw; nothing here clamps a bound to the support (Hoeffding can
// exceed the upper end). Use clamp_to_support() to opt in.
#pragma once

#include <cmath>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "core.hpp"
#include "special.hpp"

namespace meanbound {

enum class Side { upper, lower };

inline std::string_view to_string(Side s) { return s == Side::upper ? "upper" : "lower"; }

inline Side parse_side(std::string_view s) {
    if (s == "upper") return Side::upper;
    if (s == "lower") return Side::lower;
    detail::fail("unknown side '", s, "' (expected upper or lower)");
}

struct BoundResult {
    double value = 0.0;
    std::string method;
    Side side = Side::upper;
    double alpha = 0.0;
    std::map<std::string, double> diagnostics;
    std::vector<std::string> warnings;
};

namespace detail {

inline void require_two_ended(const Sample& x, const SupportInterval& support, const char* method) {
    if (!support.is_two_ended()) fail(method, " needs a two-ended support");
    x.require_within(support);
}

inline BoundResult make_result(double value, std::string method, double alpha) {
    BoundResult r;
    r.value = value;
    r.method = std::move(method);
    r.alpha = alpha;
    return r;
}

}  // namespace detail

/// mean + (b - a) sqrt(ln(1/alpha) / (2n)).
inline BoundResult hoeffding_ucb(const Sample& x, const SupportInterval& support, double alpha) {
    detail::require_alpha(alpha);
    detail::require_two_ended(x, support, "hoeffding");
    const double range = support.upper_value() - support.lower_value();
    const double margin = range * std::sqrt(std::log(1.0 / alpha) / (2.0 * static_cast<double>(x.size())));
    auto r = detail::make_result(x.mean() + margin, "hoeffding", alpha);
    if (alpha > 0.5) r.warnings.emplace_back("alpha > 0.5");
    return r;
}

/// mean + 7(b-a) ln(2/alpha) / (3(n-1)) + sqrt(2 var ln(2/alpha) / n), var unbiased.
inline BoundResult maurer_pontil_ucb(const Sample& x, const SupportInterval& support, double alpha) {
    detail::require_alpha(alpha);
    if (x.size() < 2) detail::fail("maurer-pontil needs n >= 2");
    detail::require_two_ended(x, support, "maurer-pontil");
    const double n = static_cast<double>(x.size());
    const double range = support.upper_value() - support.lower_value();
    const double log_term = std::log(2.0 / alpha);
    const double value = x.mean() + 7.0 * range * log_term / (3.0 * (n - 1.0)) +
                         std::sqrt(2.0 * x.variance() * log_term / n);
    return detail::make_result(value, "maurer-pontil", alpha);
}

/// mean + sqrt(var / n) t_{1-alpha, n-1}. No coverage guarantee.
inline BoundResult student_t_ucb(const Sample& x, double alpha) {
    detail::require_alpha(alpha);
    if (x.size() < 2) detail::fail("student-t needs n >= 2");
    const double n = static_cast<double>(x.size());
    const double var = x.variance();
    double value = x.mean();
    if (var > 0.0) value += std::sqrt(var / n) * special::student_t_quantile(1.0 - alpha, n - 1.0);
    return detail::make_result(value, "student-t", alpha);
}

/// Induced mean of the sample under the envelope. Ignores any lower support end.
inline BoundResult anderson_ucb(const Sample& x, const SupportInterval& support, const Envelope& envelope) {
    const double value = induced_mean(x, envelope, support);
    auto r = detail::make_result(value, "anderson", envelope.alpha());
    if (!envelope.guaranteed()) r.warnings.emplace_back("envelope carries no coverage guarantee at this alpha");
    return r;
}

/// Q(1-alpha, Beta(n-p+1, p)) with p the number of zeros; 1 when p = 0.
inline BoundResult clopper_pearson_ucb(const Sample& x, double alpha) {
    detail::require_alpha(alpha);
    std::size_t zeros = 0;
    for (double v : x.sorted()) {
        if (v == 0.0) ++zeros;
        else if (v != 1.0) detail::fail("clopper-pearson needs values in {0,1}, got ", v);
    }
    const double n = static_cast<double>(x.size());
    const double p = static_cast<double>(zeros);
    const double value = zeros == 0 ? 1.0 : special::beta_quantile(1.0 - alpha, n - p + 1.0, p);
    auto r = detail::make_result(value, "clopper-pearson", alpha);
    r.diagnostics["zeros"] = p;
    return r;
}

/// -UCB(-x, [-b, -a]). `upper_bound` is any callable (Sample, SupportInterval) -> BoundResult.
/// The negated support must have a finite upper end unless `needs_support` is false.
template <typename UpperBound>
BoundResult lower_bound_via_negation(UpperBound&& upper_bound, const Sample& x, const SupportInterval& support,
                                     bool needs_support = true) {
    if (needs_support && !support.has_lower())
        detail::fail("a lower bound needs a finite lower support end");
    BoundResult r = upper_bound(x.negated(), support.negated());
    r.value = -r.value;
    r.side = Side::lower;
    return r;
}

/// Opt-in clamp of a bound into the support.
inline BoundResult clamp_to_support(BoundResult r, const SupportInterval& support) {
    if (support.has_upper() && r.value > *support.upper()) r.value = *support.upper();
    if (support.has_lower() && r.value < *support.lower()) r.value = *support.lower();
    return r;
}

}  // namespace meanbound
