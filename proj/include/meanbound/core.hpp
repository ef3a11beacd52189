// core.hpp
//
// Domain types shared by every bound: samples with cached order statistics,
// support intervals (possibly one-ended), level vectors (envelopes and sorted
// uniform draws) and the induced mean of a stairstep CDF.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace meanbound {

/// Thrown for any violated precondition on user-supplied input.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Thrown when a solver or estimator reaches a state its contract rules out.
class InternalError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

namespace detail {

template <typename... Parts>
[[noreturn]] inline void fail(const Parts&... parts) {
    std::ostringstream os;
    (os << ... << parts);
    throw InvalidArgument(os.str());
}

inline void require_alpha(double alpha, const char* what = "alpha") {
    if (!(alpha > 0.0 && alpha < 1.0)) fail(what, " must lie in (0,1), got ", alpha);
}

// Relative comparison used by the invariant checks.
inline bool close_rel(double a, double b, double rel = 1e-12) {
    const double scale = std::max({1.0, std::abs(a), std::abs(b)});
    return std::abs(a - b) <= rel * scale;
}

// 1-based rank ceil(p * count), guarded against products such as 0.95 * 2000
// landing one ulp above an integer.
inline std::size_t quantile_rank(double p, std::size_t count) {
    const double raw = p * static_cast<double>(count);
    const double nearest = std::round(raw);
    double r = std::abs(raw - nearest) <= 1e-9 * std::max(1.0, raw) ? nearest : std::ceil(raw);
    r = std::clamp(r, 1.0, static_cast<double>(count));
    return static_cast<std::size_t>(r);
}

}  // namespace detail

/// Known superset D+ of the distribution's support. A missing endpoint means
/// the support is unbounded on that side. With `two_point` set the only
/// possible values are the two endpoints (Bernoulli-type data).
class SupportInterval {
public:
    SupportInterval() = default;

    static SupportInterval two_ended(double lower, double upper) {
        return SupportInterval(lower, upper, false);
    }
    static SupportInterval upper_only(double upper) {
        return SupportInterval(std::nullopt, upper, false);
    }
    static SupportInterval lower_only(double lower) {
        return SupportInterval(lower, std::nullopt, false);
    }
    static SupportInterval two_point(double lower, double upper) {
        return SupportInterval(lower, upper, true);
    }

    [[nodiscard]] const std::optional<double>& lower() const noexcept { return lower_; }
    [[nodiscard]] const std::optional<double>& upper() const noexcept { return upper_; }
    [[nodiscard]] bool has_lower() const noexcept { return lower_.has_value(); }
    [[nodiscard]] bool has_upper() const noexcept { return upper_.has_value(); }
    [[nodiscard]] bool is_two_ended() const noexcept { return has_lower() && has_upper(); }
    [[nodiscard]] bool is_two_point() const noexcept { return two_point_; }

    /// s_D; throws when the upper end is unbounded.
    [[nodiscard]] double upper_value() const {
        if (!upper_) detail::fail("support has no finite upper end");
        return *upper_;
    }
    [[nodiscard]] double lower_value() const {
        if (!lower_) detail::fail("support has no finite lower end");
        return *lower_;
    }

    [[nodiscard]] bool contains(double v) const noexcept {
        if (two_point_) return v == *lower_ || v == *upper_;
        if (lower_ && v < *lower_) return false;
        if (upper_ && v > *upper_) return false;
        return true;
    }

    /// Support of -X.
    [[nodiscard]] SupportInterval negated() const {
        SupportInterval s;
        if (upper_) s.lower_ = -*upper_;
        if (lower_) s.upper_ = -*lower_;
        s.two_point_ = two_point_;
        return s;
    }

    /// c*X + d for c > 0.
    [[nodiscard]] SupportInterval affine(double scale, double shift) const {
        if (!(scale > 0.0)) detail::fail("affine map needs a positive scale");
        SupportInterval s = *this;
        if (s.lower_) *s.lower_ = scale * *s.lower_ + shift;
        if (s.upper_) *s.upper_ = scale * *s.upper_ + shift;
        return s;
    }

    /// True when this interval lies inside `other`.
    [[nodiscard]] bool subset_of(const SupportInterval& other) const noexcept {
        if (other.two_point_ && !two_point_) return false;
        if (other.lower_ && (!lower_ || *lower_ < *other.lower_)) return false;
        if (other.upper_ && (!upper_ || *upper_ > *other.upper_)) return false;
        if (other.two_point_) return lower_ == other.lower_ && upper_ == other.upper_;
        return true;
    }

    [[nodiscard]] std::string describe() const {
        std::ostringstream os;
        os.precision(17);
        if (two_point_) {
            os << '{' << *lower_ << ',' << *upper_ << '}';
            return os.str();
        }
        os << (lower_ ? "[" : "(");
        if (lower_) os << *lower_; else os << "-inf";
        os << ',';
        if (upper_) os << *upper_; else os << "inf";
        os << (upper_ ? "]" : ")");
        return os.str();
    }

    friend bool operator==(const SupportInterval&, const SupportInterval&) = default;

private:
    SupportInterval(std::optional<double> lower, std::optional<double> upper, bool two_point)
        : lower_(lower), upper_(upper), two_point_(two_point) {
        if (lower_ && !std::isfinite(*lower_)) detail::fail("support lower end must be finite or absent");
        if (upper_ && !std::isfinite(*upper_)) detail::fail("support upper end must be finite or absent");
        // a == b is accepted as the degenerate zero-width support.
        if (lower_ && upper_ && *lower_ > *upper_) detail::fail("support lower end must not exceed the upper end");
        if (two_point_ && (!lower_ || !upper_ || *lower_ == *upper_))
            detail::fail("two-point support needs two distinct finite endpoints");
    }

    std::optional<double> lower_;
    std::optional<double> upper_;
    bool two_point_ = false;
};

/// An i.i.d. sample; order statistics are computed once on construction.
class Sample {
public:
    explicit Sample(std::vector<double> values) : values_(std::move(values)) {
        if (values_.empty()) detail::fail("sample must contain at least one value");
        for (double v : values_)
            if (!std::isfinite(v)) detail::fail("sample values must be finite");
        sorted_ = values_;
        std::sort(sorted_.begin(), sorted_.end());
    }
    Sample(std::initializer_list<double> values) : Sample(std::vector<double>(values)) {}

    [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }
    [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
    /// Ascending order statistics x_(1) <= ... <= x_(n).
    [[nodiscard]] std::span<const double> sorted() const noexcept { return sorted_; }
    [[nodiscard]] double min() const noexcept { return sorted_.front(); }
    [[nodiscard]] double max() const noexcept { return sorted_.back(); }

    [[nodiscard]] double mean() const noexcept {
        return std::accumulate(sorted_.begin(), sorted_.end(), 0.0) / static_cast<double>(size());
    }

    /// Unbiased sample variance (denominator n-1); zero for n == 1.
    [[nodiscard]] double variance() const noexcept {
        if (size() < 2) return 0.0;
        const double m = mean();
        double ss = 0.0;
        for (double v : sorted_) ss += (v - m) * (v - m);
        return ss / static_cast<double>(size() - 1);
    }

    [[nodiscard]] Sample negated() const {
        std::vector<double> v(values_.begin(), values_.end());
        for (double& e : v) e = -e;
        return Sample(std::move(v));
    }

    [[nodiscard]] Sample affine(double scale, double shift) const {
        std::vector<double> v(values_.begin(), values_.end());
        for (double& e : v) e = scale * e + shift;
        return Sample(std::move(v));
    }

    /// Throws unless every value lies in the support.
    void require_within(const SupportInterval& support) const {
        for (double v : sorted_)
            if (!support.contains(v))
                detail::fail("sample value ", v, " lies outside the declared support ", support.describe());
    }

private:
    std::vector<double> values_;
    std::vector<double> sorted_;
};

/// A multiset of levels in [0,1], kept in ascending order.
class Levels {
public:
    Levels() = default;
    explicit Levels(std::vector<double> levels) : levels_(std::move(levels)) {
        for (double v : levels_)
            if (!(v >= 0.0 && v <= 1.0)) detail::fail("levels must lie in [0,1], got ", v);
        std::sort(levels_.begin(), levels_.end());
    }

    [[nodiscard]] std::size_t size() const noexcept { return levels_.size(); }
    [[nodiscard]] std::span<const double> levels() const noexcept { return levels_; }
    [[nodiscard]] double operator[](std::size_t i) const noexcept { return levels_[i]; }

    friend bool operator==(const Levels&, const Levels&) = default;

private:
    std::vector<double> levels_;
};

/// Levels of a stairstep CDF lower bound, tagged with the alpha it was built for.
class Envelope {
public:
    Envelope(std::vector<double> levels, double alpha, bool guaranteed = true)
        : levels_(std::move(levels)), alpha_(alpha), guaranteed_(guaranteed) {}

    [[nodiscard]] std::size_t size() const noexcept { return levels_.size(); }
    [[nodiscard]] std::span<const double> levels() const noexcept { return levels_.levels(); }
    [[nodiscard]] double alpha() const noexcept { return alpha_; }
    /// False when the construction is outside the range where it is a valid CDF lower bound.
    [[nodiscard]] bool guaranteed() const noexcept { return guaranteed_; }

    /// 1-based index of the smallest positive level, or 0 if every level is zero.
    [[nodiscard]] std::size_t first_positive_index() const noexcept {
        const auto lv = levels();
        for (std::size_t i = 0; i < lv.size(); ++i)
            if (lv[i] > 0.0) return i + 1;
        return 0;
    }

private:
    Levels levels_;
    double alpha_;
    bool guaranteed_;
};

/// Sorted draw of n i.i.d. Uniform(0,1) values.
class UniformDraw {
public:
    explicit UniformDraw(std::vector<double> levels) : levels_(std::move(levels)) {}

    [[nodiscard]] std::size_t size() const noexcept { return levels_.size(); }
    [[nodiscard]] std::span<const double> levels() const noexcept { return levels_.levels(); }

private:
    Levels levels_;
};

/// Induced mean on sorted coordinates: s_D - sum_i l_(i) (x_(i+1) - x_(i)), x_(n+1) = s_D.
/// No validation; callers guarantee sortedness and matching lengths.
inline double induced_mean_sorted(std::span<const double> sorted_x, std::span<const double> sorted_levels,
                                  double upper) noexcept {
    const std::size_t n = sorted_x.size();
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double next = i + 1 < n ? sorted_x[i + 1] : upper;
        acc += sorted_levels[i] * (next - sorted_x[i]);
    }
    return upper - acc;
}

/// Same quantity written as the mean of the stairstep distribution,
/// sum_{i=1}^{n+1} x_(i) (l_(i) - l_(i-1)) with l_(0) = 0, l_(n+1) = 1.
inline double induced_mean_mass_form(std::span<const double> sorted_x, std::span<const double> sorted_levels,
                                     double upper) noexcept {
    const std::size_t n = sorted_x.size();
    double acc = 0.0;
    double prev = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        acc += sorted_x[i] * (sorted_levels[i] - prev);
        prev = sorted_levels[i];
    }
    return acc + upper * (1.0 - prev);
}

namespace detail {

inline void check_induced_mean_args(const Sample& x, std::span<const double> levels,
                                    const SupportInterval& support) {
    if (levels.size() != x.size())
        fail("level vector has length ", levels.size(), " but the sample has ", x.size());
    const double upper = support.upper_value();
    if (x.max() > upper) fail("sample value ", x.max(), " exceeds the support upper end ", upper);
}

}  // namespace detail

/// m_D(x, l) for an envelope or a uniform draw.
template <typename LevelsLike>
double induced_mean(const Sample& x, const LevelsLike& levels, const SupportInterval& support) {
    detail::check_induced_mean_args(x, levels.levels(), support);
    return induced_mean_sorted(x.sorted(), levels.levels(), support.upper_value());
}

template <typename LevelsLike>
double induced_mean_mass_form(const Sample& x, const LevelsLike& levels, const SupportInterval& support) {
    detail::check_induced_mean_args(x, levels.levels(), support);
    return induced_mean_mass_form(x.sorted(), levels.levels(), support.upper_value());
}

/// Partial order on samples: z_(i) <= y_(i) for every i.
inline bool precedes(const Sample& z, const Sample& y) {
    if (z.size() != y.size()) detail::fail("precedes needs samples of equal length");
    const auto zs = z.sorted();
    const auto ys = y.sorted();
    for (std::size_t i = 0; i < zs.size(); ++i)
        if (zs[i] > ys[i]) return false;
    return true;
}

}  // namespace meanbound
