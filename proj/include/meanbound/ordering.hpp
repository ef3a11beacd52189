// ordering.hpp
//
// Ordering functions T and the inner optimization of the new bound:
//
//     b(x, u) = max { m(y, u) : T(y) <= T(x), y_(i) in D+, y_(1) <= ... <= y_(n) }.
//
// Writing y through its gaps g_k = y_(k+1) - y_(k) (with y_(n+1) = s_D) turns
// both linear orderings into the two-constraint problem
//
//     minimize  sum_k u_k g_k   s.t.  sum_k c_k g_k >= s_D - t,  sum_k g_k <= s_D - a,  g >= 0,
//
// where c = l for the Anderson functional and c_k = k/n for the sample mean.
// Its optimum is (s_D - a) times the lower convex hull of {(0,0), (c_k, u_k)}
// evaluated at (s_D - t)/(s_D - a), which is exact and O(n).
//
// For the l2 ordering the Lagrangian maximizer over the box-constrained order
// cone is the clipped isotonic regression of w/(2 lambda), w_k = u_k - u_(k-1).
// Isotonic regression is positively homogeneous, so a single PAVA pass gives
// the whole multiplier path and the active radius is found in closed form.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "core.hpp"

namespace meanbound {

enum class OrderingKind { anderson, l2, mean };

inline std::string_view to_string(OrderingKind k) {
    switch (k) {
        case OrderingKind::anderson: return "anderson";
        case OrderingKind::l2: return "l2";
        case OrderingKind::mean: return "mean";
    }
    return "unknown";
}

inline OrderingKind parse_ordering_kind(std::string_view s) {
    if (s == "anderson") return OrderingKind::anderson;
    if (s == "l2") return OrderingKind::l2;
    if (s == "mean") return OrderingKind::mean;
    detail::fail("unknown ordering function '", s, "' (expected anderson, l2 or mean)");
}

/// The scalar functional defining the sublevel set {y : T(y) <= T(x)}.
class OrderingFunction {
public:
    /// T(y) = m(y, l): Anderson's bound for the envelope l.
    static OrderingFunction anderson(Envelope envelope) {
        return OrderingFunction(OrderingKind::anderson, std::move(envelope));
    }
    /// T(y) = sum y_i^2 / n, on the caller's original coordinates.
    static OrderingFunction l2() { return OrderingFunction(OrderingKind::l2, std::nullopt); }
    /// T(y) = mean(y).
    static OrderingFunction mean() { return OrderingFunction(OrderingKind::mean, std::nullopt); }

    [[nodiscard]] OrderingKind kind() const noexcept { return kind_; }
    [[nodiscard]] std::string_view name() const noexcept { return to_string(kind_); }
    [[nodiscard]] bool is_linear() const noexcept { return kind_ != OrderingKind::l2; }

    [[nodiscard]] const Envelope& envelope() const {
        if (!envelope_) detail::fail("ordering function '", name(), "' carries no envelope");
        return *envelope_;
    }

    /// T evaluated on sorted coordinates; `upper` is s_D.
    [[nodiscard]] double eval_sorted(std::span<const double> sorted, double upper) const {
        const double n = static_cast<double>(sorted.size());
        switch (kind_) {
            case OrderingKind::anderson:
                if (envelope_->size() != sorted.size())
                    detail::fail("envelope has length ", envelope_->size(), " but the sample has ", sorted.size());
                return induced_mean_sorted(sorted, envelope_->levels(), upper);
            case OrderingKind::l2: {
                double ss = 0.0;
                for (double v : sorted) ss += v * v;
                return ss / n;
            }
            case OrderingKind::mean: {
                double s = 0.0;
                for (double v : sorted) s += v;
                return s / n;
            }
        }
        throw InternalError("unreachable ordering kind");
    }

private:
    OrderingFunction(OrderingKind kind, std::optional<Envelope> envelope)
        : kind_(kind), envelope_(std::move(envelope)) {}

    OrderingKind kind_;
    std::optional<Envelope> envelope_;
};

/// T(x). The Anderson functional needs a finite upper support end; l2 and mean do not.
inline double eval_T(const OrderingFunction& T, const Sample& x, const SupportInterval& support) {
    const double upper = T.kind() == OrderingKind::anderson ? support.upper_value()
                                                             : support.upper().value_or(0.0);
    return T.eval_sorted(x.sorted(), upper);
}

enum class MaximizerStatus { optimal, clamped_one_ended };

struct MaximizerSolution {
    double value = 0.0;
    std::vector<double> argmax;  // sorted y_(1..n)
    MaximizerStatus status = MaximizerStatus::optimal;
    bool certified_feasible = false;
};

/// Scratch buffers for the hot path; one per worker thread.
struct MaximizerWorkspace {
    std::vector<std::size_t> hull;
    std::vector<double> block_sum;
    std::vector<double> block_len;
    std::vector<double> iso;
    std::vector<double> weights;
    struct Event {
        double at;
        double z;
        bool to_upper;
    };
    std::vector<Event> events;
};

/// Solver for b(x, u) at a fixed T-level t. Construction does all the work
/// that does not depend on u, so one instance serves every Monte-Carlo draw.
class InducedMeanMaximizer {
public:
    InducedMeanMaximizer(const OrderingFunction& T, double level, std::size_t n, const SupportInterval& support)
        : kind_(T.kind()), n_(n), level_(level), upper_(support.upper_value()) {
        if (n < 1) detail::fail("maximizer needs n >= 1");
        if (!std::isfinite(level)) detail::fail("T-level must be finite");
        if (T.kind() == OrderingKind::anderson && T.envelope().size() != n)
            detail::fail("envelope has length ", T.envelope().size(), " but the sample has ", n);
        if (support.is_two_point()) {
            init_two_point(T, support);
        } else if (T.is_linear()) {
            init_linear(T, support);
        } else {
            init_l2(support);
        }
    }

    /// Solver for the sublevel set of the sample x.
    static InducedMeanMaximizer for_sample(const OrderingFunction& T, const Sample& x,
                                           const SupportInterval& support) {
        x.require_within(support);
        return InducedMeanMaximizer(T, eval_T(T, x, support), x.size(), support);
    }

    [[nodiscard]] std::size_t size() const noexcept { return n_; }
    [[nodiscard]] double level() const noexcept { return level_; }
    [[nodiscard]] double upper() const noexcept { return upper_; }
    /// Lower box bound actually used (clamped for one-ended support).
    [[nodiscard]] double effective_lower() const noexcept { return lower_; }
    [[nodiscard]] MaximizerStatus status() const noexcept { return status_; }

    /// b(x, u) for sorted u of length n.
    [[nodiscard]] double value(std::span<const double> u, MaximizerWorkspace& ws) const {
        switch (path_) {
            case Path::constant: return upper_;
            case Path::two_point: return two_point_value(u);
            case Path::linear: return linear_solve(u, ws, nullptr);
            case Path::l2: return l2_solve(u, ws, nullptr);
        }
        throw InternalError("unreachable maximizer path");
    }

    [[nodiscard]] double value(std::span<const double> u) const {
        MaximizerWorkspace ws;
        return value(u, ws);
    }

    /// Value together with a maximizing sorted vector and a feasibility certificate.
    [[nodiscard]] MaximizerSolution solve(std::span<const double> u) const {
        check_draw(u);
        MaximizerWorkspace ws;
        MaximizerSolution sol;
        sol.status = status_;
        sol.argmax.assign(n_, upper_);
        switch (path_) {
            case Path::constant: sol.value = upper_; break;
            case Path::two_point:
                sol.value = two_point_value(u);
                for (std::size_t i = 0; i + best_upper_count_ < n_; ++i) sol.argmax[i] = lower_;
                break;
            case Path::linear: sol.value = linear_solve(u, ws, &sol.argmax); break;
            case Path::l2: sol.value = l2_solve(u, ws, &sol.argmax); break;
        }
        sol.certified_feasible = certify(sol, u);
        return sol;
    }

    /// phi = sup of z_(1) over the feasible set.
    [[nodiscard]] double sup_first_order_statistic() const {
        switch (path_) {
            case Path::constant: return upper_;
            case Path::two_point: return best_upper_count_ == n_ ? upper_ : lower_;
            case Path::linear: return coeff_max_ > 0.0 ? std::max(lower_, upper_ - need_ / coeff_max_) : upper_;
            case Path::l2: return std::min(upper_, std::sqrt(std::max(0.0, level_)));
        }
        throw InternalError("unreachable maximizer path");
    }

    /// T on sorted coordinates with this problem's s_D.
    [[nodiscard]] double ordering_value(std::span<const double> sorted) const {
        switch (kind_) {
            case OrderingKind::anderson: return induced_mean_sorted(sorted, coeffs_, upper_);
            case OrderingKind::l2: {
                double ss = 0.0;
                for (double v : sorted) ss += v * v;
                return ss / static_cast<double>(n_);
            }
            case OrderingKind::mean: {
                double s = 0.0;
                for (double v : sorted) s += v;
                return s / static_cast<double>(n_);
            }
        }
        throw InternalError("unreachable ordering kind");
    }

private:
    enum class Path { constant, two_point, linear, l2 };

    [[nodiscard]] double scale() const noexcept {
        return std::max({1.0, std::abs(upper_), std::abs(lower_)});
    }

    void check_draw(std::span<const double> u) const {
        if (u.size() != n_) detail::fail("uniform draw has length ", u.size(), " but the problem has n = ", n_);
        for (std::size_t i = 0; i < u.size(); ++i) {
            if (!(u[i] >= 0.0 && u[i] <= 1.0)) detail::fail("uniform levels must lie in [0,1]");
            if (i > 0 && u[i] < u[i - 1]) detail::fail("uniform draw must be sorted");
        }
    }

    void init_linear(const OrderingFunction& T, const SupportInterval& support) {
        path_ = Path::linear;
        coeffs_.resize(n_);
        if (kind_ == OrderingKind::anderson) {
            const auto lv = T.envelope().levels();
            std::copy(lv.begin(), lv.end(), coeffs_.begin());
        } else {
            for (std::size_t k = 0; k < n_; ++k) coeffs_[k] = static_cast<double>(k + 1) / static_cast<double>(n_);
        }
        coeff_max_ = coeffs_.back();
        need_ = upper_ - level_;
        if (need_ <= 0.0 || coeff_max_ <= 0.0) {
            // Every y with y_(n) <= s_D is feasible, or T is constant: the optimum is s_D.
            if (need_ > 1e-12 * scale() && coeff_max_ <= 0.0)
                detail::fail("T-level ", level_, " is below the attainable range");
            path_ = Path::constant;
            lower_ = support.lower().value_or(upper_);
            return;
        }
        if (support.has_lower()) {
            lower_ = *support.lower();
        } else {
            // Below a* = s_D - (s_D - t)/c_(i0) the lower box bound is inactive.
            const double c_min = *std::find_if(coeffs_.begin(), coeffs_.end(), [](double c) { return c > 0.0; });
            lower_ = upper_ - need_ / c_min;
            status_ = MaximizerStatus::clamped_one_ended;
        }
        width_ = upper_ - lower_;
        if (!(width_ > 0.0)) throw InternalError("linear ordering: zero-width feasible box with positive need");
        if (need_ > width_ * coeff_max_ * (1.0 + 1e-12) + 1e-12 * scale())
            detail::fail("T-level ", level_, " is below the attainable range");
        target_ = std::min(need_ / width_, coeff_max_);
    }

    void init_l2(const SupportInterval& support) {
        path_ = Path::l2;
        if (level_ < 0.0) detail::fail("l2 level must be non-negative");
        radius_sq_ = level_ * static_cast<double>(n_);
        if (support.has_lower()) {
            lower_ = *support.lower();
        } else {
            lower_ = -std::sqrt(radius_sq_);
            status_ = MaximizerStatus::clamped_one_ended;
        }
        const double closest = std::max(lower_, std::min(upper_, 0.0));
        if (static_cast<double>(n_) * closest * closest > radius_sq_ * (1.0 + 1e-12))
            detail::fail("T-level ", level_, " is below the attainable range");
    }

    void init_two_point(const OrderingFunction& T, const SupportInterval& support) {
        path_ = Path::two_point;
        lower_ = support.lower_value();
        if (kind_ == OrderingKind::anderson) {
            const auto lv = T.envelope().levels();
            coeffs_.assign(lv.begin(), lv.end());
        }
        const double tol = 1e-12 * std::max({1.0, std::abs(level_), scale() * scale()});
        std::optional<std::size_t> best;
        std::vector<double> y(n_);
        for (std::size_t k = 0; k <= n_; ++k) {
            std::fill(y.begin(), y.end() - static_cast<std::ptrdiff_t>(k), lower_);
            std::fill(y.end() - static_cast<std::ptrdiff_t>(k), y.end(), upper_);
            if (ordering_value(y) <= level_ + tol) best = k;
        }
        if (!best) detail::fail("T-level ", level_, " is below the attainable range");
        best_upper_count_ = *best;
        if (best_upper_count_ == n_) path_ = Path::constant;
    }

    [[nodiscard]] double two_point_value(std::span<const double> u) const noexcept {
        if (best_upper_count_ == n_) return upper_;
        return upper_ - u[n_ - best_upper_count_ - 1] * (upper_ - lower_);
    }

    // Lower hull of (0,0), (c_k, u_k) evaluated at target_.
    double linear_solve(std::span<const double> u, MaximizerWorkspace& ws, std::vector<double>* argmax) const {
        auto& hull = ws.hull;
        hull.clear();
        // Index 0 is the origin; index k >= 1 is (c_{k-1}, u_{k-1}).
        auto px = [&](std::size_t i) { return i == 0 ? 0.0 : coeffs_[i - 1]; };
        auto py = [&](std::size_t i) { return i == 0 ? 0.0 : u[i - 1]; };
        hull.push_back(0);
        for (std::size_t i = 1; i <= n_; ++i) {
            if (px(i) == px(hull.back())) continue;  // same abscissa, larger or equal ordinate
            while (hull.size() >= 2) {
                const std::size_t a = hull[hull.size() - 2];
                const std::size_t b = hull.back();
                const double cross = (px(b) - px(a)) * (py(i) - py(a)) - (py(b) - py(a)) * (px(i) - px(a));
                if (cross > 0.0) break;
                hull.pop_back();
            }
            hull.push_back(i);
        }
        std::size_t j = 1;
        while (j < hull.size() && px(hull[j]) < target_) ++j;
        if (j == hull.size()) j = hull.size() - 1;
        const std::size_t left = hull[j - 1];
        const std::size_t right = hull[j];
        const double span_x = px(right) - px(left);
        const double theta = span_x > 0.0 ? std::clamp((target_ - px(left)) / span_x, 0.0, 1.0) : 1.0;
        const double gap_left = width_ * (1.0 - theta);
        const double gap_right = width_ * theta;
        const double cost = (left == 0 ? 0.0 : gap_left * py(left)) + gap_right * py(right);
        if (argmax) {
            std::vector<double> gaps(n_, 0.0);
            if (left != 0) gaps[left - 1] += gap_left;
            gaps[right - 1] += gap_right;
            double y = upper_;
            for (std::size_t k = n_; k-- > 0;) {
                y -= gaps[k];
                (*argmax)[k] = y;
            }
        }
        return upper_ - cost;
    }

    double l2_solve(std::span<const double> u, MaximizerWorkspace& ws, std::vector<double>* argmax) const {
        // Objective weights on sorted coordinates.
        auto& w = ws.weights;
        w.resize(n_);
        double prev = 0.0;
        for (std::size_t k = 0; k < n_; ++k) {
            w[k] = u[k] - prev;
            prev = u[k];
        }
        const double constant = upper_ * (1.0 - prev);

        // PAVA: nondecreasing least-squares fit z to w.
        auto& sum = ws.block_sum;
        auto& len = ws.block_len;
        sum.clear();
        len.clear();
        for (std::size_t k = 0; k < n_; ++k) {
            sum.push_back(w[k]);
            len.push_back(1.0);
            while (sum.size() >= 2 &&
                   sum[sum.size() - 2] * len.back() >= sum.back() * len[len.size() - 2]) {
                sum[sum.size() - 2] += sum.back();
                len[len.size() - 2] += len.back();
                sum.pop_back();
                len.pop_back();
            }
        }
        auto& z = ws.iso;
        z.resize(n_);
        {
            std::size_t k = 0;
            for (std::size_t b = 0; b < sum.size(); ++b) {
                const double v = std::max(0.0, sum[b] / len[b]);
                for (std::size_t r = 0; r < static_cast<std::size_t>(len[b]); ++r) z[k++] = v;
            }
        }

        // y(s) = clamp(s z, a, b); find the largest s with |y(s)|^2 <= R^2.
        const double a = lower_;
        const double b = upper_;
        auto clamp_ab = [&](double v) { return std::clamp(v, a, b); };
        double fixed = 0.0;  // sum of squares of clamped coordinates
        double free = 0.0;   // sum of z^2 over unclamped coordinates
        auto& events = ws.events;
        events.clear();
        for (std::size_t k = 0; k < n_; ++k) {
            const double zk = z[k];
            if (zk <= 0.0) {
                fixed += clamp_ab(0.0) * clamp_ab(0.0);
                continue;
            }
            if (b <= 0.0) {
                fixed += b * b;
                continue;
            }
            if (a > 0.0) {
                fixed += a * a;
                events.push_back({a / zk, zk, false});
            } else {
                free += zk * zk;
            }
            events.push_back({b / zk, zk, true});
        }
        std::sort(events.begin(), events.end(), [](const auto& l, const auto& r) { return l.at < r.at; });

        double s_star = std::numeric_limits<double>::infinity();
        for (const auto& e : events) {
            const double f_at = fixed + e.at * e.at * free;
            if (f_at > radius_sq_) {
                s_star = free > 0.0 ? std::sqrt(std::max(0.0, radius_sq_ - fixed) / free) : 0.0;
                break;
            }
            if (e.to_upper) {
                free -= e.z * e.z;
                fixed += b * b;
            } else {
                fixed -= a * a;
                free += e.z * e.z;
            }
        }

        double value = constant;
        for (std::size_t k = 0; k < n_; ++k) {
            double yk = 0.0;
            if (z[k] <= 0.0) yk = clamp_ab(0.0);
            else if (std::isinf(s_star)) yk = b;
            else yk = clamp_ab(s_star * z[k]);
            value += w[k] * yk;
            if (argmax) (*argmax)[k] = yk;
        }
        return value;
    }

    bool certify(const MaximizerSolution& sol, std::span<const double> u) const {
        const double tol = 1e-9 * scale();
        const auto& y = sol.argmax;
        for (std::size_t i = 0; i < n_; ++i) {
            if (y[i] < lower_ - tol || y[i] > upper_ + tol) return false;
            if (i > 0 && y[i] < y[i - 1] - tol) return false;
        }
        const double t_scale = kind_ == OrderingKind::l2 ? scale() * scale() : scale();
        if (ordering_value(y) > level_ + 1e-9 * t_scale) return false;
        std::vector<double> ys(y);
        std::sort(ys.begin(), ys.end());
        return std::abs(induced_mean_sorted(ys, u, upper_) - sol.value) <= tol;
    }

    OrderingKind kind_;
    std::size_t n_;
    double level_;
    double upper_;
    double lower_ = 0.0;
    MaximizerStatus status_ = MaximizerStatus::optimal;
    Path path_ = Path::constant;

    // linear
    std::vector<double> coeffs_;
    double coeff_max_ = 0.0;
    double need_ = 0.0;
    double width_ = 0.0;
    double target_ = 0.0;

    // l2
    double radius_sq_ = 0.0;

    // two-point
    std::size_t best_upper_count_ = 0;
};

/// b(x, u) with the maximizing sorted vector.
inline MaximizerSolution maximize_induced_mean(const Sample& x, const UniformDraw& u, const OrderingFunction& T,
                                               const SupportInterval& support) {
    if (u.size() != x.size()) detail::fail("uniform draw has length ", u.size(), " but the sample has ", x.size());
    return InducedMeanMaximizer::for_sample(T, x, support).solve(u.levels());
}

/// sup of z_(1) over {z : T(z) <= T(x)} within the support.
inline double sup_first_order_statistic(const Sample& x, const OrderingFunction& T, const SupportInterval& support) {
    return InducedMeanMaximizer::for_sample(T, x, support).sup_first_order_statistic();
}

}  // namespace meanbound
