// envelopes.hpp
//
// CDF lower-bound envelopes: Monte-Carlo estimation of the one-sided
// Kolmogorov-Smirnov quantile beta(n), Anderson's equal-width envelope and the
// closed-form DKW envelope. Estimates can be cached in a CSV file.
#pragma once

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "core.hpp"
#include "parallel.hpp"
#include "random.hpp"

namespace meanbound {

inline constexpr std::size_t kDefaultBetaMcSamples = 1'000'000;

struct BetaNEstimate {
    std::size_t n = 0;
    double alpha = 0.0;
    double value = 0.0;
    std::size_t mc_samples = 0;
    std::uint64_t seed = 0;
    /// Half-width of the distribution-free order-statistic interval
    /// (ranks k -/+ sqrt(L p (1-p))) around the estimate; 0 when not computed.
    double standard_error = 0.0;
};

/// One-sided KS statistic of draw `stream`: max_i (i/n - U_(i)).
/// Uses the same substreams as the bound's Monte-Carlo loop, so an envelope
/// built from (seed, L) is exact for the empirical measure of those L draws.
inline double ks_statistic_of_draw(std::uint64_t seed, std::uint64_t stream, std::span<double> scratch) {
    random::sorted_uniform_draw(seed, stream, scratch);
    const double n = static_cast<double>(scratch.size());
    double best = -1.0;
    for (std::size_t i = 0; i < scratch.size(); ++i)
        best = std::max(best, static_cast<double>(i + 1) / n - scratch[i]);
    return best;
}

/// The ceil((1-alpha) L)-th smallest of L simulated one-sided KS statistics.
inline BetaNEstimate estimate_beta_n(std::size_t n, double alpha, std::size_t mc_samples, std::uint64_t seed) {
    if (n < 1) detail::fail("beta(n) needs n >= 1");
    detail::require_alpha(alpha);
    if (mc_samples < 1) detail::fail("beta(n) needs at least one Monte-Carlo sample");

    std::vector<double> stats(mc_samples);
    parallel_for(mc_samples, [&](std::size_t begin, std::size_t end) {
        std::vector<double> scratch(n);
        for (std::size_t j = begin; j < end; ++j) stats[j] = ks_statistic_of_draw(seed, j, scratch);
    });
    std::sort(stats.begin(), stats.end());

    const double p = 1.0 - alpha;
    const std::size_t rank = detail::quantile_rank(p, mc_samples);
    BetaNEstimate est{n, alpha, stats[rank - 1], mc_samples, seed, 0.0};

    const double spread = std::sqrt(static_cast<double>(mc_samples) * p * alpha);
    const auto lo = static_cast<std::size_t>(std::max(1.0, static_cast<double>(rank) - spread));
    const auto hi = static_cast<std::size_t>(std::min(static_cast<double>(mc_samples), static_cast<double>(rank) + spread));
    est.standard_error = 0.5 * (stats[hi - 1] - stats[lo - 1]);
    est.value = std::clamp(est.value, 0.0, 1.0);
    return est;
}

/// l_i = max{0, i/n - beta}.
inline Envelope anderson_envelope(std::size_t n, double beta_n, double alpha = 0.0) {
    if (n < 1) detail::fail("envelope needs n >= 1");
    if (!(beta_n >= 0.0 && beta_n <= 1.0)) detail::fail("beta(n) must lie in [0,1], got ", beta_n);
    std::vector<double> levels(n);
    for (std::size_t i = 0; i < n; ++i)
        levels[i] = std::max(0.0, static_cast<double>(i + 1) / static_cast<double>(n) - beta_n);
    return Envelope(std::move(levels), alpha);
}

inline Envelope anderson_envelope(const BetaNEstimate& est) {
    return anderson_envelope(est.n, est.value, est.alpha);
}

/// sqrt(ln(1/alpha) / (2n)).
inline double dkw_margin(std::size_t n, double alpha) {
    return std::sqrt(std::log(1.0 / alpha) / (2.0 * static_cast<double>(n)));
}

/// l_i = max{0, i/n - sqrt(ln(1/alpha)/(2n))}. Valid as a CDF lower bound for
/// alpha <= 0.5; larger alpha is accepted and marked as not guaranteed.
inline Envelope dkw_envelope(std::size_t n, double alpha) {
    if (n < 1) detail::fail("envelope needs n >= 1");
    detail::require_alpha(alpha);
    const double margin = dkw_margin(n, alpha);
    std::vector<double> levels(n);
    for (std::size_t i = 0; i < n; ++i)
        levels[i] = std::max(0.0, static_cast<double>(i + 1) / static_cast<double>(n) - margin);
    return Envelope(std::move(levels), alpha, alpha <= 0.5);
}

/// CSV cache of beta(n) estimates keyed by (n, alpha, mc_samples, seed).
/// File: <dir>/beta_n_cache.csv with header `n,alpha,mc_samples,seed,beta_n`.
class BetaNCache {
public:
    static constexpr const char* kHeader = "n,alpha,mc_samples,seed,beta_n";
    static constexpr const char* kFileName = "beta_n_cache.csv";

    explicit BetaNCache(std::filesystem::path dir) : path_(std::move(dir) / kFileName) {}

    /// MEANBOUND_CACHE_DIR, else $XDG_CACHE_HOME/meanbound, else ~/.cache/meanbound.
    static std::optional<BetaNCache> from_environment() {
        if (const char* dir = std::getenv("MEANBOUND_CACHE_DIR"); dir && *dir) return BetaNCache(dir);
        if (const char* xdg = std::getenv("XDG_CACHE_HOME"); xdg && *xdg)
            return BetaNCache(std::filesystem::path(xdg) / "meanbound");
        if (const char* home = std::getenv("HOME"); home && *home)
            return BetaNCache(std::filesystem::path(home) / ".cache" / "meanbound");
        return std::nullopt;
    }

    [[nodiscard]] const std::filesystem::path& path() const noexcept { return path_; }

    [[nodiscard]] std::optional<BetaNEstimate> lookup(std::size_t n, double alpha, std::size_t mc_samples,
                                                      std::uint64_t seed) const {
        std::ifstream in(path_);
        if (!in) return std::nullopt;
        std::string line;
        std::getline(in, line);
        if (line != kHeader) return std::nullopt;
        while (std::getline(in, line)) {
            std::istringstream row(line);
            BetaNEstimate e;
            char c1 = 0, c2 = 0, c3 = 0, c4 = 0;
            if (!(row >> e.n >> c1 >> e.alpha >> c2 >> e.mc_samples >> c3 >> e.seed >> c4 >> e.value)) continue;
            if (e.n == n && e.alpha == alpha && e.mc_samples == mc_samples && e.seed == seed) return e;
        }
        return std::nullopt;
    }

    /// Appends an entry; failures to write are ignored (the cache is optional).
    void store(const BetaNEstimate& e) const {
        std::error_code ec;
        std::filesystem::create_directories(path_.parent_path(), ec);
        const bool fresh = !std::filesystem::exists(path_, ec);
        std::ofstream out(path_, std::ios::app);
        if (!out) return;
        if (fresh) out << kHeader << '\n';
        out << format_row(e) << '\n';
    }

    static std::string format_row(const BetaNEstimate& e) {
        std::ostringstream os;
        os.precision(17);
        os << e.n << ',' << e.alpha << ',' << e.mc_samples << ',' << e.seed << ',' << e.value;
        return os.str();
    }

private:
    std::filesystem::path path_;
};

/// estimate_beta_n with an optional cache in front of it.
inline BetaNEstimate cached_beta_n(std::size_t n, double alpha, std::size_t mc_samples, std::uint64_t seed,
                                   const std::optional<BetaNCache>& cache) {
    if (cache) {
        if (auto hit = cache->lookup(n, alpha, mc_samples, seed)) return *hit;
    }
    BetaNEstimate est = estimate_beta_n(n, alpha, mc_samples, seed);
    if (cache) cache->store(est);
    return est;
}

}  // namespace meanbound
