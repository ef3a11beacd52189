// Acceptance suite: one PASS/FAIL line per primary criterion.
//
// The default profile runs the coverage criterion at 10,000 trials.
// MEANBOUND_ACCEPTANCE_PROFILE=ci runs it at 1,000 trials against the looser threshold.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "meanbound/meanbound.hpp"
#include "oracles.hpp"

using namespace meanbound;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

const SupportInterval unit = SupportInterval::two_ended(0, 1);

bool full_profile() {
    const char* p = std::getenv("MEANBOUND_ACCEPTANCE_PROFILE");
    return !(p && std::string(p) == "ci");
}

std::string fmt(double v, int digits = 6) {
    std::ostringstream os;
    os.precision(digits);
    os << v;
    return os.str();
}

int failures = 0;

void criterion(const std::string& name, double budget_seconds, const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::string timing = fmt(secs, 3) + " s";
    if (budget_seconds > 0) {
        timing += " of " + fmt(budget_seconds, 4) + " s budget";
        if (secs > budget_seconds) {
            o.pass = false;
            o.detail += "; over the runtime budget";
        }
    }
    if (!o.pass) ++failures;
    std::printf("%s %s: %s [%s]\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(), timing.c_str());
    std::fflush(stdout);
}

/// Random samples cycling through a few shapes on [0,1].
Sample random_sample(random::SplitMix64& rng, std::size_t n, std::size_t which) {
    static const Distribution shapes[] = {Distribution::uniform(), Distribution::beta(1, 5), Distribution::beta(5, 1),
                                          Distribution::beta(0.5, 0.5)};
    const Distribution& d = shapes[which % 4];
    std::vector<double> v(n);
    for (double& e : v) e = d.sample(rng);
    return Sample(std::move(v));
}

std::vector<double> sorted_uniforms(random::SplitMix64& rng, std::size_t n) {
    std::vector<double> v(n);
    for (double& e : v) e = random::uniform01(rng);
    std::sort(v.begin(), v.end());
    return v;
}

BoundRequest request(Sample x, SupportInterval d, OrderingFunction T, std::size_t l, std::uint64_t seed,
                     double alpha = 0.05) {
    return BoundRequest{std::move(x), d, alpha, std::move(T), l, seed};
}

const ExperimentRow& row_of(const std::vector<ExperimentRow>& rows, std::string_view method) {
    for (const auto& r : rows)
        if (r.method == method) return r;
    throw std::runtime_error("missing row for " + std::string(method));
}

}  // namespace

int main() {
    const bool full = full_profile();
    std::printf("acceptance profile: %s\n", full ? "full" : "ci");

    criterion("closed-form n=1", 30, [] {
        const double v = new_bound(request(Sample{0.5}, unit, OrderingFunction::mean(), 1'000'000, 2024)).value;
        return Outcome{std::abs(v - 0.975) <= 0.001, "bound " + fmt(v) + ", expected 0.975 +- 0.001"};
    });

    criterion("clopper-pearson equivalence", 120, [] {
        const auto bern = SupportInterval::two_point(0, 1);
        double worst = 0.0;
        for (double alpha : {0.05, 0.1})
            for (std::size_t n = 1; n <= 8; ++n)
                for (std::size_t zeros = 0; zeros <= n; ++zeros) {
                    std::vector<double> v(n, 1.0);
                    for (std::size_t i = 0; i < zeros; ++i) v[i] = 0.0;
                    const double ours =
                        new_bound(request(Sample(v), bern, OrderingFunction::mean(), 100'000, 31 * n + zeros, alpha))
                            .value;
                    const double closed = zeros == 0 ? 1.0
                                                     : oracle::beta_quantile(1.0 - alpha, static_cast<double>(n - zeros + 1),
                                                                             static_cast<double>(zeros));
                    worst = std::max(worst, std::abs(ours - closed));
                }
        return Outcome{worst <= 0.005, "max |new - beta quantile| = " + fmt(worst) + " (tolerance 0.005)"};
    });

    // Shared by the two dominance criteria: 500 samples, n in 2..10, l = 2000.
    struct DomCase {
        Sample x;
        double ours;
        double anderson;
        double anderson_dkw;
        double hoeffding;
    };
    std::vector<DomCase> dom;
    criterion("dominance over anderson", 600, [&] {
        const std::size_t l = 2000;
        random::SplitMix64 rng(77);
        double worst = -INFINITY;
        for (std::size_t i = 0; i < 500; ++i) {
            const std::size_t n = 2 + i % 9;
            const std::uint64_t seed = 5000 + n;
            // The envelope is estimated on the same draws as the bound.
            const auto env = anderson_envelope(estimate_beta_n(n, 0.05, l, seed));
            Sample x = random_sample(rng, n, i / 9);
            const double ours = new_bound(request(x, unit, OrderingFunction::anderson(env), l, seed)).value;
            const double a = anderson_ucb(x, unit, env).value;
            const double a_dkw = anderson_ucb(x, unit, dkw_envelope(n, 0.05)).value;
            const double h = hoeffding_ucb(x, unit, 0.05).value;
            worst = std::max(worst, ours - a);
            dom.push_back({std::move(x), ours, a, a_dkw, h});
        }
        return Outcome{worst <= 1e-9, "max (new - anderson) over 500 samples = " + fmt(worst) + " (must be <= 1e-9)"};
    });

    criterion("dominance over hoeffding", 0, [&] {
        std::size_t checked = 0, new_fail = 0, dkw_fail = 0;
        for (const auto& c : dom) {
            if (c.x.size() < 3) continue;
            ++checked;
            if (!(c.ours < c.hoeffding)) ++new_fail;
            if (!(c.anderson_dkw < c.hoeffding)) ++dkw_fail;
        }
        return Outcome{checked > 0 && new_fail == 0 && dkw_fail == 0,
                       std::to_string(checked) + " samples with n >= 3: new >= hoeffding on " +
                           std::to_string(new_fail) + ", anderson(dkw) >= hoeffding on " + std::to_string(dkw_fail)};
    });

    criterion("coverage", full ? 3600 : 360, [full] {
        const std::size_t trials = full ? 10'000 : 1'000;
        const double threshold = full ? 0.05 + 3.0 * std::sqrt(0.05 * 0.95 / 10'000.0) : 0.071;
        double worst = 0.0;
        std::string worst_cell;
        for (const auto& dist : {Distribution::beta(1, 5), Distribution::uniform(), Distribution::beta(5, 1)}) {
            ExperimentSpec spec;
            spec.distribution = dist;
            spec.support = unit;
            spec.sample_sizes = {2, 5, 10};
            spec.trials = trials;
            spec.methods = {Method::new_anderson, Method::new_l2};
            spec.metrics = {Metric::coverage};
            spec.mc_samples = 2000;
            spec.seed = 606;
            for (const auto& r : run_experiment(spec)) {
                const double violation = 1.0 - r.value;
                if (violation >= worst) {
                    worst = violation;
                    worst_cell = dist.label() + " n=" + std::to_string(r.n) + " " + r.method;
                }
            }
        }
        return Outcome{worst <= threshold, std::to_string(trials) + " trials per cell, worst violation rate " +
                                               fmt(worst, 4) + " at " + worst_cell + " (threshold " +
                                               fmt(threshold, 4) + ")"};
    });

    criterion("superset monotonicity", 0, [] {
        random::SplitMix64 rng(88);
        const auto wide = SupportInterval::two_ended(-1, 1);
        std::size_t bad = 0;
        for (std::size_t i = 0; i < 200; ++i) {
            const std::size_t n = 1 + i % 10;
            const Sample x = random_sample(rng, n, i);
            const auto env = anderson_envelope(estimate_beta_n(n, 0.05, 2000, 900 + n));
            for (const auto& T : {OrderingFunction::mean(), OrderingFunction::l2(), OrderingFunction::anderson(env)})
                if (!check_superset_monotonicity(x, unit, wide, T, 0.05, 2000, 1000 + i)) ++bad;
        }
        return Outcome{bad == 0, "200 samples x 3 ordering functions, per-draw violations: " + std::to_string(bad)};
    });

    criterion("beta(n) sanity", 0, [] {
        const double b1 = estimate_beta_n(1, 0.05, 1'000'000, 7).value;
        bool ok = b1 >= 0.948 && b1 <= 0.952;
        std::string detail = "beta(1) = " + fmt(b1);
        for (std::size_t n : {2, 5, 10, 20}) {
            const double b = estimate_beta_n(n, 0.05, 1'000'000, 7 + n).value;
            const double cap = dkw_margin(n, 0.05) + 0.005;
            ok = ok && b <= cap;
            detail += ", beta(" + std::to_string(n) + ") = " + fmt(b) + " <= " + fmt(cap);
        }
        return Outcome{ok, detail};
    });

    criterion("safe-plan formula", 0, [] {
        const auto plan = safe_plan(Sample{0.0}, unit, OrderingFunction::mean(), 0.05, 0.3);
        const bool exact = plan.gamma == 0.05 && plan.required_samples == 19;
        const double eps = 0.01;
        auto req = request(Sample{0.5}, unit, OrderingFunction::mean(), 100'000, 4242);
        const double plain = new_bound(req).value;
        req.safe_epsilon = eps;
        const double safe = new_bound(req).value;
        const bool bracket = safe >= plain - eps && safe <= 0.975 + eps;
        return Outcome{exact && bracket, "worked example gamma = " + fmt(plan.gamma) + ", l = " +
                                             std::to_string(plan.required_samples) + "; safe " + fmt(safe) +
                                             " vs plain " + fmt(plain) + " and closed form 0.975 (eps " + fmt(eps) +
                                             ")"};
    });

    criterion("optimizer oracle", 0, [] {
        random::SplitMix64 rng(99);
        double worst_coarse = 0.0, worst_fine = 0.0, worst_vertex = 0.0;
        for (auto kind : {OrderingKind::anderson, OrderingKind::l2}) {
            for (std::size_t i = 0; i < 50; ++i) {
                const std::size_t n = 1 + i % 3;
                auto env_levels = sorted_uniforms(rng, n);
                for (std::size_t k = 0; k < i % n; ++k) env_levels[k] = 0.0;
                const auto T = kind == OrderingKind::anderson ? OrderingFunction::anderson(Envelope(env_levels, 0.05))
                                                              : OrderingFunction::l2();
                const auto ok = kind == OrderingKind::anderson ? oracle::Kind::anderson : oracle::Kind::l2;
                const Sample x = random_sample(rng, n, i);
                const auto u = sorted_uniforms(rng, n);
                const double t = eval_T(T, x, unit);
                const double v = maximize_induced_mean(x, UniformDraw(u), T, unit).value;
                const auto coarse = oracle::grid_search(ok, u, env_levels, t, 1.0, std::vector<double>(n, 0.0),
                                                        std::vector<double>(n, 1.0), 21);
                const double fine = std::max(coarse.value, oracle::exact_max(ok, u, env_levels, t, 0.0, 1.0));
                worst_coarse = std::max(worst_coarse, std::abs(v - coarse.value));
                worst_fine = std::max(worst_fine, std::abs(v - fine));
            }
        }
        for (std::size_t i = 0; i < 200; ++i) {
            const auto lv = sorted_uniforms(rng, 2);
            const auto u = sorted_uniforms(rng, 2);
            const Sample x = random_sample(rng, 2, i);
            const auto T = OrderingFunction::anderson(Envelope(lv, 0.05));
            const double t = eval_T(T, x, unit);
            const double exact =
                oracle::vertex_enumeration_n2({u[0], u[1]}, {lv[0], lv[1] - lv[0]}, t - (1.0 - lv[1]), 0.0, 1.0);
            worst_vertex = std::max(worst_vertex, std::abs(maximize_induced_mean(x, UniformDraw(u), T, unit).value - exact));
        }
        return Outcome{worst_coarse <= 5e-2 && worst_fine <= 1e-6 && worst_vertex <= 1e-9,
                       "max gap to 21-point grid " + fmt(worst_coarse) + " (<= 5e-2), after refinement " +
                           fmt(worst_fine) + " (<= 1e-6), linear path vs vertex enumeration at n=2 " +
                           fmt(worst_vertex) + " (<= 1e-9)"};
    });

    criterion("expected-value ordering", 0, [] {
        ExperimentSpec spec;
        spec.distribution = Distribution::beta(1, 5);
        spec.support = unit;
        spec.sample_sizes = {10};
        spec.trials = 10'000;
        spec.methods = {Method::new_l2, Method::new_anderson, Method::anderson, Method::hoeffding};
        spec.mc_samples = kDefaultMcSamples;
        spec.seed = 303;
        const auto rows = run_experiment(spec);
        const auto& l2 = row_of(rows, "new-l2");
        const auto& na = row_of(rows, "new-anderson");
        const auto& an = row_of(rows, "anderson");
        const auto& ho = row_of(rows, "hoeffding");
        auto cse = [](const ExperimentRow& a, const ExperimentRow& b) {
            return std::hypot(a.stderr_, b.stderr_);
        };
        const bool first = na.value - l2.value > 2.0 * cse(l2, na);
        const bool middle = na.value - an.value <= 2.0 * cse(na, an);
        const bool last = ho.value - an.value > 2.0 * cse(an, ho);
        return Outcome{first && middle && last, "E[new-l2] " + fmt(l2.value) + ", E[new-anderson] " + fmt(na.value) +
                                                    ", E[anderson] " + fmt(an.value) + ", E[hoeffding] " +
                                                    fmt(ho.value) + " (stderr " + fmt(l2.stderr_, 2) + ", " +
                                                    fmt(na.stderr_, 2) + ", " + fmt(an.stderr_, 2) + ", " +
                                                    fmt(ho.stderr_, 2) + ")"};
    });

    criterion("student-t failure", 0, [] {
        ExperimentSpec spec;
        spec.distribution = Distribution::beta(1, 5);
        spec.support = unit;
        spec.sample_sizes = {5};
        spec.trials = 10'000;
        spec.methods = {Method::student_t};
        spec.metrics = {Metric::coverage};
        spec.seed = 505;
        const auto& r = run_experiment(spec).front();
        const double limit = 0.95 - 3.0 * r.stderr_;
        return Outcome{r.value < limit, "coverage " + fmt(r.value, 4) + " < " + fmt(limit, 4)};
    });

    std::printf("%s: %d criteria failed\n", failures ? "FAIL" : "PASS", failures);
    return failures ? 1 : 0;
}
