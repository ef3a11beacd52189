#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <random>
#include <sstream>

#include "meanbound/newbound.hpp"
#include "meanbound/random.hpp"
#include "oracles.hpp"

using namespace meanbound;

namespace {

const SupportInterval unit = SupportInterval::two_ended(0, 1);

Sample random_sample(std::mt19937_64& gen, std::size_t n, double lo = 0.0, double hi = 1.0) {
    std::uniform_real_distribution<double> d(lo, hi);
    std::vector<double> v(n);
    for (double& e : v) e = d(gen);
    return Sample(std::move(v));
}

Sample bernoulli(std::size_t n, std::size_t zeros) {
    std::vector<double> v(n, 1.0);
    for (std::size_t i = 0; i < zeros; ++i) v[i] = 0.0;
    return Sample(std::move(v));
}

BoundRequest request(Sample x, SupportInterval d, OrderingFunction T, std::size_t l, std::uint64_t seed,
                     double alpha = 0.05) {
    return BoundRequest{std::move(x), d, alpha, std::move(T), l, seed};
}

}  // namespace

TEST_CASE("constant sample at the upper end gives the upper end") {
    const Sample ones{1.0, 1.0, 1.0};
    const auto env = Envelope({0.0, 0.2, 0.6}, 0.05);
    for (double alpha : {0.01, 0.05, 0.5})
        for (const auto& T : {OrderingFunction::mean(), OrderingFunction::l2(), OrderingFunction::anderson(env)}) {
            CHECK(new_bound(request(ones, unit, T, 500, 1, alpha)).value == 1.0);
        }
}

TEST_CASE("n = 1 closed form") {
    // b(x, U) = 1 - U (1 - x), so the 1-alpha quantile is 1 - alpha (1 - x).
    for (double x : {0.0, 0.5, 0.9}) {
        const auto r = new_bound(request(Sample{x}, unit, OrderingFunction::mean(), 1'000'000, 17));
        CHECK(std::abs(r.value - (1.0 - 0.05 * (1.0 - x))) <= 0.001);
        CHECK(r.diagnostics.at("mc_samples") == 1'000'000);
        CHECK(r.diagnostics.at("quantile_rank") == 950'000);
        CHECK(r.method == "new-mean");
    }
}

TEST_CASE("bernoulli samples with mean_T reproduce clopper-pearson") {
    const auto bern = SupportInterval::two_point(0, 1);
    CHECK(std::abs(new_bound(request(Sample{0.0, 0.0}, bern, OrderingFunction::mean(), 100'000, 5)).value -
                   (1.0 - std::sqrt(0.05))) <= 0.005);
    for (std::size_t n = 1; n <= 5; ++n)
        for (std::size_t zeros = 0; zeros <= n; ++zeros) {
            const Sample x = bernoulli(n, zeros);
            const double cp = clopper_pearson_ucb(x, 0.05).value;
            const double nb = new_bound(request(x, bern, OrderingFunction::mean(), 100'000, 6 + n)).value;
            CAPTURE(n);
            CAPTURE(zeros);
            CHECK(std::abs(nb - cp) <= 0.005);
        }
}

TEST_CASE("safe plan worked example") {
    const auto plan = safe_plan(Sample{0.0}, unit, OrderingFunction::mean(), 0.05, 0.3);
    CHECK(plan.phi == 0.0);
    CHECK(plan.gamma == doctest::Approx(0.05));
    CHECK(plan.required_samples == 19);
    CHECK(plan.required_samples_exact == doctest::Approx(-std::log(0.025) / 2.0 * 10.0));
}

TEST_CASE("safe plan degenerate and wide-epsilon cases") {
    const auto flat = safe_plan(Sample{1.0, 1.0}, unit, OrderingFunction::mean(), 0.05, 0.01);
    CHECK(flat.phi == 1.0);
    CHECK(flat.gamma == 0.05);
    CHECK(flat.required_samples == 1);
    // eps >= 3 (s_D - phi) makes the ratio at least 1, so gamma = alpha.
    const auto wide = safe_plan(Sample{0.2, 0.4}, unit, OrderingFunction::mean(), 0.05, 3.0);
    CHECK(wide.gamma == 0.05);
    // Large n does not underflow: the count saturates instead.
    std::vector<double> many(400, 0.1);
    const auto huge = safe_plan(Sample(many), unit, OrderingFunction::mean(), 0.05, 0.01);
    CHECK(huge.gamma >= 0.0);
    CHECK(huge.required_samples == std::numeric_limits<std::size_t>::max());
    CHECK_THROWS_AS(safe_plan(Sample{0.2}, unit, OrderingFunction::mean(), 0.05, 0.0), InvalidArgument);
    CHECK_THROWS_AS(safe_plan(Sample{0.2}, unit, OrderingFunction::mean(), 0.05, -1.0), InvalidArgument);
}

TEST_CASE("safe mode raises l and adds eps/3") {
    auto req = request(Sample{0.0}, unit, OrderingFunction::mean(), 5, 3);
    req.safe_epsilon = 0.3;
    const auto r = new_bound(req);
    CHECK(r.diagnostics.at("mc_samples") == 19);
    CHECK(r.diagnostics.at("mc_samples_requested") == 5);
    CHECK(r.diagnostics.at("safe_gamma") == doctest::Approx(0.05));
    CHECK_FALSE(r.warnings.empty());
    // Rank ceil((1 - alpha + gamma) 19) = 19 is the maximum.
    CHECK(r.diagnostics.at("quantile_rank") == 19);

    auto tight = request(Sample{0.2, 0.3, 0.5}, unit, OrderingFunction::mean(), 100, 3);
    tight.safe_epsilon = 1e-3;
    tight.safe_sample_ceiling = 1000;
    CHECK_THROWS_AS(new_bound(tight), InvalidArgument);
}

TEST_CASE("safe output brackets the closed-form quantile") {
    const double eps = 0.03;
    auto plain_req = request(Sample{0.5}, unit, OrderingFunction::mean(), 100'000, 21);
    const double plain = new_bound(plain_req).value;
    auto safe_req = plain_req;
    safe_req.safe_epsilon = eps;
    const double safe = new_bound(safe_req).value;
    CHECK(safe >= plain - eps);
    CHECK(safe <= 0.975 + eps);
    CHECK(safe > plain);
}

TEST_CASE("lower bounds go through negation") {
    const auto r = new_bound([] {
        auto q = request(Sample{0.5}, unit, OrderingFunction::mean(), 200'000, 9);
        q.side = Side::lower;
        return q;
    }());
    CHECK(r.side == Side::lower);
    CHECK(std::abs(r.value - 0.025) <= 0.002);
    auto bad = request(Sample{0.5}, SupportInterval::upper_only(1), OrderingFunction::mean(), 100, 1);
    bad.side = Side::lower;
    CHECK_THROWS_AS(new_bound(bad), InvalidArgument);
    CHECK_THROWS_AS(new_bound(request(Sample{0.5}, SupportInterval::lower_only(0), OrderingFunction::mean(), 100, 1)),
                    InvalidArgument);
}

TEST_CASE("request validation") {
    CHECK_THROWS_AS(new_bound(request(Sample{0.5}, unit, OrderingFunction::mean(), 0, 1)), InvalidArgument);
    CHECK_THROWS_AS(new_bound(request(Sample{0.5}, unit, OrderingFunction::mean(), 10, 1, 1.0)), InvalidArgument);
    CHECK_THROWS_AS(new_bound(request(Sample{1.5}, unit, OrderingFunction::mean(), 10, 1)), InvalidArgument);
}

TEST_CASE("results are bit-identical across runs and worker counts") {
    std::mt19937_64 gen(10);
    const Sample x = random_sample(gen, 7);
    const auto env = anderson_envelope(estimate_beta_n(7, 0.05, 2000, 4));
    const auto req = request(x, unit, OrderingFunction::anderson(env), 3000, 77);
    setenv("MEANBOUND_THREADS", "1", 1);
    const double serial = new_bound(req).value;
    setenv("MEANBOUND_THREADS", "3", 1);
    const double threaded = new_bound(req).value;
    unsetenv("MEANBOUND_THREADS");
    CHECK(serial == threaded);
    CHECK(new_bound(req).value == serial);
    auto other = req;
    other.seed = 78;
    CHECK(new_bound(other).value != serial);
}

TEST_CASE("bound is nonincreasing in alpha on shared draws") {
    std::mt19937_64 gen(11);
    for (int rep = 0; rep < 10; ++rep) {
        const Sample x = random_sample(gen, 5);
        double prev = INFINITY;
        for (double alpha : {0.01, 0.05, 0.1, 0.2, 0.5}) {
            const double v = new_bound(request(x, unit, OrderingFunction::l2(), 2000, 5, alpha)).value;
            CHECK(v <= prev);
            prev = v;
        }
    }
}

TEST_CASE("bound table lookup") {
    const std::vector<double> grid{0.1, 0.3, 0.5, 0.7};
    const auto table = bound_table(grid, unit, 0.05, OrderingFunction::mean(), 4, 5000, 13);
    REQUIRE(table.entries().size() == 4);
    for (std::size_t i = 1; i < 4; ++i) CHECK(table.entries()[i].bound >= table.entries()[i - 1].bound);
    CHECK(table.lookup(0.3) == table.entries()[1].bound);
    CHECK(table.lookup(0.35) == table.entries()[2].bound);
    CHECK(table.lookup(0.0) == table.entries()[0].bound);
    CHECK_THROWS_AS(table.lookup(0.71), InvalidArgument);
    // A sample whose mean sits on a grid point gets the direct bound on the same draws.
    const Sample x{0.1, 0.3, 0.3, 0.5};
    CHECK(table.lookup(OrderingFunction::mean(), x, unit) ==
          new_bound(request(x, unit, OrderingFunction::mean(), 5000, 13)).value);
    CHECK_THROWS_AS(table.lookup(OrderingFunction::mean(), Sample{0.3}, unit), InvalidArgument);
    std::ostringstream out;
    table.write_csv(out);
    const std::string csv = out.str();
    CHECK(csv.rfind("t_value,bound,alpha,n,method,l,seed\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
    CHECK_THROWS_AS(bound_table({}, unit, 0.05, OrderingFunction::mean(), 4, 10, 1), InvalidArgument);
    CHECK_THROWS_AS(bound_table({0.5, 0.2}, unit, 0.05, OrderingFunction::mean(), 4, 10, 1), InvalidArgument);
}

TEST_CASE("bernoulli bound table reproduces clopper-pearson per count") {
    const auto bern = SupportInterval::two_point(0, 1);
    for (std::size_t n : {3, 6}) {
        std::vector<double> grid;
        for (std::size_t k = 0; k <= n; ++k) grid.push_back(static_cast<double>(k) / static_cast<double>(n));
        const auto table = bound_table(grid, bern, 0.05, OrderingFunction::mean(), n, 100'000, 31);
        for (std::size_t k = 0; k <= n; ++k) {
            const double closed = k == n ? 1.0 : oracle::beta_quantile(0.95, static_cast<double>(k + 1),
                                                                        static_cast<double>(n - k));
            CAPTURE(n);
            CAPTURE(k);
            CHECK(std::abs(table.entries()[k].bound - closed) <= 0.005);
        }
    }
}

TEST_CASE("superset monotonicity") {
    std::mt19937_64 gen(12);
    const auto wide = SupportInterval::two_ended(-1, 1);
    for (int rep = 0; rep < 30; ++rep) {
        const Sample x = random_sample(gen, 1 + rep % 6);
        CHECK(check_superset_monotonicity(x, unit, wide, OrderingFunction::mean(), 0.05, 500, rep));
        CHECK(check_superset_monotonicity(x, unit, wide, OrderingFunction::l2(), 0.05, 500, rep));
        CHECK(check_superset_monotonicity(x, unit, unit, OrderingFunction::l2(), 0.05, 500, rep));
    }
    CHECK_THROWS_AS(check_superset_monotonicity(Sample{0.5}, wide, unit, OrderingFunction::mean(), 0.05, 10, 1),
                    InvalidArgument);
    // Constant sample at the inner upper end: exactly 1 on [0,1], strictly between 1 and 2 on [0,2].
    const Sample ones{1.0, 1.0, 1.0};
    const double inner = new_bound(request(ones, unit, OrderingFunction::mean(), 2000, 3)).value;
    const double outer =
        new_bound(request(ones, SupportInterval::two_ended(0, 2), OrderingFunction::mean(), 2000, 3)).value;
    CHECK(inner == 1.0);
    CHECK(outer > 1.0);
    CHECK(outer < 2.0);
    CHECK(check_superset_monotonicity(ones, unit, SupportInterval::two_ended(0, 2), OrderingFunction::mean(), 0.05,
                                      2000, 3));
}

TEST_CASE("dominance over anderson is exact with a shared-draw envelope") {
    std::mt19937_64 gen(13);
    const std::size_t l = 2000;
    for (int rep = 0; rep < 40; ++rep) {
        const std::size_t n = 2 + rep % 9;
        const std::uint64_t seed = 1000 + rep;
        const auto env = anderson_envelope(estimate_beta_n(n, 0.05, l, seed));
        const Sample x = random_sample(gen, n);
        const auto T = OrderingFunction::anderson(env);
        const double ours = new_bound(request(x, unit, T, l, seed)).value;
        const double anderson = anderson_ucb(x, unit, env).value;
        CAPTURE(n);
        CHECK(ours <= anderson + 1e-9);
        // Per draw: every draw lying above the envelope gives b(x, u) <= m(x, l).
        const auto mx = InducedMeanMaximizer::for_sample(T, x, unit);
        std::vector<double> u(n);
        for (std::size_t j = 0; j < l; ++j) {
            random::sorted_uniform_draw(seed, j, u);
            bool above = true;
            for (std::size_t i = 0; i < n; ++i) above = above && u[i] >= env.levels()[i];
            if (above) REQUIRE(mx.value(u) <= anderson + 1e-9);
        }
    }
}

TEST_CASE("reduction to anderson below the threshold") {
    std::mt19937_64 gen(14);
    const std::size_t l = 4000;
    for (int rep = 0; rep < 20; ++rep) {
        const std::size_t n = 2 + rep % 9;
        const std::uint64_t seed = 2000 + rep;
        const auto env = anderson_envelope(estimate_beta_n(n, 0.05, l, seed));
        const auto T = OrderingFunction::anderson(env);
        const Sample x = random_sample(gen, n);
        const double anderson = anderson_ucb(x, unit, env).value;
        // One-ended support puts a below the threshold automatically.
        const auto r = new_bound(request(x, SupportInterval::upper_only(1), T, l, seed));
        CHECK(r.diagnostics.at("clamped_one_ended") == 1.0);
        CHECK(r.value <= anderson + 1e-9);
        CHECK(r.value >= anderson - 0.01);
        // So does any explicit lower end at or below it.
        const double threshold = r.diagnostics.at("effective_lower");
        const auto far = new_bound(request(x, SupportInterval::two_ended(threshold - 1.0, 1), T, l, seed));
        CHECK(far.value == doctest::Approx(r.value).epsilon(1e-12));
    }
}

TEST_CASE("strictly below anderson above the threshold") {
    // Samples with every x_i < b - (b - a) l_(i0) / l_(n) and n > i0, concentrated near a.
    std::mt19937_64 gen(15);
    const std::size_t l = 20'000;
    for (int rep = 0; rep < 20; ++rep) {
        const std::size_t n = 4 + rep % 7;
        const std::uint64_t seed = 3000 + rep;
        const auto env = anderson_envelope(estimate_beta_n(n, 0.05, l, seed));
        const auto lv = env.levels();
        const std::size_t i0 = env.first_positive_index();
        REQUIRE(n > i0);
        const double cap = 1.0 - lv[i0 - 1] / lv[n - 1];
        const Sample x = random_sample(gen, n, 0.0, std::min(cap, 0.2));
        const auto T = OrderingFunction::anderson(env);
        const double anderson = anderson_ucb(x, unit, env).value;
        const auto mx = InducedMeanMaximizer::for_sample(T, x, unit);
        auto maxima = draw_maxima(mx, l, seed);
        std::sort(maxima.begin(), maxima.end());
        const std::size_t k = detail::quantile_rank(0.95, l);
        const double ours = maxima[k - 1];
        CHECK(ours == new_bound(request(x, unit, T, l, seed)).value);
        // Monte-Carlo noise: half-width of the order-statistic band at +-3 binomial standard deviations.
        const auto sd = static_cast<std::size_t>(std::ceil(3.0 * std::sqrt(l * 0.05 * 0.95)));
        const double noise = 0.5 * (maxima[std::min(l, k + sd) - 1] - maxima[k - sd - 1]);
        CAPTURE(n);
        CHECK(anderson - ours > noise);
    }
}

TEST_CASE("dominance over hoeffding") {
    std::mt19937_64 gen(16);
    const std::size_t l = 2000;
    for (int rep = 0; rep < 30; ++rep) {
        const std::size_t n = 3 + rep % 8;
        const auto env = anderson_envelope(estimate_beta_n(n, 0.05, l, rep));
        const Sample x = random_sample(gen, n);
        const double ours = new_bound(request(x, unit, OrderingFunction::anderson(env), l, rep)).value;
        CHECK(ours < hoeffding_ucb(x, unit, 0.05).value);
    }
}

TEST_CASE("method dispatch") {
    const Sample x{0.2, 0.8, 0.4, 0.6};
    MethodOptions opts;
    opts.mc_samples = 2000;
    opts.beta_mc_samples = 2000;
    CHECK(compute_bound(Method::hoeffding, x, unit, opts).value == doctest::Approx(1.111937).epsilon(1e-6));
    const auto nb = compute_bound(Method::new_anderson, x, unit, opts);
    CHECK(nb.method == "new-anderson");
    CHECK(nb.diagnostics.count("beta_n") == 1);
    CHECK(nb.value <= compute_bound(Method::anderson, x, unit, opts).value + 1e-9);
    CHECK(compute_bound(Method::new_mean, x, unit, opts).method == "new-mean");
    CHECK(compute_bound(Method::student_t, x, SupportInterval(), opts).value > 0.5);
    opts.side = Side::lower;
    const auto lo = compute_bound(Method::hoeffding, x, unit, opts);
    CHECK(lo.value == doctest::Approx(-0.111937).epsilon(1e-6));
    CHECK(lo.side == Side::lower);
    // Clopper-Pearson lower bound: 1 - UCB on the flipped sample.
    const auto cp_lo = compute_bound(Method::clopper_pearson, Sample{1.0, 1.0}, SupportInterval::two_point(0, 1), opts);
    CHECK(cp_lo.value == doctest::Approx(std::sqrt(0.05)));
    for (Method m : kAllMethods) CHECK(parse_method(to_string(m)) == m);
    CHECK_THROWS_AS(parse_method("bogus"), InvalidArgument);
    CHECK_FALSE(has_coverage_guarantee(Method::student_t));
}

TEST_CASE("confidence interval splits alpha") {
    const Sample x{0.2, 0.8, 0.4, 0.6};
    MethodOptions opts;
    opts.alpha = 0.1;
    opts.envelope = Envelope({0, 0, 0, 0}, 0.1);
    const auto ci = confidence_interval(Method::hoeffding, x, unit, opts);
    CHECK(ci.lower.value == doctest::Approx(0.5 - std::sqrt(std::log(20.0) / 8.0)));
    CHECK(ci.upper.value == doctest::Approx(0.5 + std::sqrt(std::log(20.0) / 8.0)));
    CHECK(ci.lower.alpha == doctest::Approx(0.05));
    opts.beta_mc_samples = 2000;
    opts.mc_samples = 2000;
    const auto nci = confidence_interval(Method::new_l2, x, unit, opts);
    CHECK(nci.lower.value < x.mean());
    CHECK(nci.upper.value > x.mean());
}
