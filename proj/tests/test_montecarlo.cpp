#include <doctest.h>

#include <cmath>
#include <map>
#include "hrw/numerics.hpp"

#include "hrw/distance_chain.hpp"
#include "hrw/errors.hpp"
#include "hrw/group.hpp"
#include "hrw/kernel.hpp"
#include "hrw/montecarlo.hpp"
#include "hrw/potential.hpp"

using namespace hrw;
using kernel::build_tables;
using kernel::WalkSpec;

namespace {

WalkSpec geometric_spec(std::uint32_t n, double c) {
    WalkSpec s;
    s.order = n;
    s.law = kernel::GeometricLaw{c};
    return s;
}

WalkSpec mu_c_spec(std::uint32_t n, double mu, kernel::SeqRule rule) {
    WalkSpec s;
    s.order = n;
    s.law = kernel::MuCLaw{mu, rule};
    return s;
}

WalkSpec mu_d_spec(std::uint32_t n, double mu, kernel::SeqRule rule) {
    WalkSpec s;
    s.order = n;
    s.law = kernel::MuDLaw{mu, rule};
    return s;
}

mc::SimConfig discrete_config(std::uint64_t seed, std::uint64_t replicas, std::uint64_t steps) {
    mc::SimConfig c;
    c.seed = seed;
    c.replicas = replicas;
    c.scheme = mc::Scheme::Discrete;
    c.horizon_steps = steps;
    return c;
}

mc::SimConfig continuous_config(std::uint64_t seed, std::uint64_t replicas, double horizon) {
    mc::SimConfig c;
    c.seed = seed;
    c.replicas = replicas;
    c.scheme = mc::Scheme::Continuous;
    c.horizon_time = horizon;
    return c;
}

// binomial three-sigma band around an expected probability
bool within_3sigma(double observed_count, double n, double p) {
    const double sigma = std::sqrt(std::max(p * (1.0 - p), 1e-300) * n);
    return std::fabs(observed_count - n * p) <= 3.0 * sigma + 1e-9;
}

} // namespace

TEST_CASE("determinism: same seed gives identical paths across thread counts") {
    const auto tb = build_tables(geometric_spec(2, 1.0));
    auto cfg = discrete_config(42, 4000, 64);
    cfg.threads = 1;
    const auto a = mc::simulate(tb, cfg);
    cfg.threads = 4;
    const auto b = mc::simulate(tb, cfg);
    cfg.threads = 3;
    const auto c = mc::simulate(tb, cfg);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].end_distance == b[i].end_distance);
        CHECK(a[i].max_distance == b[i].max_distance);
        CHECK(a[i].jumps == b[i].jumps);
        CHECK(a[i].end_distance == c[i].end_distance);
    }
}

TEST_CASE("single jumps land at distance j with frequency r_j") {
    const auto tb = build_tables(geometric_spec(2, 1.0));
    const auto dists = mc::end_distances(tb, discrete_config(7, 1000000, 1));
    std::map<std::uint32_t, std::uint64_t> counts;
    for (auto d : dists) ++counts[d];
    const auto n = static_cast<double>(dists.size());
    for (std::uint32_t j = 1; j <= 10; ++j)
        CHECK(within_3sigma(static_cast<double>(counts[j]), n, tb.r_at(j)));
}

TEST_CASE("alias-table sampling matches the jump law for a non-geometric family") {
    const auto tb = build_tables(mu_d_spec(2, 1.0, {kernel::SeqRule::Kind::Power, 0.5}));
    const auto dists = mc::end_distances(tb, discrete_config(11, 200000, 1));
    std::map<std::uint32_t, std::uint64_t> counts;
    for (auto d : dists) ++counts[d];
    const auto n = static_cast<double>(dists.size());
    for (std::uint32_t j = 1; j <= 8; ++j)
        CHECK(within_3sigma(static_cast<double>(counts[j]), n, tb.r_at(j)));
}

TEST_CASE("multi-step marginals match the exact transition function") {
    const auto tb = build_tables(geometric_spec(2, 1.0));
    for (std::uint64_t n_steps : {2ull, 5ull, 10ull}) {
        const auto dists = mc::end_distances(tb, discrete_config(1000 + n_steps, 300000, n_steps));
        std::map<std::uint32_t, std::uint64_t> counts;
        for (auto d : dists) ++counts[d];
        const auto n = static_cast<double>(dists.size());
        for (std::uint32_t rad = 0; rad <= 5; ++rad) {
            const double sphere =
                rad == 0 ? 1.0 : static_cast<double>(group::sphere_size(2, rad));
            const double p = sphere * kernel::pn(tb, n_steps, rad).value;
            CHECK(within_3sigma(static_cast<double>(counts[rad]), n, p));
        }
    }
}

TEST_CASE("continuous marginal matches the semigroup") {
    const auto tb = build_tables(geometric_spec(2, 1.0));
    const double t = 5.0;
    const auto dists = mc::end_distances(tb, continuous_config(99, 200000, t));
    std::map<std::uint32_t, std::uint64_t> counts;
    for (auto d : dists) ++counts[d];
    const auto n = static_cast<double>(dists.size());
    for (std::uint32_t rad = 0; rad <= 5; ++rad) {
        const double sphere = rad == 0 ? 1.0 : static_cast<double>(group::sphere_size(2, rad));
        const double p = sphere * kernel::pt(tb, t, rad).value;
        CHECK(within_3sigma(static_cast<double>(counts[rad]), n, p));
    }
}

TEST_CASE("distance process transitions match the chain law") {
    const auto tb = build_tables(geometric_spec(2, 1.0));
    const chain::ChainSpec cs(tb);
    const auto counts = mc::distance_transition_counts(tb, discrete_config(5, 20000, 50), 6);
    for (std::uint32_t i = 0; i <= 5; ++i) {
        double row_total = 0.0;
        for (const auto cnt : counts[i]) row_total += static_cast<double>(cnt);
        if (row_total < 5000) continue; // not enough visits for a frequency test
        for (std::uint32_t j = 0; j <= 5; ++j) {
            const double p = chain::p_ij(cs, i, j);
            CHECK(within_3sigma(static_cast<double>(counts[i][j]), row_total, p));
        }
    }
}

TEST_CASE("running maximum matches the closed-form law") {
    const auto tb = build_tables(geometric_spec(2, 1.0));
    const chain::ChainSpec cs(tb);
    const auto paths = mc::simulate(tb, discrete_config(17, 100000, 50));
    std::map<std::uint32_t, std::uint64_t> counts;
    for (const auto& p : paths) ++counts[p.max_distance];
    const auto n = static_cast<double>(paths.size());
    for (std::uint32_t j = 1; j <= 8; ++j) {
        const auto md = chain::max_dist(cs, 50.0, j);
        CHECK(within_3sigma(static_cast<double>(counts[j]), n, md.pmf));
        double tail_count = 0.0;
        for (const auto& [level, cnt] : counts)
            if (level >= j) tail_count += static_cast<double>(cnt);
        CHECK(within_3sigma(tail_count, n, md.survival));
    }
}

TEST_CASE("return times: censoring behaviour tracks recurrence and transience") {
    SUBCASE("recurrent walk: censoring vanishes with the horizon") {
        const auto tb = build_tables(geometric_spec(2, 1.0));
        const auto short_run = mc::estimate_return_time(tb, continuous_config(3, 20000, 30.0));
        const auto long_run = mc::estimate_return_time(tb, continuous_config(3, 20000, 300.0));
        CHECK(long_run.censoring_fraction < short_run.censoring_fraction);
        CHECK(long_run.censoring_fraction < 0.30);
        CHECK(long_run.uncensored.count > 0);
        CHECK(long_run.uncensored.min > 0.0);
    }

    SUBCASE("transient walk: the escape probability stabilizes") {
        const auto tb = build_tables(geometric_spec(4, 2.0));
        const auto a = mc::estimate_return_time(tb, continuous_config(21, 40000, 100.0));
        const auto b = mc::estimate_return_time(tb, continuous_config(22, 40000, 400.0));
        CHECK(a.censoring_fraction > 0.2);
        // both horizons see the same escape mass within Monte Carlo noise
        CHECK(std::fabs(a.censoring_fraction - b.censoring_fraction) < 0.02);
    }

    SUBCASE("discrete scheme is refused") {
        const auto tb = build_tables(geometric_spec(2, 1.0));
        CHECK_THROWS_AS(mc::estimate_return_time(tb, discrete_config(1, 10, 10)),
                        ValidationError);
    }
}

TEST_CASE("simulated return times match the solved excursion tail") {
    const auto tb = build_tables(geometric_spec(2, 1.0));
    const double horizon = 50.0;
    const auto est = mc::estimate_return_time(tb, continuous_config(8, 30000, horizon));
    const auto tail = potential::return_tail_solve(tb, horizon, 5000);
    // first return = holding + excursion: survival by grid convolution
    const double dt = tail.t[1] - tail.t[0];
    double ks = 0.0;
    for (std::size_t i = 0; i < tail.t.size(); i += 25) {
        const double t = tail.t[i];
        double conv = 0.0;
        for (std::size_t k = 0; k < i; ++k) {
            const double w = (k == 0 || k + 1 == i) ? 0.5 : 1.0;
            conv += w * std::exp(-tail.t[k]) * tail.rho[i - k];
        }
        const double survival = std::exp(-t) + dt * conv;
        ks = std::max(ks, std::fabs(survival - est.empirical_survival(t)));
    }
    CHECK(ks < 0.03);
}

TEST_CASE("last exit times") {
    SUBCASE("recurrent laws are refused") {
        const auto tb = build_tables(geometric_spec(2, 1.0));
        CHECK_THROWS_AS(mc::estimate_last_exit(tb, continuous_config(1, 10, 10.0), 1),
                        UnsupportedSpecError);
    }

    SUBCASE("moments are horizon stable and match the exact ratio identity") {
        const auto tb = build_tables(geometric_spec(4, 2.0)); // degree 1
        const double zeta = 0.5;
        const auto a = mc::estimate_last_exit(tb, continuous_config(31, 30000, 400.0), 1);
        const auto b = mc::estimate_last_exit(tb, continuous_config(32, 30000, 1600.0), 1);
        const double ma = a.moment(zeta);
        const double mb = b.moment(zeta);
        CHECK(std::fabs(ma - mb) / mb < 0.05); // stability across horizons
        CHECK(b.late_presence_fraction < 0.01);

        // exact identity on ultrametric balls: E L^zeta equals the ratio of
        // time-weighted ball visit integrals
        const double exact = potential::last_exit_integral(tb, zeta + 1.0, 1).series.value /
                             potential::last_exit_integral(tb, 1.0, 1).series.value;
        CHECK(mb == doctest::Approx(exact).epsilon(0.05));
    }

    SUBCASE("ball occupation reproduces the time-scale separation ratio") {
        // eta = 2 on a wide group: expected ball occupation scales by N/eta
        const auto tb = build_tables(mu_c_spec(16, 1.0, {kernel::SeqRule::Kind::Geometric, 2.0}));
        const double horizon = 300.0;
        const auto r0 = mc::estimate_last_exit(tb, continuous_config(77, 100000, horizon), 0);
        const auto r1 = mc::estimate_last_exit(tb, continuous_config(78, 100000, horizon), 1);
        const double ratio = r1.occupation.mean / r0.occupation.mean;
        CHECK(ratio == doctest::Approx(16.0 / 2.0).epsilon(0.15));
        // each level matches the horizon-truncated expected visit integral
        auto truncated = [&](std::uint32_t radius) {
            num::KahanSum acc;
            for (std::uint64_t j = 60; j > radius; --j) {
                const double h = tb.h_at(j);
                acc.add(15.0 * std::pow(16.0, double(radius) - double(j)) *
                        (-std::expm1(-h * horizon)) / h);
            }
            return acc.value();
        };
        CHECK(r0.occupation.mean == doctest::Approx(truncated(0)).epsilon(0.02));
        CHECK(r1.occupation.mean == doctest::Approx(truncated(1)).epsilon(0.02));
        // the horizon-free integrals carry the exact separation factor
        const double exact0 = potential::last_exit_integral(tb, 1.0, 0).series.value;
        const double exact1 = potential::last_exit_integral(tb, 1.0, 1).series.value;
        CHECK(exact1 / exact0 == doctest::Approx(8.0).epsilon(1e-10));
    }
}

TEST_CASE("occupation statistic") {
    const auto tb = build_tables(mu_c_spec(2, 1.0, {kernel::SeqRule::Kind::Constant, 1.0}));
    const std::vector<mc::SupportPoint> origin{{group::GroupElement::origin(2), 1.0}};

    SUBCASE("normalized occupation approaches the unit exponential law") {
        auto cfg = continuous_config(123, 2000, 1e4);
        const auto res = mc::occupation_statistic(tb, origin, 1e4, cfg);
        CHECK(res.ks_exp1 < 0.10); // modest horizon, loose band
    }

    SUBCASE("short horizons are visibly far from the limit") {
        auto cfg = continuous_config(123, 2000, 10.0);
        const auto res = mc::occupation_statistic(tb, origin, 10.0, cfg);
        CHECK(res.ks_exp1 > 0.12);
    }

    SUBCASE("scaling the weight leaves the statistic unchanged") {
        auto cfg = continuous_config(55, 500, 100.0);
        const std::vector<mc::SupportPoint> scaled{{group::GroupElement::origin(2), 5.0}};
        const auto a = mc::occupation_statistic(tb, origin, 100.0, cfg);
        const auto b = mc::occupation_statistic(tb, scaled, 100.0, cfg);
        REQUIRE(a.samples.size() == b.samples.size());
        for (std::size_t i = 0; i < a.samples.size(); ++i)
            CHECK(a.samples[i] == doctest::Approx(b.samples[i]).epsilon(1e-12));
    }

    SUBCASE("transient laws are refused") {
        const auto transient = build_tables(geometric_spec(4, 2.0));
        auto cfg = continuous_config(1, 10, 100.0);
        CHECK_THROWS_AS(mc::occupation_statistic(transient, origin, 100.0, cfg),
                        UnsupportedSpecError);
    }
}

TEST_CASE("empirical distribution distance") {
    SUBCASE("samples from the reference law sit close") {
        Rng rng(2024, 0);
        std::vector<double> xs(10000);
        for (auto& x : xs) x = rng.uniform01();
        const double d = mc::ks_statistic(xs, [](double x) {
            return std::min(1.0, std::max(0.0, x));
        });
        CHECK(d < 0.02);
    }

    SUBCASE("a point mass against a continuous law is far") {
        std::vector<double> xs(100, 0.5);
        const double d = mc::ks_statistic(xs, [](double x) {
            return std::min(1.0, std::max(0.0, x));
        });
        CHECK(d >= 0.5);
    }

    SUBCASE("needs at least two samples") {
        CHECK_THROWS_AS(mc::ks_statistic({1.0}, [](double) { return 0.5; }),
                        std::invalid_argument);
    }
}
