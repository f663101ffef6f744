#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "misim/errors.hpp"
#include "misim/proxy.hpp"
#include "misim/rng.hpp"

using namespace misim;

namespace {

PolicyParams const_params(int nc, int vs, double v) {
    PolicyParams p = PolicyParams::zeros(nc, vs);
    for (double& w : p.weights) w = v;
    return p;
}

PolicyParams gaussian_params(int nc, int vs, std::uint64_t seed) {
    PolicyParams p = PolicyParams::zeros(nc, vs);
    Rng rng(seed);
    for (double& w : p.weights) w = rng.next_gaussian();
    return p;
}

bool near(double x, double b) { return std::abs(x - b) <= 1e-9 * std::max(1.0, std::abs(b)); }

std::string fmt4(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

}  // namespace

TEST_CASE("alpha_from_gap") {
    CHECK(alpha_from_gap(1) == 0.5);
    CHECK(alpha_from_gap(2) == 1.0 / 3.0);
    CHECK(alpha_from_gap(3) == 0.25);
    CHECK_THROWS_AS((void)alpha_from_gap(0), std::domain_error);
    CHECK_THROWS_AS((void)alpha_from_gap(-2), std::domain_error);
}

TEST_CASE("linear interpolation in probability space") {
    CHECK(linear_prox(0.2, 0.4, 0.5) == doctest::Approx(0.3).epsilon(1e-14));
    CHECK(linear_prox(0.7, 0.7, 0.37) == doctest::Approx(0.7).epsilon(1e-15));
    // alpha -> 0 collapses onto the current policy
    CHECK(std::abs(linear_prox(0.2, 0.4, 1e-9) - 0.4) <= 1e-8);
    CHECK_THROWS_AS((void)linear_prox(0.2, 0.4, 0.0), std::domain_error);
    CHECK_THROWS_AS((void)linear_prox(0.2, 0.4, 1.0), std::domain_error);
    CHECK_THROWS_AS((void)linear_prox(0.0, 0.4, 0.5), std::domain_error);
    CHECK_THROWS_AS((void)linear_prox(0.2, 1.5, 0.5), std::domain_error);
}

TEST_CASE("log-linear interpolation") {
    CHECK(loglinear_prox(-1.3, -1.0, 0.25) == doctest::Approx(-1.075).epsilon(1e-14));
    CHECK(loglinear_prox(-0.8, -0.8, 0.6) == doctest::Approx(-0.8).epsilon(1e-15));
    // induced split: prox - old = (1-alpha) * (cur - old)
    const double old = -1.4, cur = -0.9, alpha = 0.3;
    const double prox = loglinear_prox(old, cur, alpha);
    CHECK(prox - old == doctest::Approx((1.0 - alpha) * (cur - old)).epsilon(1e-12));
}

TEST_CASE("log-linear effective bounds at alpha one-half") {
    const EffectiveBounds b = effective_bounds_loglinear(0.010, 0.003, 0.004, 0.5);
    CHECK(b.mask_lo == doctest::Approx(0.9801).epsilon(1e-12));
    CHECK(b.mask_hi == doctest::Approx(1.0201).epsilon(1e-12));
    CHECK(b.clip_lo_neg == doctest::Approx(0.994009).epsilon(1e-12));
    CHECK(b.clip_hi_pos == doctest::Approx(1.008016).epsilon(1e-12));
    CHECK(fmt4(b.mask_lo) == "0.9801");
    CHECK(fmt4(b.mask_hi) == "1.0201");
    CHECK(fmt4(b.clip_lo_neg) == "0.9940");
    CHECK(fmt4(b.clip_hi_pos) == "1.0080");
}

TEST_CASE("log-linear bounds widen as the gap grows") {
    // alpha = 1/(n+1): larger n means a smaller clip exponent base share
    const EffectiveBounds n1 = effective_bounds_loglinear(0.01, 0.003, 0.004, 0.5);
    const EffectiveBounds n2 = effective_bounds_loglinear(0.01, 0.003, 0.004, 1.0 / 3.0);
    const EffectiveBounds n3 = effective_bounds_loglinear(0.01, 0.003, 0.004, 0.25);
    // mask band narrows toward 1 while the clip band widens
    CHECK(n2.mask_lo > n1.mask_lo);
    CHECK(n3.mask_lo > n2.mask_lo);
    CHECK(n2.mask_hi < n1.mask_hi);
    CHECK(n2.clip_hi_pos > n1.clip_hi_pos);
    CHECK(n3.clip_hi_pos > n2.clip_hi_pos);
    CHECK(n2.clip_lo_neg < n1.clip_lo_neg);
    CHECK(fmt4(n2.clip_hi_pos) == "1.0120");
    CHECK(fmt4(n3.clip_hi_pos) == "1.0161");
}

TEST_CASE("arithmetic effective bounds") {
    const EffectiveBounds b = effective_bounds_arithmetic(0.010, 0.003, 0.004, 0.5);
    CHECK(b.mask_lo == 0.98);
    CHECK(b.mask_hi == 1.02);
    CHECK(b.clip_hi_pos == doctest::Approx(0.502 / 0.498).epsilon(1e-13));
    CHECK(b.clip_lo_neg == doctest::Approx(0.4985 / 0.5015).epsilon(1e-13));
    CHECK(fmt4(b.clip_hi_pos) == "1.0080");
    CHECK(fmt4(b.clip_lo_neg) == "0.9940");
}

TEST_CASE("arithmetic clip bound degenerates when the denominator closes") {
    CHECK_THROWS_AS((void)effective_bounds_arithmetic(0.01, 0.003, 0.3, 0.2), SingularBound);
    // exactly zero denominator: (1-1/4)*(1+1/3) = 1
    CHECK_THROWS_AS((void)effective_bounds_arithmetic(0.01, 0.003, 1.0 / 3.0, 0.25),
                    SingularBound);
    // comfortably inside the domain: no throw
    CHECK_NOTHROW((void)effective_bounds_arithmetic(0.01, 0.003, 0.004, 0.25));
}

TEST_CASE("multiplicative-band bounds") {
    const EffectiveBounds ll = effective_bounds_loglinear_mult(1.01, 0.003, 0.004, 0.5);
    CHECK(ll.mask_lo == doctest::Approx(std::pow(1.0 / 1.01, 2.0)).epsilon(1e-13));
    CHECK(ll.mask_hi == doctest::Approx(1.0201).epsilon(1e-12));

    const EffectiveBounds ar = effective_bounds_arithmetic_mult(1.01, 0.003, 0.004, 0.5);
    // endpoint mapping: alpha + (1-alpha) * bound recovers the band edge
    CHECK(0.5 + 0.5 * ar.mask_hi == doctest::Approx(1.01).epsilon(1e-13));
    CHECK(0.5 + 0.5 * ar.mask_lo == doctest::Approx(1.0 / 1.01).epsilon(1e-13));

    CHECK_THROWS_AS((void)effective_bounds_loglinear_mult(1.0, 0.003, 0.004, 0.5),
                    std::domain_error);
    CHECK_THROWS_AS((void)effective_bounds_arithmetic_mult(0.9, 0.003, 0.004, 0.5),
                    std::domain_error);
}

TEST_CASE("bound domain checks") {
    CHECK_THROWS_AS((void)effective_bounds_loglinear(0.01, 0.003, 0.004, 0.0),
                    std::domain_error);
    CHECK_THROWS_AS((void)effective_bounds_loglinear(0.01, 0.003, 0.004, 1.0),
                    std::domain_error);
    CHECK_THROWS_AS((void)effective_bounds_loglinear(0.0, 0.003, 0.004, 0.5),
                    std::domain_error);
    CHECK_THROWS_AS((void)effective_bounds_loglinear(0.01, 1.0, 0.004, 0.5),
                    std::domain_error);
}

TEST_CASE("transformed bounds reproduce proxy-side gating, log-linear family") {
    Rng rng(1337);
    int checked = 0;
    while (checked < 2000) {
        const double alpha = 0.05 + 0.9 * rng.next_uniform();
        const double e1 = 0.001 + 0.199 * rng.next_uniform();
        const double e2 = 0.001 + 0.199 * rng.next_uniform();
        const double r_total = std::exp(0.5 * (2.0 * rng.next_uniform() - 1.0));
        const EffectiveBounds b = effective_bounds_loglinear(e1, e2, e2, alpha);
        const double r2 = std::pow(r_total, 1.0 - alpha);
        const double r1 = std::pow(r_total, alpha);
        // skip draws landing on a band edge of either parameterization
        if (near(r2, 1.0 - e1) || near(r2, 1.0 + e1) || near(r1, 1.0 - e2) ||
            near(r1, 1.0 + e2) || near(r_total, b.mask_lo) || near(r_total, b.mask_hi) ||
            near(r_total, b.clip_lo_neg) || near(r_total, b.clip_hi_pos))
            continue;
        ++checked;
        CHECK((r2 >= 1.0 - e1 && r2 <= 1.0 + e1) ==
              (r_total >= b.mask_lo && r_total <= b.mask_hi));
        CHECK((r1 <= 1.0 + e2) == (r_total <= b.clip_hi_pos));
        CHECK((r1 >= 1.0 - e2) == (r_total >= b.clip_lo_neg));
    }
}

TEST_CASE("transformed bounds reproduce proxy-side gating, arithmetic family") {
    Rng rng(2718);
    int checked = 0;
    while (checked < 2000) {
        const double alpha = 0.05 + 0.9 * rng.next_uniform();
        const double e1 = 0.001 + 0.199 * rng.next_uniform();
        const double e2 = 0.001 + 0.199 * rng.next_uniform();
        if ((1.0 - alpha) * (1.0 + e2) >= 1.0) continue;  // singular clip bound
        const double r_total = std::exp(0.5 * (2.0 * rng.next_uniform() - 1.0));
        const EffectiveBounds b = effective_bounds_arithmetic(e1, e2, e2, alpha);
        // prox = a*p_old + (1-a)*p_cur gives r2 = a + (1-a) r and r1 = r / r2
        const double r2 = alpha + (1.0 - alpha) * r_total;
        const double r1 = r_total / r2;
        if (near(r2, 1.0 - e1) || near(r2, 1.0 + e1) || near(r1, 1.0 - e2) ||
            near(r1, 1.0 + e2) || near(r_total, b.mask_lo) || near(r_total, b.mask_hi) ||
            near(r_total, b.clip_lo_neg) || near(r_total, b.clip_hi_pos))
            continue;
        ++checked;
        CHECK((r2 >= 1.0 - e1 && r2 <= 1.0 + e1) ==
              (r_total >= b.mask_lo && r_total <= b.mask_hi));
        CHECK((r1 <= 1.0 + e2) == (r_total <= b.clip_hi_pos));
        CHECK((r1 >= 1.0 - e2) == (r_total >= b.clip_lo_neg));
    }
}

TEST_CASE("ewma first absorb copies the actor") {
    EwmaState s = ewma_init(0.75, 0.9);
    CHECK_FALSE(s.primed);
    const PolicyParams theta = gaussian_params(2, 3, 5);
    s = ewma_update(s, theta);
    CHECK(s.primed);
    CHECK(s.weight_sum == 1.0);
    CHECK(s.step == 1);
    for (std::size_t i = 0; i < theta.weights.size(); ++i)
        CHECK(s.theta_prox.weights[i] == theta.weights[i]);
}

TEST_CASE("normalized recursion on a scalar stream") {
    EwmaState s = ewma_init(0.5, 0.9);
    s = ewma_update(s, const_params(1, 1, 0.0));
    s = ewma_update(s, const_params(1, 1, 1.0));
    CHECK(s.theta_prox.weights[0] == 2.0 / 3.0);
    CHECK(s.weight_sum == 1.5);
    s = ewma_update(s, const_params(1, 1, 1.0));
    CHECK(s.weight_sum == 1.75);
}

TEST_CASE("constant stream is a fixed point") {
    const PolicyParams theta = const_params(2, 4, 1.375);
    EwmaState s = ewma_init(0.8, 0.9);
    for (int t = 0; t < 50; ++t) s = ewma_update(s, theta);
    for (double w : s.theta_prox.weights) CHECK(std::abs(w - 1.375) <= 1e-12);
}

TEST_CASE("normalized ewma matches its closed form") {
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL, 4ULL, 5ULL}) {
        Rng rng(seed);
        const double beta = 0.1 + 0.85 * rng.next_uniform();
        EwmaState s = ewma_init(beta, 0.9);
        std::vector<PolicyParams> thetas;
        for (int t = 0; t < 50; ++t) {
            thetas.push_back(gaussian_params(3, 4, mix64(seed, t)));
            s = ewma_update(s, thetas.back());
            // prox_t = sum_k beta^{t-k} theta_k / sum_k beta^{t-k}
            long double wsum = 0.0L;
            std::vector<long double> acc(12, 0.0L);
            for (int k = 0; k <= t; ++k) {
                const long double w = std::pow((long double)beta, (long double)(t - k));
                wsum += w;
                for (int i = 0; i < 12; ++i) acc[i] += w * thetas[k].weights[i];
            }
            for (int i = 0; i < 12; ++i)
                CHECK(std::abs(s.theta_prox.weights[i] -
                               static_cast<double>(acc[i] / wsum)) < 1e-10);
        }
    }
}

TEST_CASE("unnormalized recursion variant") {
    EwmaState s = ewma_init(0.75, 0.9, /*normalized=*/false);
    s = ewma_update(s, const_params(1, 1, 1.0));  // first absorb copies
    CHECK(s.theta_prox.weights[0] == 1.0);
    s = ewma_update(s, const_params(1, 1, 2.0));
    CHECK(s.theta_prox.weights[0] == 1.25);  // 0.75*1 + 0.25*2
}

TEST_CASE("ewma shape and domain errors") {
    CHECK_THROWS_AS((void)ewma_init(0.0, 0.9), std::domain_error);
    CHECK_THROWS_AS((void)ewma_init(1.0, 0.9), std::domain_error);
    CHECK_THROWS_AS((void)ewma_init(0.5, 1.0), std::domain_error);
    EwmaState s = ewma_init(0.5, 0.9);
    s = ewma_update(s, PolicyParams::zeros(2, 3));
    CHECK_THROWS_AS((void)ewma_update(s, PolicyParams::zeros(2, 4)), std::domain_error);
}

TEST_CASE("center of mass") {
    CHECK(ewma_center_of_mass(0.5) == 1.0);
    CHECK(ewma_center_of_mass(0.75) == 3.0);
    CHECK(ewma_center_of_mass(0.9) == doctest::Approx(9.0).epsilon(1e-14));
    CHECK_THROWS_AS((void)ewma_center_of_mass(1.0), std::domain_error);
}

TEST_CASE("staleness-window decay") {
    CHECK(staleness_decay(2.0) == 0.5);
    CHECK(staleness_decay(6.0) == 0.75);
    CHECK(staleness_decay(1.0) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK_THROWS_AS((void)staleness_decay(0.0), std::domain_error);
}

TEST_CASE("decay composes with center of mass to half the window") {
    CHECK(ewma_center_of_mass(staleness_decay(2.0)) == 1.0);
    CHECK(ewma_center_of_mass(staleness_decay(6.0)) == 3.0);
    Rng rng(31);
    for (int i = 0; i < 50; ++i) {
        const double W = 0.1 + 99.9 * rng.next_uniform();
        const double com = ewma_center_of_mass(staleness_decay(W));
        CHECK(std::abs(com - W / 2.0) <= 1e-13 * (W / 2.0));
    }
}

TEST_CASE("reset triggers strictly below tau") {
    EwmaState s = ewma_init(0.75, 0.9);
    s = ewma_update(s, const_params(1, 2, 0.0));
    s = ewma_update(s, const_params(1, 2, 1.0));
    const double before = s.theta_prox.weights[0];
    const PolicyParams theta_t = const_params(1, 2, 5.0);

    EwmaState kept = maybe_reset(s, 0.95, theta_t);
    CHECK(kept.reset_count == 0);
    CHECK(kept.theta_prox.weights[0] == before);
    CHECK(kept.weight_sum == s.weight_sum);

    EwmaState boundary = maybe_reset(s, 0.90, theta_t);  // not strictly below
    CHECK(boundary.reset_count == 0);
    CHECK(boundary.theta_prox.weights[0] == before);

    EwmaState reset = maybe_reset(s, 0.85, theta_t);
    CHECK(reset.reset_count == 1);
    CHECK(reset.weight_sum == 1.0);
    for (std::size_t i = 0; i < theta_t.weights.size(); ++i)
        CHECK(reset.theta_prox.weights[i] == theta_t.weights[i]);
}

TEST_CASE("reset collapses the reference ratio to one") {
    EwmaState s = ewma_init(0.75, 0.9);
    for (int t = 0; t < 5; ++t) s = ewma_update(s, gaussian_params(2, 4, 100 + t));
    const PolicyParams theta_t = gaussian_params(2, 4, 999);
    s = maybe_reset(s, 0.5, theta_t);
    for (int c = 0; c < 2; ++c)
        for (int t = 0; t < 4; ++t) {
            const double lr = logprob_train(theta_t, c, t) - logprob_train(s.theta_prox, c, t);
            CHECK(std::exp(lr) == 1.0);
        }
}

TEST_CASE("ewma checkpoint round trip") {
    EwmaState s = ewma_init(0.6, 0.85, false);
    for (int t = 0; t < 7; ++t) s = ewma_update(s, gaussian_params(2, 3, 40 + t));
    s.reset_count = 2;
    const auto path = std::filesystem::temp_directory_path() / "misim_ewma_rt.json";
    save_ewma(s, path);
    const EwmaState r = load_ewma(path);
    CHECK(r.beta == s.beta);
    CHECK(r.tau == s.tau);
    CHECK(r.step == s.step);
    CHECK(r.weight_sum == s.weight_sum);
    CHECK(r.reset_count == s.reset_count);
    CHECK(r.normalized == s.normalized);
    CHECK(r.primed == s.primed);
    REQUIRE(r.theta_prox.weights.size() == s.theta_prox.weights.size());
    for (std::size_t i = 0; i < s.theta_prox.weights.size(); ++i)
        CHECK(r.theta_prox.weights[i] == s.theta_prox.weights[i]);
    std::filesystem::remove(path);
}

TEST_CASE("corrupt ewma checkpoint is rejected") {
    const auto path = std::filesystem::temp_directory_path() / "misim_ewma_bad.json";
    {
        std::ofstream out(path);
        out << "{\"format\": 99}\n";
    }
    CHECK_THROWS_AS((void)load_ewma(path), SnapshotIoError);
    CHECK_THROWS_AS((void)load_ewma(path.parent_path() / "misim_no_such_file.json"),
                    SnapshotIoError);
    std::filesystem::remove(path);
}
