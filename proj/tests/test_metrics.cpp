#include <doctest.h>

#include <cmath>

#include "posthoc/calibrate.hpp"
#include "posthoc/errors.hpp"
#include "posthoc/metrics.hpp"
#include "test_support.hpp"

using namespace posthoc;

namespace {

EvalTable table_of(std::size_t n, std::size_t c, std::vector<double> logits,
                   std::vector<std::uint32_t> labels) {
    EvalTable t;
    t.n = n;
    t.c = c;
    t.logits = std::move(logits);
    t.labels = std::move(labels);
    return t;
}

}  // namespace

TEST_CASE("softmax closed forms") {
    auto p = softmax_row(std::vector<double>{0.0, 0.0});
    CHECK(p[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(p[1] == doctest::Approx(0.5).epsilon(1e-15));

    auto q = softmax_row(std::vector<double>{std::log(2.0), 0.0});
    CHECK(q[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
    CHECK(q[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));

    auto r = softmax_row(std::vector<double>{1000.0, 0.0});
    CHECK(std::isfinite(r[0]));
    CHECK(r[0] == doctest::Approx(1.0));
    CHECK(r[1] == doctest::Approx(0.0));
}

TEST_CASE("softmax sums to one for magnitudes up to 1e4") {
    Rng rng(2);
    for (int rep = 0; rep < 200; ++rep) {
        std::vector<double> z(2 + rng.next_below(8));
        for (double& v : z) v = rng.next_uniform(-1e4, 1e4);
        auto p = softmax_row(z);
        double sum = 0;
        for (double v : p) {
            CHECK(v >= 0.0);  // entries this far below the max underflow to +0
            sum += v;
        }
        CHECK(std::abs(sum - 1.0) < 1e-12);
    }
}

TEST_CASE("softmax rejects non-finite input") {
    CHECK_THROWS_AS(softmax_row(std::vector<double>{1.0, std::nan("")}), ValidationError);
}

TEST_CASE("error metric") {
    CHECK(error_metric(table_of(2, 2, {2, 1, 0, 3}, {0, 0})).value == 0.5);
    // argmax ties break to the lowest class index
    CHECK(error_metric(table_of(1, 2, {1, 1}, {0})).value == 0.0);
    CHECK(error_metric(table_of(1, 2, {1, 1}, {1})).value == 1.0);
}

TEST_CASE("error is invariant to temperature scaling") {
    Rng rng(3);
    for (int rep = 0; rep < 100; ++rep) {
        EvalTable t = testsup::random_table(rng, 1 + rng.next_below(30), 2 + rng.next_below(5));
        const double tau = rng.next_uniform(0.25, 4.0);
        CHECK(error_metric(apply_temperature(t, tau)).value == error_metric(t).value);
    }
}

TEST_CASE("loss closed forms") {
    CHECK(loss_metric(table_of(1, 2, {0, 0}, {0})).value == doctest::Approx(std::log(2.0)).epsilon(1e-14));
    CHECK(loss_metric(table_of(1, 2, {std::log(3.0), 0}, {0})).value ==
          doctest::Approx(std::log(4.0 / 3.0)).epsilon(1e-13));
    CHECK(loss_metric(table_of(1, 4, {0, 0, 0, 0}, {2})).value ==
          doctest::Approx(std::log(4.0)).epsilon(1e-14));
}

TEST_CASE("loss nonnegative and equals entropy at the empirical conditional") {
    Rng rng(4);
    for (int rep = 0; rep < 50; ++rep) {
        EvalTable t = testsup::random_table(rng, 1 + rng.next_below(20), 2 + rng.next_below(4));
        CHECK(loss_metric(t).value >= 0.0);
    }
    // 4 identical rows whose softmax matches the empirical label distribution
    const double l0 = std::log(0.75), l1 = std::log(0.25);
    EvalTable t = table_of(4, 2, {l0, l1, l0, l1, l0, l1, l0, l1}, {0, 0, 0, 1});
    const double entropy = -(0.75 * std::log(0.75) + 0.25 * std::log(0.25));
    CHECK(loss_metric(t).value == doctest::Approx(entropy).epsilon(1e-14));
}

TEST_CASE("perplexity") {
    MetricValue loss{std::log(2.0), MetricKind::loss, 1};
    CHECK(perplexity_metric(loss).value == doctest::Approx(2.0).epsilon(1e-14));
    loss.value = 0.0;
    CHECK(perplexity_metric(loss).value == 1.0);
    loss.value = std::log(4.0);
    CHECK(perplexity_metric(loss).value == doctest::Approx(4.0).epsilon(1e-14));

    MetricValue err{0.5, MetricKind::error, 1};
    CHECK_THROWS_AS(perplexity_metric(err), ValidationError);
}

TEST_CASE("subset metrics") {
    // two rows right, two rows wrong, split exactly along the mask
    EvalTable t = table_of(4, 2, {2, 0, 2, 0, 0, 2, 0, 2}, {0, 0, 0, 0});
    std::vector<bool> mask{true, true, false, false};
    auto [on_mask, off] = subset_metrics(t, mask, MetricKind::error);
    CHECK(on_mask.value == 0.0);
    CHECK(off.value == 1.0);
    CHECK(on_mask.n == 2);

    CHECK_THROWS_AS(subset_metrics(t, std::vector<bool>{true, true, true, true}, MetricKind::error),
                    ValidationError);
}

TEST_CASE("subset losses decompose into the total") {
    Rng rng(5);
    for (int rep = 0; rep < 30; ++rep) {
        const std::size_t n = 4 + rng.next_below(40);
        EvalTable t = testsup::random_table(rng, n, 3);
        std::vector<bool> mask(n);
        mask[0] = true;
        mask[1] = false;
        for (std::size_t i = 2; i < n; ++i) mask[i] = rng.next_unit() < 0.5;
        for (MetricKind kind : {MetricKind::loss, MetricKind::error}) {
            auto [a, b] = subset_metrics(t, mask, kind);
            const double total =
                kind == MetricKind::loss ? loss_metric(t).value : error_metric(t).value;
            const double combined = static_cast<double>(a.n) * a.value +
                                    static_cast<double>(b.n) * b.value;
            CHECK(combined == doctest::Approx(static_cast<double>(n) * total).epsilon(1e-9));
        }
    }
}

TEST_CASE("clean error uses alternate labels") {
    EvalTable t = table_of(2, 2, {2, 0, 2, 0}, {0, 1});
    CHECK(error_metric(t).value == 0.5);
    std::vector<std::uint32_t> clean{0, 0};
    MetricValue v = clean_error_metric(t, clean);
    CHECK(v.value == 0.0);
    CHECK(v.kind == MetricKind::clean_error);
    CHECK_THROWS_AS(clean_error_metric(t, std::vector<std::uint32_t>{0}), ValidationError);
}
