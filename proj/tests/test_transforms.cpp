#include <doctest.h>

#include <cmath>

#include "posthoc/errors.hpp"
#include "posthoc/metrics.hpp"
#include "posthoc/mlp.hpp"
#include "posthoc/transforms.hpp"
#include "test_support.hpp"

using namespace posthoc;

namespace {

EvalTable one_row(std::vector<double> logits, std::uint32_t label = 0) {
    EvalTable t;
    t.n = 1;
    t.c = logits.size();
    t.logits = std::move(logits);
    t.labels = {label};
    return t;
}

CheckpointTensors weights1(std::vector<double> w) {
    CheckpointTensors c;
    c.tensors.push_back({"w", {static_cast<std::uint32_t>(w.size())}, std::move(w)});
    return c;
}

}  // namespace

TEST_CASE("ensemble arithmetic") {
    std::vector<EvalTable> two{one_row({2, 0}), one_row({0, 2})};

    EvalTable mean = ensemble_logits(two, std::vector<double>{1, 1});
    CHECK(mean.logits == std::vector<double>{1, 1});

    EvalTable weighted = ensemble_logits(two, std::vector<double>{2, 1});
    CHECK(weighted.logits == std::vector<double>{0.5, 1.0});

    std::vector<EvalTable> same{one_row({3, 1}), one_row({3, 1})};
    EvalTable idem = ensemble_logits(same, std::vector<double>{1, 1});
    CHECK(idem.logits == std::vector<double>{3, 1});
}

TEST_CASE("ensemble rejects mismatches") {
    std::vector<EvalTable> bad_labels{one_row({2, 0}, 0), one_row({0, 2}, 1)};
    CHECK_THROWS_AS(ensemble_logits(bad_labels, std::vector<double>{1, 1}), ValidationError);

    std::vector<EvalTable> bad_shape{one_row({2, 0}), one_row({0, 2, 1})};
    CHECK_THROWS_AS(ensemble_logits(bad_shape, std::vector<double>{1, 1}), ValidationError);

    std::vector<EvalTable> one{one_row({2, 0})};
    CHECK_THROWS_AS(ensemble_logits(one, std::vector<double>{1, 1}), ValidationError);
    CHECK_THROWS_AS(ensemble_logits(one, std::vector<double>{-1}), ValidationError);
    CHECK_THROWS_AS(ensemble_logits(std::vector<EvalTable>{}, std::vector<double>{}),
                    ValidationError);
}

TEST_CASE("ensembling copies of one table reproduces its error") {
    Rng rng(31);
    EvalTable t = testsup::random_table(rng, 25, 3);
    std::vector<EvalTable> members(5, t);
    EvalTable ens = ensemble_logits(members, std::vector<double>(5, 1.0));
    CHECK(error_metric(ens).value == error_metric(t).value);
}

TEST_CASE("swa mean") {
    std::vector<CheckpointTensors> two{weights1({1, 3}), weights1({3, 5})};
    CHECK(swa_mean(two).tensors[0].data == std::vector<double>{2, 4});

    std::vector<CheckpointTensors> single{weights1({7, 9})};
    CHECK(swa_mean(single).tensors[0].data == std::vector<double>{7, 9});

    std::vector<CheckpointTensors> three{weights1({0}), weights1({3}), weights1({6})};
    CHECK(swa_mean(three).tensors[0].data == std::vector<double>{3});

    CheckpointTensors other;
    other.tensors.push_back({"v", {2}, {0, 0}});
    std::vector<CheckpointTensors> bad{weights1({1, 2}), other};
    CHECK_THROWS_AS(swa_mean(bad), ValidationError);
}

TEST_CASE("swa running update") {
    SwaState state;
    state.update(weights1({2}));
    state.update(weights1({2}));
    CHECK(state.count == 2);
    CHECK(state.mean.tensors[0].data == std::vector<double>{2});
    state.update(weights1({5}));
    CHECK(state.count == 3);
    CHECK(state.mean.tensors[0].data == std::vector<double>{3});

    SwaState fresh = swa_update(SwaState{}, weights1({7}));
    CHECK(fresh.count == 1);
    CHECK(fresh.mean.tensors[0].data == std::vector<double>{7});
}

TEST_CASE("streaming mean equals batch mean") {
    Rng rng(32);
    std::vector<CheckpointTensors> ckpts;
    SwaState state;
    for (int i = 0; i < 200; ++i) {
        ckpts.push_back(testsup::random_checkpoint(rng, {5, 3}));
        state.update(ckpts.back());
    }
    CheckpointTensors batch = swa_mean(ckpts);
    for (std::size_t t = 0; t < batch.tensors.size(); ++t)
        for (std::size_t i = 0; i < batch.tensors[t].data.size(); ++i) {
            const double a = state.mean.tensors[t].data[i];
            const double b = batch.tensors[t].data[i];
            CHECK(std::abs(a - b) <= 1e-6 * std::max({std::abs(a), std::abs(b), 1e-30}));
        }
}

namespace {

/// Evaluator returning fixed tables regardless of weights.
Evaluator fixed_evaluator(EvalTable val, EvalTable test) {
    return [val = std::move(val), test = std::move(test)](const CheckpointTensors&) {
        SplitTables out;
        out.emplace("val", val);
        out.emplace("test", test);
        return out;
    };
}

/// Linear model: logits = x . w per class, via the MLP forward on a 1-layer
/// checkpoint. points are rows of a fixed design matrix.
Evaluator linear_evaluator(std::vector<double> points, std::size_t rows,
                           std::vector<std::uint32_t> labels) {
    return [points = std::move(points), rows, labels = std::move(labels)](
               const CheckpointTensors& w) {
        EvalTable t;
        t.n = rows;
        t.logits = mlp_forward(w, points, rows);
        t.c = t.logits.size() / rows;
        t.labels = labels;
        SplitTables out;
        out.emplace("val", t);
        out.emplace("test", std::move(t));
        return out;
    };
}

CheckpointTensors linear_model(Rng& rng, std::size_t classes, std::size_t dim = 2) {
    CheckpointTensors c;
    TensorEntry w;
    w.name = "w1";
    w.shape = {static_cast<std::uint32_t>(classes), static_cast<std::uint32_t>(dim)};
    w.data.resize(classes * dim);
    for (double& v : w.data) v = rng.next_gauss();
    TensorEntry b;
    b.name = "b1";
    b.shape = {static_cast<std::uint32_t>(classes)};
    b.data.resize(classes);
    for (double& v : b.data) v = rng.next_gauss();
    c.tensors.push_back(std::move(w));
    c.tensors.push_back(std::move(b));
    return c;
}

}  // namespace

TEST_CASE("compose_swa_ts with one checkpoint is plain TS") {
    Rng rng(33);
    EvalTable val = testsup::random_table(rng, 20, 3);
    EvalTable test = testsup::random_table(rng, 10, 3);
    TemperatureFit fit = fit_temperature(val);

    std::vector<CheckpointTensors> prefix{weights1({1, 2})};
    ComposedTables out = compose_swa_ts(prefix, fixed_evaluator(val, test));
    CHECK(out.spec.kind == TransformKind::swa_ts);
    REQUIRE(out.spec.member_temps.size() == 1);
    CHECK(out.spec.member_temps[0] == fit.tau);
    CHECK(out.val.logits == apply_temperature(val, fit.tau).logits);
    REQUIRE(out.test.has_value());
    CHECK(out.test->logits == apply_temperature(test, fit.tau).logits);

    CHECK_THROWS_AS(compose_swa_ts({}, fixed_evaluator(val, test)), ValidationError);
}

TEST_CASE("compose_swa_ts degenerate evaluator keeps tau at 1") {
    EvalTable flat = {2, 2, {1, 1, 1, 1}, {0, 1}};
    std::vector<CheckpointTensors> prefix{weights1({1})};
    ComposedTables out = compose_swa_ts(prefix, fixed_evaluator(flat, flat));
    CHECK(out.spec.member_temps[0] == 1.0);
    CHECK(out.val.logits == flat.logits);
}

TEST_CASE("linear models commute: SWA of weights equals mean of logits") {
    Rng rng(34);
    for (int rep = 0; rep < 10; ++rep) {
        const std::size_t rows = 4 + rng.next_below(20), classes = 2 + rng.next_below(3);
        std::vector<double> pts(rows * 2);
        for (double& v : pts) v = rng.next_gauss();
        std::vector<std::uint32_t> labels(rows);
        for (auto& y : labels) y = static_cast<std::uint32_t>(rng.next_below(classes));
        Evaluator ev = linear_evaluator(pts, rows, labels);

        std::vector<CheckpointTensors> members;
        std::vector<EvalTable> member_tables;
        for (int k = 0; k < 5; ++k) {
            members.push_back(linear_model(rng, classes));
            member_tables.push_back(ev(members.back()).at("val"));
        }
        EvalTable via_weights = ev(swa_mean(members)).at("val");
        EvalTable via_logits = ensemble_logits(member_tables, std::vector<double>(5, 1.0));
        for (std::size_t i = 0; i < via_weights.logits.size(); ++i) {
            const double a = via_weights.logits[i], b = via_logits.logits[i];
            CHECK(std::abs(a - b) <= 1e-12 * std::max({std::abs(a), std::abs(b), 1.0}));
        }
    }
}

TEST_CASE("compose_swa_ens_ts nesting") {
    Rng rng(35);

    SUBCASE("L = 1: combined scale matches the grid-search best scale") {
        EvalTable val = testsup::random_table(rng, 30, 3);
        EvalTable test = testsup::random_table(rng, 10, 3);
        std::vector<std::vector<CheckpointTensors>> prefixes{{weights1({1})}};
        ComposedTables out = compose_swa_ens_ts(prefixes, fixed_evaluator(val, test));
        const double combined = 1.0 / (out.spec.member_temps[0] * *out.spec.ensemble_temp);
        CHECK(std::abs(combined - testsup::grid_search_beta(val)) < 1e-3);
    }

    SUBCASE("identical runs collapse to the single-run result") {
        EvalTable val = testsup::random_table(rng, 25, 2);
        EvalTable test = testsup::random_table(rng, 25, 2);
        std::vector<std::vector<CheckpointTensors>> one{{weights1({1})}};
        std::vector<std::vector<CheckpointTensors>> three{{weights1({1})},
                                                          {weights1({1})},
                                                          {weights1({1})}};
        Evaluator ev = fixed_evaluator(val, test);
        ComposedTables a = compose_swa_ens_ts(one, ev);
        ComposedTables b = compose_swa_ens_ts(three, ev);
        CHECK(error_metric(a.val).value == error_metric(b.val).value);
        CHECK(b.spec.member_temps == std::vector<double>(3, a.spec.member_temps[0]));
    }

    SUBCASE("symmetric members with unit temps average to [[1,1]]") {
        // degenerate (constant) val rows pin every fitted temperature at 1
        EvalTable flat = {1, 2, {1, 1}, {0}};
        std::vector<std::vector<CheckpointTensors>> prefixes{{weights1({1})}, {weights1({2})}};
        int calls = 0;
        Evaluator ev = [&](const CheckpointTensors&) {
            SplitTables out;
            out.emplace("val", flat);
            out.emplace("test", ++calls == 1 ? one_row({2, 0}) : one_row({0, 2}));
            return out;
        };
        ComposedTables out = compose_swa_ens_ts(prefixes, ev);
        CHECK(out.spec.member_temps == std::vector<double>{1.0, 1.0});
        CHECK(*out.spec.ensemble_temp == 1.0);
        REQUIRE(out.test.has_value());
        CHECK(out.test->logits == std::vector<double>{1, 1});
    }

    SUBCASE("outer temperature never changes the error") {
        EvalTable val = testsup::random_table(rng, 40, 3);
        EvalTable test = testsup::random_table(rng, 40, 3);
        std::vector<std::vector<CheckpointTensors>> prefixes{{weights1({1})}, {weights1({2})}};
        Evaluator ev = fixed_evaluator(val, test);
        ComposedTables out = compose_swa_ens_ts(prefixes, ev);
        // undo the outer scaling: same argmax, same error
        EvalTable unscaled = apply_temperature(out.val, 1.0 / *out.spec.ensemble_temp);
        CHECK(error_metric(out.val).value == error_metric(unscaled).value);
        CHECK(out.val.labels == val.labels);
        CHECK(out.val.n == val.n);
        CHECK(out.val.c == val.c);
    }
}
