#include <doctest.h>

#include <cstring>

#include "posthoc/codec.hpp"
#include "posthoc/errors.hpp"
#include "posthoc/run_store.hpp"
#include "test_support.hpp"

using namespace posthoc;

namespace {

EvalTable tiny_table() {
    EvalTable t;
    t.n = 1;
    t.c = 2;
    t.logits = {0.0, 0.0};
    t.labels = {0};
    return t;
}

}  // namespace

TEST_CASE("eval bundle layout sizes") {
    CHECK(write_eval_table(tiny_table()).size() == 28);  // 8 + 4 + 4 + 8 + 4

    Rng rng(11);
    EvalTable t = testsup::random_table(rng, 3, 4);
    CHECK(write_eval_table(t).size() == 76);  // 8 + 8 + 48 + 12
}

TEST_CASE("eval bundle round trips") {
    Rng rng(42);
    for (int rep = 0; rep < 50; ++rep) {
        EvalTable t = testsup::random_table(rng, 1 + rng.next_below(40), 2 + rng.next_below(6));
        // narrow to f32 first so the double round trip is exact
        for (double& z : t.logits) z = static_cast<float>(z);
        auto bytes = write_eval_table(t);
        EvalTable back = read_eval_table(bytes);
        CHECK(back.n == t.n);
        CHECK(back.c == t.c);
        CHECK(back.labels == t.labels);
        CHECK(back.logits == t.logits);
        CHECK(write_eval_table(back) == bytes);  // write . read is byte identity
    }
}

TEST_CASE("decoding widens and encoding narrows to nearest even") {
    EvalTable t = tiny_table();
    t.logits[0] = 0.1;  // not representable in f32
    EvalTable back = read_eval_table(write_eval_table(t));
    CHECK(back.logits[0] == static_cast<double>(static_cast<float>(0.1)));
    CHECK(back.logits[0] != 0.1);
}

TEST_CASE("eval bundle format errors") {
    auto bytes = write_eval_table(tiny_table());

    SUBCASE("bad magic") {
        bytes[0] = std::byte('X');
        CHECK_THROWS_AS(read_eval_table(bytes), FormatError);
    }
    SUBCASE("trailing bytes rejected") {
        bytes.push_back(std::byte(0));
        CHECK_THROWS_AS(read_eval_table(bytes), FormatError);
    }
    SUBCASE("truncation rejected") {
        bytes.pop_back();
        CHECK_THROWS_AS(read_eval_table(bytes), FormatError);
    }
    SUBCASE("label out of range rejected") {
        bytes[24] = std::byte(5);  // label word of the only row
        CHECK_THROWS_AS(read_eval_table(bytes), ValidationError);
    }
    SUBCASE("non-finite logit rejected") {
        const std::uint32_t inf = 0x7f800000u;
        std::memcpy(bytes.data() + 16, &inf, 4);
        CHECK_THROWS_AS(read_eval_table(bytes), ValidationError);
    }
}

TEST_CASE("write_eval_table validates invariants") {
    EvalTable t = tiny_table();
    t.labels[0] = 3;
    CHECK_THROWS_AS(write_eval_table(t), ValidationError);
}

TEST_CASE("checkpoint codec basics") {
    CheckpointTensors c;
    c.tensors.push_back({"w", {2}, {1.0, 3.0}});

    auto [manifest, blob] = write_checkpoint(c);
    CHECK(blob.size() == 8);
    CheckpointTensors back = read_checkpoint(
        std::span<const std::byte>(reinterpret_cast<const std::byte*>(manifest.data()), manifest.size()),
        blob);
    REQUIRE(back.tensors.size() == 1);
    CHECK(back.tensors[0].name == "w");
    CHECK(back.tensors[0].data == std::vector<double>{1.0, 3.0});
}

TEST_CASE("checkpoint manifest offsets") {
    CheckpointTensors c;
    c.tensors.push_back({"a", {2}, {1, 2}});
    c.tensors.push_back({"b", {3}, {3, 4, 5}});
    auto [manifest, blob] = write_checkpoint(c);
    CHECK(manifest.find("\"offset_elems\":2") != std::string::npos);
    CHECK(manifest.find("\"total_elems\":5") != std::string::npos);
    CHECK(blob.size() == 20);

    SUBCASE("empty tensor list") {
        CheckpointTensors empty;
        auto [m2, b2] = write_checkpoint(empty);
        CHECK(b2.empty());
        CHECK(m2.find("\"total_elems\":0") != std::string::npos);
    }
}

TEST_CASE("checkpoint codec round trips on random checkpoints") {
    Rng rng(7);
    for (int rep = 0; rep < 20; ++rep) {
        CheckpointTensors c = testsup::random_checkpoint(rng, {4, 7, 1});
        for (auto& t : c.tensors)
            for (double& v : t.data) v = static_cast<float>(v);
        auto [manifest, blob] = write_checkpoint(c);
        CheckpointTensors back = read_checkpoint(
            std::span<const std::byte>(reinterpret_cast<const std::byte*>(manifest.data()),
                                       manifest.size()),
            blob);
        REQUIRE(back.tensors.size() == c.tensors.size());
        for (std::size_t i = 0; i < c.tensors.size(); ++i) {
            CHECK(back.tensors[i].name == c.tensors[i].name);
            CHECK(back.tensors[i].data == c.tensors[i].data);
        }
        auto [m2, b2] = write_checkpoint(back);
        CHECK(m2 == manifest);
        CHECK(b2 == blob);
    }
}

TEST_CASE("checkpoint format errors") {
    const std::string good = R"({"tensors":[{"name":"w","shape":[2],"offset_elems":0}],"total_elems":2})";
    auto span_of = [](const std::string& s) {
        return std::span<const std::byte>(reinterpret_cast<const std::byte*>(s.data()), s.size());
    };
    std::vector<std::byte> blob(8, std::byte(0));

    SUBCASE("blob length mismatch") {
        std::vector<std::byte> bad(12, std::byte(0));
        CHECK_THROWS_AS(read_checkpoint(span_of(good), bad), FormatError);
    }
    SUBCASE("out-of-range offset") {
        const std::string m =
            R"({"tensors":[{"name":"w","shape":[2],"offset_elems":1}],"total_elems":2})";
        CHECK_THROWS_AS(read_checkpoint(span_of(m), blob), FormatError);
    }
    SUBCASE("overlapping offsets") {
        const std::string m =
            R"({"tensors":[{"name":"a","shape":[2],"offset_elems":0},)"
            R"({"name":"b","shape":[2],"offset_elems":1}],"total_elems":3})";
        std::vector<std::byte> b3(12, std::byte(0));
        CHECK_THROWS_AS(read_checkpoint(span_of(m), b3), FormatError);
    }
    SUBCASE("gaps are allowed") {
        const std::string m =
            R"({"tensors":[{"name":"w","shape":[1],"offset_elems":1}],"total_elems":2})";
        CheckpointTensors c = read_checkpoint(span_of(m), blob);
        CHECK(c.tensors[0].data.size() == 1);
    }
    SUBCASE("not json") {
        CHECK_THROWS_AS(read_checkpoint(span_of("nope"), blob), FormatError);
    }
}

TEST_CASE("run store enforces shape agreement per split") {
    RunStore store;
    Rng rng(3);
    store.add_table(1, 1.0, "val", testsup::random_table(rng, 4, 3));
    CHECK_THROWS_AS(store.add_table(1, 2.0, "val", testsup::random_table(rng, 5, 3)),
                    ValidationError);
    // a different split may have its own shape
    store.add_table(1, 1.0, "test", testsup::random_table(rng, 9, 3));
}

TEST_CASE("run store keeps indices ordered and rejects duplicates") {
    RunStore store;
    Rng rng(4);
    store.add_table(1, 2.0, "val", testsup::random_table(rng, 4, 2));
    store.add_table(1, 0.5, "val", testsup::random_table(rng, 4, 2));
    store.add_table(1, 1.0, "val", testsup::random_table(rng, 4, 2));
    CHECK(store.indices(1) == std::vector<double>{0.5, 1.0, 2.0});
    CHECK_THROWS_AS(store.add_table(1, 1.0, "val", testsup::random_table(rng, 4, 2)),
                    ValidationError);
}

TEST_CASE("run store widens checkpoints from storage precision") {
    RunStore store;
    CheckpointTensors c;
    c.tensors.push_back({"w", {1}, {0.1}});
    store.add_checkpoint(1, 1.0, c);
    CHECK(store.checkpoint(1, 1.0).tensors[0].data[0] ==
          static_cast<double>(static_cast<float>(0.1)));
}

TEST_CASE("run store names the missing slot") {
    RunStore store;
    Rng rng(5);
    store.add_table(2, 1.5, "val", testsup::random_table(rng, 4, 2));
    CHECK_THROWS_WITH_AS(store.checkpoint(2, 1.5), doctest::Contains("run 2"), ValidationError);
    CHECK_THROWS_AS(store.table(2, 1.5, "test"), ValidationError);
}

TEST_CASE("common index prefix truncates tails and rejects divergence") {
    RunStore store;
    Rng rng(6);
    for (double t : {1.0, 2.0, 3.0}) store.add_table(1, t, "val", testsup::random_table(rng, 4, 2));
    for (double t : {1.0, 2.0}) store.add_table(2, t, "val", testsup::random_table(rng, 4, 2));
    CHECK(store.common_index_prefix() == std::vector<double>{1.0, 2.0});

    RunStore bad;
    bad.add_table(1, 1.0, "val", testsup::random_table(rng, 4, 2));
    bad.add_table(2, 1.5, "val", testsup::random_table(rng, 4, 2));
    CHECK_THROWS_AS(bad.common_index_prefix(), ValidationError);
}
