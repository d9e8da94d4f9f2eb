#include <doctest.h>

#include "oracles.hpp"

using namespace coblock;

TEST_SUITE("codec") {

TEST_CASE("sha256 matches the standard test vector") {
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("canonical dumps sort keys and stay compact") {
    CHECK(dump_canonical(Json{{"b", 1}, {"a", {{"d", 2}, {"c", "é"}}}}) == R"({"a":{"c":"é","d":2},"b":1})");
    CHECK_THROWS_AS(parse_json("{oops"), Error);
}

TEST_CASE("actions, events, tasks and configs round-trip") {
    const std::vector<Action> actions = {Place{Color::green, {1, 2, 3}}, Break{{0, 0, 4}}, SendMessage{"a\"b\n"}, Wait{},
                                         EndTask{}};
    for (const Action& a : actions) CHECK(decode_action(encode(a)) == a);
    Event e{3, 2, Place{Color::red, {1, 0, 1}}, RejectReason::unsupported, std::string(64, 'f')};
    CHECK(decode_event(encode(e)) == e);

    oracle::Rng rng(1);
    Task t;
    t.target = oracle::random_structure(rng, 9);
    t.goal1.sub = t.target;
    t.goal1.description = "tower";
    t.inv1 = oracle::random_inventory(rng);
    t.family = TaskFamily::goal_dependent;
    t.seed = 77;
    t.complexity = BigInt("123456789012345678901234567890");
    CHECK(decode_task(encode(t)) == t);

    EpisodeConfig c;
    c.task = t;
    c.max_rounds = 9;
    c.rng_seed = 5;
    c.within_round_order = RoundOrder::agent2_first;
    const EpisodeConfig back = decode_config(encode(c));
    CHECK(encode(back) == encode(c));
    CHECK(back.task == t);
    CHECK(decode_config(encode(c, false), &t).task == t);
}

TEST_CASE("malformed values are refused") {
    CHECK_THROWS_AS(decode_action(Json{{"type", "fly"}}), Error);
    Json b = encode(Block{Color::red, {0, 0, 0}});
    for (auto& [k, v] : b.items()) {
        if (v == "red") v = "white";
    }
    CHECK_THROWS_AS(decode_block(b), Error);
    CHECK_THROWS_AS(decode_position(Json("far")), Error);
}

TEST_CASE("random states re-encode byte for byte") {
    oracle::Rng rng(12);
    for (int i = 0; i < 200; ++i) {
        const WorldState s = oracle::random_state(rng);
        const std::string j = canonical_json(s);
        CHECK(canonical_json(decode_state(parse_json(j))) == j);
        CHECK(decode_state(parse_json(j)) == s);
    }
}

}
