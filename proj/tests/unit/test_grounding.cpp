#include <doctest.h>

#include "coblock/grounding.hpp"
#include "coblock/task_forge.hpp"
#include "oracles.hpp"

using namespace coblock;

namespace {

const Structure kArch{{Color::red, {0, 0, 0}}, {Color::red, {2, 0, 0}}, {Color::blue, {0, 1, 0}},
                      {Color::blue, {1, 1, 0}}, {Color::blue, {2, 1, 0}}};

bool supported_in_order(const std::vector<Block>& order) {
    Structure built;
    for (const Block& b : order) {
        if (!oracle::grounded([&] {
                Structure s = built;
                s.insert(b);
                return s;
            }()))
            return false;
        built.insert(b);
    }
    return true;
}

} // namespace

TEST_SUITE("grounding") {

TEST_CASE("text descriptions round-trip") {
    CHECK(describe_structure_text(kArch) ==
          "A structure of 5 blocks. Layer 0: a red block at (0, 0, 0); a red block at (2, 0, 0). Layer 1: a blue block "
          "at (0, 1, 0); a blue block at (1, 1, 0); a blue block at (2, 1, 0).");
    const XmlOptions off{true};
    CHECK(describe_structure_text(kArch, off).find("Layer 1: a red block at (0, 1, 0)") != std::string::npos);
    oracle::Rng rng(5);
    for (int i = 0; i < 100; ++i) {
        const Structure s = oracle::random_structure(rng, 1 + static_cast<int>(rng() % 12));
        for (const XmlOptions& o : {XmlOptions{}, off}) {
            Structure back;
            for (const Block& b : parse_structure_text(describe_structure_text(s, o), o)) back.insert(b);
            CHECK(back == s);
        }
    }
}

TEST_CASE("build order keeps every placement supported") {
    oracle::Rng rng(9);
    for (int i = 0; i < 200; ++i) {
        const Structure s = oracle::random_structure(rng, 1 + static_cast<int>(rng() % 15));
        std::vector<Block> shuffled = s.blocks();
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        const auto order = build_order(shuffled);
        CHECK(order.size() == s.size());
        CHECK(supported_in_order(order));
    }
}

TEST_CASE("part 2 grading executes the commands") {
    const std::string good = "place_block(block_type=red, pos=(0, 0, 0))\nplace_block(block_type=red, pos=(2, 0, 0))\n"
                             "place_block(block_type=blue, pos=(0, 1, 0))\nplace_block(block_type=blue, pos=(1, 1, 0))\n"
                             "place_block(block_type=blue, pos=(2, 1, 0))\n";
    CHECK(grade_grounding(2, kArch, good).success);

    // the bridge block first is unsupported, so it is rejected
    const std::string bad_order = "place_block(block_type=blue, pos=(1, 1, 0))\n" + good;
    const GroundingCase c = grade_grounding(2, kArch, bad_order);
    CHECK(c.success);
    CHECK(c.detail.find("1 rejected") != std::string::npos);

    const std::string missing = good.substr(0, good.rfind("place_block"));
    const GroundingCase m = grade_grounding(2, kArch, missing);
    CHECK_FALSE(m.success);
    CHECK(m.detail.find("1 missing") != std::string::npos);

    CHECK_FALSE(grade_grounding(2, kArch, "I would build an arch.").success);
    // wrong colour: the stock holds only the target's blocks
    std::string wrong = good;
    wrong.replace(wrong.find("blue"), 4, "red");
    CHECK_FALSE(grade_grounding(2, kArch, wrong).success);
    CHECK_THROWS_AS(grade_grounding(4, kArch, good), Error);
}

TEST_CASE("part 1 grading checks colours and counts") {
    CHECK(grade_grounding(1, kArch, "Two red pillars hold a bridge of 3 blue blocks.").success);
    const GroundingCase c = grade_grounding(1, kArch, "Red pillars under a blue bridge.");
    CHECK_FALSE(c.success);
    CHECK(c.score == doctest::Approx(0.5));
}

TEST_CASE("the oracle solves every part on generated structures") {
    std::vector<std::pair<std::string, Structure>> targets;
    for (int k = 0; k < 5; ++k) {
        targets.emplace_back("t" + std::to_string(k),
                             generate_structure(builtin_rule(static_cast<StructureKind>(k)), {}, 11 + k));
    }
    for (int part = 1; part <= 3; ++part) {
        for (const XmlOptions& o : {XmlOptions{}, XmlOptions{true}}) {
            const auto report = run_grounding(part, targets,
                                              [&](const std::string& p) { return oracle_grounding_reply(part, p, o); }, o);
            CHECK(report.success_rate() == 1.0);
            const Json j = encode(report);
            CHECK(j["part"] == part);
            CHECK(j["cases"].size() == targets.size());
        }
    }
}

TEST_CASE("solver failures count against the rate") {
    const std::vector<std::pair<std::string, Structure>> targets = {{"a", kArch}, {"b", kArch}};
    int n = 0;
    const auto report = run_grounding(2, targets, [&](const std::string& p) {
        if (n++ == 0) throw std::runtime_error("offline");
        return oracle_grounding_reply(2, p);
    });
    CHECK(report.success_rate() == 0.5);
    CHECK(report.cases[0].detail.find("offline") != std::string::npos);
    CHECK(GroundingReport{}.success_rate() == 0.0);
}

}
