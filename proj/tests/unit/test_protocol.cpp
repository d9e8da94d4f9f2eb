#include <doctest.h>

#include "coblock/episode.hpp"
#include "oracles.hpp"

using namespace coblock;

TEST_SUITE("protocol") {

TEST_CASE("world, inventory and dialogue serialize in the prompt format") {
    const Structure s{{Color::red, {0, 0, 2}}, {Color::yellow, {0, 1, 2}}};
    CHECK(serialize_world(s) ==
          "<World>\n    <block block_type=\"red\", pos=\"(0, 0, 2)\">\n    <block block_type=\"yellow\", pos=\"(0, 1, 2)\">\n</World>");
    CHECK(serialize_world(s, XmlOptions{true}).find("pos=\"(0, 1, 2)\"") != std::string::npos);
    CHECK(serialize_world(Structure{}) == "<World>\n</World>");
    CHECK(serialize_inventory(Inventory{{Color::yellow, 20}, {Color::red, 0}}) ==
          "<Inventory>\n    <block block_type=\"yellow\", count=20>\n</Inventory>");
    CHECK(serialize_inventory(Inventory{}, {}, 2) == "<Inventory agent=\"2\">\n</Inventory>");
    CHECK(serialize_dialogue({{"Agent 1", "say \"hi\""}}) ==
          "<Dialogue>\n    <sender=\"Agent 1\", message=\"say \\\"hi\\\"\">\n</Dialogue>");
}

TEST_CASE("commands print canonically and parse back") {
    const std::vector<Action> all = {Place{Color::red, {0, 1, 1}}, Break{{3, 1, 3}}, SendMessage{"it's \"done\"\n"}, Wait{},
                                     EndTask{}};
    CHECK(serialize_command(all[0]) == "place_block(block_type=red, pos=(0, 1, 1))");
    CHECK(serialize_command(all[1]) == "break_block(pos=(3, 1, 3))");
    CHECK(serialize_command(all[3]) == "wait()");
    CHECK(serialize_command(all[4]) == "end_task()");
    std::string text;
    for (const Action& a : all) text += serialize_command(a) + "\n";
    CHECK(parse_commands(text).commands == all);
    for (const Action& a : all) CHECK(parse_commands(serialize_command(a, XmlOptions{true}), XmlOptions{true}).commands == std::vector<Action>{a});
}

TEST_CASE("command parsing tolerates decoration and reports junk") {
    const auto p = parse_commands("# comment place_block(block_type=red, pos=(0,0,0))\n"
                                  "- `place_block(block_type =\"blue\", pos=(1, 0, 0))`\n"
                                  "place_block(block_type=orange, pos=(1, 0, 0))\n"
                                  "break_block(pos=(1, 0))\n"
                                  "Then I will wait.\n");
    CHECK(p.commands == std::vector<Action>{Place{Color::blue, {1, 0, 0}}});
    CHECK(p.diagnostics.size() >= 2);
}

TEST_CASE("inputs with mixed quoting parse") {
    const auto in = parse_input("<World>\n<block block_type=``red'', pos=\"(1, 0, 1)\">\n<block block_type=“blue”, pos=(2, 0, 1)>\n</World>\n"
                                "<Inventory agent=\"2\">\n<block block_type=green count=4>\n</Inventory>\n"
                                "<Dialogue>\n<chat sender=\"Agent 2\" message=\"a, b\"/>\n</Dialogue>");
    REQUIRE(in.world);
    CHECK(*in.world == std::vector<Block>{{Color::red, {1, 0, 1}}, {Color::blue, {2, 0, 1}}});
    CHECK(in.inventories.at(2) == Inventory{{Color::green, 4}});
    CHECK(in.dialogue->at(0) == DialogueEntry{"Agent 2", "a, b"});
}

TEST_CASE("bad colours and positions become diagnostics") {
    const auto in = parse_input("<World>\n<block block_type=\"white\", pos=\"(1, 0, 1)\">\n<block block_type=\"red\", pos=\"(x, 0)\">\n</World>");
    CHECK(in.world->empty());
    CHECK(in.diagnostics.size() == 2);
}

TEST_CASE("states round-trip with any message text") {
    oracle::Rng rng(77);
    for (int i = 0; i < 300; ++i) {
        const WorldState s = oracle::random_state(rng);
        const XmlOptions xml{i % 3 == 0};
        const std::string text = serialize_state(s, xml);
        const WorldState back = parse_state(text, xml);
        CHECK(back.built == s.built);
        CHECK(back.inventories == s.inventories);
        CHECK(back.dialogue == s.dialogue);
        CHECK(serialize_state(back, xml) == text);
    }
    CHECK_THROWS_AS(parse_state("<World>\n</World>"), Error);
}

TEST_CASE("replies split into partner model, self model and commands") {
    const AgentReply r = parse_reply("# Partner Modelling\n# Long-term goal: Unknown...\n# Short-term goal: fetch blue\n"
                                     "# Partner inventory: [blue: 3, red: unknown]\n# Immediate plan: place blue\n# Plan executed: yes\n"
                                     "# Self Modelling\n# Long-term goal: the tower\n# My inventory: [red: 2]\n"
                                     "place_block(block_type=red, pos=(0, 0, 0))\n");
    CHECK_FALSE(r.partner.long_term_goal);
    CHECK(r.partner.short_term_goal == "fetch blue");
    CHECK(r.partner.inventory_beliefs == InventoryBelief{{Color::blue, 3}, {Color::red, std::nullopt}});
    CHECK(r.partner.plan_executed == true);
    CHECK(r.self.long_term_goal == "the tower");
    CHECK(r.self.remaining_inventory == InventoryBelief{{Color::red, 2}});
    CHECK(r.commands.size() == 1);
    CHECK(format_inventory_belief(*r.partner.inventory_beliefs) == "[red: unknown, blue: 3]");
}

TEST_CASE("prompt bundle layout") {
    PromptBundle b;
    b.task_description = "D";
    b.cot_examples = {"E1"};
    b.motive_xml = "M";
    b.world_xml = "W";
    b.inventory_xml = "I";
    b.dialogue_xml = "G";
    b.feedback = {"# F"};
    CHECK(b.render() == "D\n\nE1\n\n<Input>\nM\nW\nI\nG\n# F\n</Input>");
}

}
