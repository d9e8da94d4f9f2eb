#include <sstream>

#include "coblock/agents.hpp"

namespace coblock {

namespace {

std::string replace_all(std::string s, const std::string& from, const std::string& to) {
    for (std::size_t at = s.find(from); at != std::string::npos; at = s.find(from, at + to.size())) {
        s.replace(at, from.size(), to);
    }
    return s;
}

std::string pos_text(Position p, const XmlOptions& xml) {
    // serialize_command gives "break_block(pos=(x, y, z))"; reuse its coordinate rendering.
    std::string cmd = serialize_command(Break{p}, xml);
    return cmd.substr(std::string("break_block(pos=").size(), cmd.size() - std::string("break_block(pos=").size() - 1);
}

std::string task_description(const PromptConfig& cfg) {
    std::ostringstream d;
    d << "You are one of two builders in a shared blocks world. Each of you has a private goal (a set of coloured\n"
         "blocks to build) and a private inventory. The team succeeds when every block of both goals stands in the\n"
         "world. Blocks must rest on the ground or touch another block. Use these commands, one per line:\n"
         "# place a block from your inventory\n"
         "place_block(block_type=red, pos=(0, 1, 1))\n"
         "# remove a block (it does not return to your inventory)\n"
         "break_block(pos=(3, 1, 3))\n"
         "# talk to your partner\n"
         "send_message(message=\"Hello, partner\")\n"
         "# do nothing this round\n"
         "wait()\n"
         "# declare the task finished or impossible\n"
         "end_task()\n\n"
         "Each round you receive your goal as <Motives>, the world as <World> with one <block> line per block,\n"
         "your inventory as <Inventory>, and the conversation so far as <Dialogue>.\n";
    if (cfg.xml.ground_offset) d << "# The ground is the y=1 plane.\n";
    d << "\nAnswer in steps:\n"
         "Step 1: read the world state and summarise what is built and what is still missing.\n";
    if (cfg.partner_modeling) {
        d << "Step 2: model your partner and yourself under the headings \"" << kPartnerSection << "\" and \""
          << kSelfSection
          << "\", giving the long-term goal, short-term goal, inventory and an explanation. Write Unknown for\n"
             "anything you cannot infer from the dialogue or the world.\n";
    }
    if (cfg.reflection) {
        d << "Step 3: under \"" << kReflectionSection
          << "\", check the built blocks against your goal, fix reported errors first, and\n"
             "decide how to work with your partner (lead or follow, how much to help, how strongly to ask).\n";
    }
    d << "Step 4: write the command for this round.";
    return d.str();
}

struct Example {
    const char* family;
    Goal goal;
    Structure world;
    Inventory inventory;
    std::vector<DialogueEntry> dialogue;
    std::vector<std::string> notes;
    std::string analysis;
    std::vector<std::string> partner;
    std::vector<std::string> self;
    std::vector<std::string> reflection;
    Action action;
};

std::vector<Example> examples(const XmlOptions& xml) {
    using C = Color;
    const std::string a1 = seat_label(1), a2 = seat_label(2);
    auto fb = [&](Position p, C built, C want) {
        return render_feedback(std::string(kDefaultFeedbackTemplate), {built, p}, want, xml);
    };
    std::vector<Example> ex;

    ex.push_back({"independent",
                  {Structure{{C::red, {0, 0, 0}}, {C::red, {1, 0, 0}}, {C::red, {2, 0, 0}}}, "a short red wall"},
                  {},
                  Inventory{{C::red, 4}},
                  {},
                  {"# You are Agent 1. Round 1."},
                  "Nothing is built yet. My goal is three red blocks on the ground and I hold four red blocks.",
                  {"# Long-term goal: Unknown", "# Short-term goal: Unknown", "# Partner inventory: Unknown",
                   "# Explanation: My partner has not said anything yet."},
                  {"# Long-term goal: build the red wall", "# Short-term goal: place the first red block",
                   "# My inventory: [red: 4]", "# Explanation: I have every block I need."},
                  {"# Errors: none", "# Strategy: follow; focus on my own goal; passive"},
                  Place{C::red, {0, 0, 0}}});

    ex.push_back({"independent",
                  {Structure{{C::blue, {5, 0, 5}}, {C::blue, {5, 1, 5}}}, "a blue post"},
                  Structure{{C::blue, {5, 0, 5}}, {C::yellow, {0, 0, 0}}},
                  Inventory{{C::blue, 1}},
                  {{a2, "I am building a yellow floor on the left side."}},
                  {"# You are Agent 1. Round 2."},
                  "The first blue block of my post stands. A yellow block at the far side belongs to my partner.",
                  {"# Long-term goal: build a yellow floor", "# Short-term goal: place yellow floor blocks",
                   "# Partner inventory: [yellow: unknown]",
                   "# Explanation: My partner described its goal and it does not overlap mine."},
                  {"# Long-term goal: build the blue post", "# Short-term goal: finish the post",
                   "# My inventory: [blue: 1]", "# Explanation: One block is left and I hold it."},
                  {"# Errors: none", "# Strategy: follow; focus on my own goal; passive"},
                  Place{C::blue, {5, 1, 5}}});

    ex.push_back({"skill_dependent",
                  {Structure{{C::green, {2, 0, 0}}, {C::green, {3, 0, 0}}, {C::purple, {2, 1, 0}}}, {}},
                  Structure{{C::green, {2, 0, 0}}, {C::green, {3, 0, 0}}},
                  Inventory{{C::green, 1}},
                  {},
                  {"# You are Agent 2. Round 3."},
                  "Both green blocks are built. The purple block on top is missing and I have no purple.",
                  {"# Long-term goal: Unknown", "# Short-term goal: Unknown", "# Partner inventory: Unknown",
                   "# Explanation: No messages so far."},
                  {"# Long-term goal: build the green base with a purple top",
                   "# Short-term goal: get the purple block placed", "# My inventory: [green: 1]",
                   "# Explanation: I cannot place purple myself."},
                  {"# Errors: none", "# Strategy: follow; focus on my own goal; proactive"},
                  SendMessage{"I have no purple blocks. Could you place a purple block at " +
                              pos_text({2, 1, 0}, xml) + "?"}});

    ex.push_back({"skill_dependent",
                  {Structure{{C::red, {0, 0, 2}}}, {}},
                  Structure{{C::red, {0, 0, 2}}, {C::yellow, {4, 0, 0}}},
                  Inventory{{C::black, 2}},
                  {{a1, "I have no black. Could you place a black block at " + pos_text({4, 1, 0}, xml) + "?"}},
                  {"# You are Agent 2. Round 4."},
                  "My red block is done. My partner asked for a black block on top of its yellow block.",
                  {"# Long-term goal: build a structure that needs black", "# Short-term goal: get a black block placed",
                   "# Partner inventory: [black: 0]", "# Explanation: It told me it has no black."},
                  {"# Long-term goal: build my red block", "# Short-term goal: help my partner",
                   "# My inventory: [black: 2]", "# Explanation: My goal is complete and I have spare black blocks."},
                  {"# Errors: none", "# Strategy: follow; prioritise helping my partner; passive"},
                  Place{C::black, {4, 1, 0}}});

    ex.push_back({"skill_dependent",
                  {Structure{{C::blue, {1, 0, 0}}, {C::yellow, {1, 1, 0}}}, {}},
                  Structure{{C::blue, {1, 0, 0}}, {C::blue, {1, 1, 0}}},
                  Inventory{{C::yellow, 1}},
                  {},
                  {"# You are Agent 1. Round 3.", fb({1, 1, 0}, C::blue, C::yellow)},
                  "Two blue blocks stand at x=1, but my goal wants yellow on top.",
                  {"# Long-term goal: Unknown", "# Short-term goal: Unknown", "# Partner inventory: Unknown",
                   "# Explanation: No messages so far."},
                  {"# Long-term goal: build blue with yellow on top", "# Short-term goal: replace the top block",
                   "# My inventory: [yellow: 1]", "# Explanation: The top block has the wrong colour."},
                  {"# Errors: the block at " + pos_text({1, 1, 0}, xml) + " is blue but should be yellow",
                   "# Strategy: follow; focus on my own goal; passive"},
                  Break{{1, 1, 0}}});

    ex.push_back({"goal_dependent",
                  {Structure{{C::yellow, {0, 2, 0}}, {C::yellow, {1, 2, 0}}, {C::yellow, {2, 2, 0}}}, "a deck"},
                  {},
                  Inventory{{C::yellow, 3}},
                  {},
                  {"# You are Agent 2. Round 1."},
                  "Nothing is built. My deck floats two blocks above the ground, so it needs supports first.",
                  {"# Long-term goal: Unknown", "# Short-term goal: Unknown", "# Partner inventory: Unknown",
                   "# Explanation: Nothing is known yet."},
                  {"# Long-term goal: build the yellow deck", "# Short-term goal: wait for supports",
                   "# My inventory: [yellow: 3]", "# Explanation: No block of my deck is supported yet."},
                  {"# Errors: none", "# Strategy: follow; focus on my own goal; passive"},
                  SendMessage{"My deck sits at height 2 over x=0..2. Are you building the pillars under it?"}});

    ex.push_back({"goal_dependent",
                  {Structure{{C::green, {0, 0, 0}}, {C::green, {0, 1, 0}}, {C::green, {2, 0, 0}}, {C::green, {2, 1, 0}}},
                   "two green pillars"},
                  Structure{{C::green, {0, 0, 0}}},
                  Inventory{{C::green, 3}},
                  {{a2, "My deck sits at height 2 over x=0..2. Are you building the pillars under it?"}},
                  {"# You are Agent 1. Round 2."},
                  "One pillar block stands. My partner's deck rests on my pillars.",
                  {"# Long-term goal: build a deck on my pillars", "# Short-term goal: wait for the pillars",
                   "# Partner inventory: Unknown", "# Explanation: Its deck needs my pillars underneath."},
                  {"# Long-term goal: build the two pillars", "# Short-term goal: raise the first pillar",
                   "# My inventory: [green: 3]", "# Explanation: My partner is waiting, so I build quickly."},
                  {"# Errors: none", "# Strategy: lead; balance my goal and helping; passive"},
                  Place{C::green, {0, 1, 0}}});

    ex.push_back({"goal_dependent",
                  {Structure{{C::purple, {3, 2, 1}}}, {}},
                  Structure{{C::red, {3, 0, 1}}},
                  Inventory{{C::purple, 1}},
                  {{a1, "I need a block at " + pos_text({3, 1, 1}, xml) + " before I can place mine."}},
                  {"# You are Agent 1. Round 6."},
                  "Only the red base stands. My purple block needs a block below it that my partner owns.",
                  {"# Long-term goal: build a small red column", "# Short-term goal: Unknown",
                   "# Partner inventory: Unknown", "# Explanation: It has not acted for four rounds."},
                  {"# Long-term goal: place the purple block on top", "# Short-term goal: get the column finished",
                   "# My inventory: [purple: 1]", "# Explanation: I am blocked until the column grows."},
                  {"# Errors: none", "# Strategy: follow; focus on my own goal; proactive"},
                  SendMessage{"Please build the red block at " + pos_text({3, 1, 1}, xml) +
                              " so I can proceed with my purple block."}});
    return ex;
}

std::string render_example(int index, const Example& e, const PromptConfig& cfg) {
    std::ostringstream o;
    o << "## Example " << index << " (" << e.family << ")\n<Input>\n"
      << serialize_motive(e.goal, cfg.xml) << "\n"
      << serialize_world(e.world, cfg.xml) << "\n"
      << serialize_inventory(e.inventory, cfg.xml) << "\n"
      << serialize_dialogue(e.dialogue) << "\n";
    for (const auto& n : e.notes) {
        if (!cfg.reflection && n.rfind("# Feedback", 0) == 0) continue;
        o << n << "\n";
    }
    o << "</Input>\n## Output\n# Step 1: World analysis\n# " << e.analysis << "\n";
    if (cfg.partner_modeling) {
        o << kPartnerSection << "\n";
        for (const auto& l : e.partner) o << l << "\n";
        o << kSelfSection << "\n";
        for (const auto& l : e.self) o << l << "\n";
    }
    if (cfg.reflection) {
        o << kReflectionSection << "\n";
        for (const auto& l : e.reflection) o << l << "\n";
    }
    o << "# Step 4: Action\n" << serialize_command(e.action, cfg.xml);
    return o.str();
}

std::string altruism_words(double a) {
    if (a < 0.4) return "focus on my own goal";
    if (a <= 0.6) return "balance my goal and helping";
    return "prioritise helping my partner";
}

} // namespace

std::string render_feedback(const std::string& tmpl, const Block& built, Color expected, const XmlOptions& xml) {
    std::string s = replace_all(tmpl, "{pos}", pos_text(built.pos, xml));
    s = replace_all(s, "{built}", std::string(to_string(built.color)));
    return replace_all(s, "{expected}", std::string(to_string(expected)));
}

PromptBundle build_prompt(const AgentView& view, const PromptConfig& config, const ReflectionReport* reflection) {
    PromptBundle b;
    b.task_description = task_description(config);
    const auto ex = examples(config.xml);
    for (std::size_t i = 0; i < ex.size(); ++i) b.cot_examples.push_back(render_example(static_cast<int>(i) + 1, ex[i], config));

    b.motive_xml = serialize_motive(view.goal, config.xml);
    b.world_xml = serialize_world(view.built, config.xml);
    b.inventory_xml = serialize_inventory(view.inventory, config.xml);
    b.dialogue_xml = serialize_dialogue(dialogue_entries(view.dialogue));

    b.feedback.push_back("# You are " + seat_label(view.agent_id) + ". Round " + std::to_string(view.round) + ".");
    if (!view.own_events.empty()) {
        const Event& last = view.own_events.back();
        std::string line = "# Your last action: " + serialize_command(last.action, config.xml);
        if (last.rejection) line += " (rejected: " + std::string(to_string(*last.rejection)) + ")";
        b.feedback.push_back(line);
    }
    if (config.reflection && reflection) {
        for (const Block& m : reflection->mismatches.misplaced) {
            if (auto want = reflection->reference.at(m.pos)) b.feedback.push_back(render_feedback(config.feedback_template, m, *want, config.xml));
        }
        const Strategy& s = reflection->strategy;
        b.feedback.push_back("# Strategy: " + std::string(to_string(s.team_role)) + "; " + altruism_words(s.altruism) +
                             "; " + std::string(to_string(s.persuasion)));
    }
    return b;
}

} // namespace coblock
