#pragma once

// Prompt-side text formats: the XML-like world/inventory/dialogue/motive
// sections, the command grammar and the structured reply format.

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "coblock/engine.hpp"
#include "coblock/world.hpp"

namespace coblock {

struct XmlOptions {
    /// Prompt coordinates put the ground at y=1: add 1 on output, subtract on input.
    bool ground_offset = false;
};

struct DialogueEntry {
    std::string sender;
    std::string message;
    friend bool operator==(const DialogueEntry&, const DialogueEntry&) = default;
};

/// "Agent 1" / "Agent 2".
std::string seat_label(int agent);
std::vector<DialogueEntry> dialogue_entries(const std::vector<DialogueLine>& lines);

std::string serialize_world(const Structure& built, const XmlOptions& opts = {});
/// `agent` adds an agent="N" attribute (used when both inventories are listed).
std::string serialize_inventory(const Inventory& inv, const XmlOptions& opts = {}, std::optional<int> agent = {});
std::string serialize_dialogue(const std::vector<DialogueEntry>& entries);
std::string serialize_motive(const Goal& goal, const XmlOptions& opts = {});
/// World, both inventories and the dialogue, in that order.
std::string serialize_state(const WorldState& state, const XmlOptions& opts = {});

struct ParseDiagnostic {
    int line = 0; ///< 1-based
    std::string code; ///< unknown_color, bad_position, malformed, unknown_command
    std::string text;
    friend bool operator==(const ParseDiagnostic&, const ParseDiagnostic&) = default;
};

struct Motive {
    std::optional<std::string> description;
    std::vector<Block> blocks;
    std::vector<std::string> texts; ///< textual motives
};

/// Everything recovered from a prompt input block. Inventories are keyed by
/// their agent attribute, 0 when untagged.
struct ParsedInput {
    std::optional<std::vector<Block>> world;
    std::map<int, Inventory> inventories;
    std::optional<std::vector<DialogueEntry>> dialogue;
    std::optional<Motive> motive;
    std::vector<ParseDiagnostic> diagnostics;
};

/// Tolerant reader: accepts sections "closed" by a second opening tag,
/// <chat sender=.../> and <sender=...> dialogue lines, straight, curly and
/// ``...'' quotes, bare attribute values and `#` comment lines.
ParsedInput parse_input(std::string_view text, const XmlOptions& opts = {});

/// Rebuilds the built structure, both inventories and the dialogue from
/// serialize_state output. Throws Error("parse") when a section is missing.
WorldState parse_state(std::string_view text, const XmlOptions& opts = {});

/// Canonical command text, e.g. place_block(block_type=red, pos=(0, 1, 1)).
std::string serialize_command(const Action& action, const XmlOptions& opts = {});

struct CommandParse {
    std::vector<Action> commands;
    std::vector<ParseDiagnostic> diagnostics;
};

/// Line-wise scan for place_block / break_block / send_message / wait /
/// end_task. Prose and `#` lines are skipped; bad command lines produce a
/// diagnostic and are dropped.
CommandParse parse_commands(std::string_view text, const XmlOptions& opts = {});

/// Per-colour belief; nullopt means "unknown".
using InventoryBelief = std::map<Color, std::optional<int>>;

struct PartnerModel {
    std::optional<std::string> long_term_goal;
    std::optional<std::string> short_term_goal;
    std::optional<InventoryBelief> inventory_beliefs;
    std::optional<std::string> immediate_plan;
    std::optional<bool> plan_executed;
    std::optional<std::string> explanation;
    friend bool operator==(const PartnerModel&, const PartnerModel&) = default;
};

struct SelfModel {
    std::optional<std::string> long_term_goal;
    std::optional<std::string> short_term_goal;
    std::optional<InventoryBelief> remaining_inventory;
    std::optional<std::string> explanation;
    friend bool operator==(const SelfModel&, const SelfModel&) = default;
};

struct AgentReply {
    PartnerModel partner;
    SelfModel self;
    std::vector<Action> commands;
    std::vector<ParseDiagnostic> diagnostics;
    std::string raw_text;
};

AgentReply parse_reply(std::string_view text, const XmlOptions& opts = {});

/// "[red: unknown, green: 20]"; unknown colours are skipped.
InventoryBelief parse_inventory_belief(std::string_view text);
std::string format_inventory_belief(const InventoryBelief& belief);

struct PromptBundle {
    std::string task_description;
    std::vector<std::string> cot_examples;
    std::string motive_xml;
    std::string world_xml;
    std::string inventory_xml;
    std::string dialogue_xml;
    std::vector<std::string> feedback; ///< extra lines inside <Input>, e.g. reflection results

    /// Description, then the examples, then <Input>...</Input>.
    std::string render() const;
};

} // namespace coblock
