#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "coblock/task.hpp"
#include "coblock/world.hpp"

namespace coblock {

struct Place {
    Color color = Color::red;
    Position pos;
    friend bool operator==(const Place&, const Place&) = default;
};
struct Break {
    Position pos;
    friend bool operator==(const Break&, const Break&) = default;
};
struct SendMessage {
    std::string text;
    friend bool operator==(const SendMessage&, const SendMessage&) = default;
};
struct Wait {
    friend bool operator==(const Wait&, const Wait&) = default;
};
struct EndTask {
    friend bool operator==(const EndTask&, const EndTask&) = default;
};

using Action = std::variant<Place, Break, SendMessage, Wait, EndTask>;

std::string describe(const Action& a);
/// Place and Break: the actions that count as construction workload.
bool is_construction(const Action& a) noexcept;

enum class RejectReason {
    empty_inventory,
    occupied,
    out_of_bounds,
    unsupported,
    no_block_at_pos,
    would_orphan,
    message_too_long,
    too_many_actions,
};

std::string_view to_string(RejectReason r) noexcept;
RejectReason reject_reason_from_string(std::string_view s);

struct Event {
    int round = 1;
    int agent = 1;
    Action action;
    std::optional<RejectReason> rejection; ///< nullopt means applied
    std::string digest;                    ///< SHA-256 of the post-action state

    bool applied() const noexcept { return !rejection.has_value(); }
    friend bool operator==(const Event&, const Event&) = default;
};

enum class EpisodeStatus { running, success, terminated, round_limit };

std::string_view to_string(EpisodeStatus s) noexcept;
EpisodeStatus status_from_string(std::string_view s);

struct DialogueLine {
    int agent = 1;
    std::string text;
    friend bool operator==(const DialogueLine&, const DialogueLine&) = default;
};

struct WorldState {
    Structure built;
    std::array<Inventory, 2> inventories;
    std::vector<DialogueLine> dialogue;
    std::vector<Event> events;
    int round = 1;
    EpisodeStatus status = EpisodeStatus::running;

    const Inventory& inventory(int agent) const { return inventories.at(agent - 1); }
    Inventory& inventory(int agent) { return inventories.at(agent - 1); }

    friend bool operator==(const WorldState&, const WorldState&) = default;
};

enum class RoundOrder { agent1_first, agent2_first };

std::string_view to_string(RoundOrder o) noexcept;
RoundOrder round_order_from_string(std::string_view s);

/// The subset of episode configuration needed to judge a single action.
struct ActionRules {
    WorldBounds bounds;
    std::size_t message_cap = 1024;
    friend bool operator==(const ActionRules&, const ActionRules&) = default;
};

struct EpisodeConfig {
    Task task;
    int max_rounds = 60;
    std::uint64_t rng_seed = 0;
    std::size_t message_cap = 1024;
    int actions_per_turn = 1;
    RoundOrder within_round_order = RoundOrder::agent1_first;
    WorldBounds bounds;

    ActionRules rules() const { return {bounds, message_cap}; }
};

/// Throws Error("invalid_config") when max_rounds < 1 or actions_per_turn < 1.
void check_config(const EpisodeConfig& config);

WorldState initial_state(const Task& task);

/// Judges an action against a built structure and the acting agent's inventory.
std::optional<RejectReason> check_action(const Structure& built, const Inventory& inventory,
                                         const Action& action, const ActionRules& rules);

std::optional<RejectReason> validate_action(const WorldState& state, int agent, const Action& action,
                                            const EpisodeConfig& config);

/// Applies one action for `agent` (or records its rejection) without closing the round.
WorldState apply_action(const WorldState& state, int agent, const Action& action, const EpisodeConfig& config);

/// Removes the block at `pos`. The block is not refunded to any inventory.
/// Throws Error with the rejection reason as code when the break is invalid.
WorldState apply_break(const WorldState& state, int agent, Position pos, const EpisodeConfig& config);

EpisodeStatus check_termination(const WorldState& state, const EpisodeConfig& config);

/// Runs one round. Each agent's actions are applied in order (the first
/// `actions_per_turn` of them; the rest are recorded as too_many_actions).
/// An empty list counts as a single Wait.
WorldState step_round(const WorldState& state, std::span<const Action> actions1,
                      std::span<const Action> actions2, const EpisodeConfig& config);
WorldState step_round(const WorldState& state, const Action& action1, const Action& action2,
                      const EpisodeConfig& config);

/// Hex SHA-256 of the canonical encoding of the state without its event list.
std::string state_digest(const WorldState& state);

struct ReplayResult {
    WorldState state;
    std::size_t dropped_events = 0; ///< events of a trailing, unfinished round
};

/// Re-executes a log from the task's initial state and checks every digest.
/// A trailing round that lacks one agent's actions is dropped (the log of an
/// episode interrupted mid-round). Throws Error("corrupt_log") on mismatch.
ReplayResult replay_log(std::span<const Event> events, const EpisodeConfig& config);
WorldState replay(std::span<const Event> events, const EpisodeConfig& config);

} // namespace coblock
