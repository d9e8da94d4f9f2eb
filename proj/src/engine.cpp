#include "coblock/engine.hpp"

#include <algorithm>

#include "coblock/codec.hpp"

namespace coblock {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

constexpr std::array<std::string_view, 8> kReasonNames = {
    "empty_inventory", "occupied",        "out_of_bounds",   "unsupported",
    "no_block_at_pos", "would_orphan",    "message_too_long", "too_many_actions"};

constexpr std::array<std::string_view, 4> kStatusNames = {"running", "success", "terminated", "round_limit"};

int first_agent(RoundOrder order) { return order == RoundOrder::agent1_first ? 1 : 2; }

} // namespace

std::string describe(const Action& a) {
    return std::visit(Overloaded{
                          [](const Place& p) {
                              return "place " + std::string(to_string(p.color)) + " " + to_string(p.pos);
                          },
                          [](const Break& b) { return "break " + to_string(b.pos); },
                          [](const SendMessage& m) { return "say \"" + m.text + "\""; },
                          [](const Wait&) { return std::string("wait"); },
                          [](const EndTask&) { return std::string("end_task"); },
                      },
                      a);
}

bool is_construction(const Action& a) noexcept {
    return std::holds_alternative<Place>(a) || std::holds_alternative<Break>(a);
}

std::string_view to_string(RejectReason r) noexcept { return kReasonNames[static_cast<std::size_t>(r)]; }

RejectReason reject_reason_from_string(std::string_view s) {
    for (std::size_t i = 0; i < kReasonNames.size(); ++i) {
        if (kReasonNames[i] == s) return static_cast<RejectReason>(i);
    }
    throw Error("parse", "unknown reject reason '" + std::string(s) + "'");
}

std::string_view to_string(EpisodeStatus s) noexcept { return kStatusNames[static_cast<std::size_t>(s)]; }

EpisodeStatus status_from_string(std::string_view s) {
    for (std::size_t i = 0; i < kStatusNames.size(); ++i) {
        if (kStatusNames[i] == s) return static_cast<EpisodeStatus>(i);
    }
    throw Error("parse", "unknown status '" + std::string(s) + "'");
}

std::string_view to_string(RoundOrder o) noexcept {
    return o == RoundOrder::agent1_first ? "agent1_first" : "agent2_first";
}

RoundOrder round_order_from_string(std::string_view s) {
    if (s == "agent1_first") return RoundOrder::agent1_first;
    if (s == "agent2_first") return RoundOrder::agent2_first;
    throw Error("parse", "unknown round order '" + std::string(s) + "'");
}

void check_config(const EpisodeConfig& config) {
    if (config.max_rounds < 1) throw Error("invalid_config", "max_rounds must be at least 1");
    if (config.actions_per_turn < 1) throw Error("invalid_config", "actions_per_turn must be at least 1");
}

WorldState initial_state(const Task& task) {
    WorldState s;
    s.inventories = {task.inv1, task.inv2};
    return s;
}

std::optional<RejectReason> check_action(const Structure& built, const Inventory& inventory,
                                         const Action& action, const ActionRules& rules) {
    return std::visit(
        Overloaded{
            [&](const Place& p) -> std::optional<RejectReason> {
                if (!rules.bounds.contains(p.pos)) return RejectReason::out_of_bounds;
                if (inventory.count(p.color) < 1) return RejectReason::empty_inventory;
                if (built.contains(p.pos)) return RejectReason::occupied;
                if (!is_supported({p.color, p.pos}, built, rules.bounds)) return RejectReason::unsupported;
                return std::nullopt;
            },
            [&](const Break& b) -> std::optional<RejectReason> {
                if (!rules.bounds.contains(b.pos)) return RejectReason::out_of_bounds;
                if (!built.contains(b.pos)) return RejectReason::no_block_at_pos;
                Structure rest = built;
                rest.erase(b.pos);
                if (!validate_structure(rest, rules.bounds).empty()) return RejectReason::would_orphan;
                return std::nullopt;
            },
            [&](const SendMessage& m) -> std::optional<RejectReason> {
                if (m.text.size() > rules.message_cap) return RejectReason::message_too_long;
                return std::nullopt;
            },
            [](const Wait&) -> std::optional<RejectReason> { return std::nullopt; },
            [](const EndTask&) -> std::optional<RejectReason> { return std::nullopt; },
        },
        action);
}

std::optional<RejectReason> validate_action(const WorldState& state, int agent, const Action& action,
                                            const EpisodeConfig& config) {
    return check_action(state.built, state.inventory(agent), action, config.rules());
}

namespace {

void mutate(WorldState& s, int agent, const Action& action) {
    std::visit(Overloaded{
                   [&](const Place& p) {
                       s.inventory(agent).take(p.color);
                       s.built.insert({p.color, p.pos});
                   },
                   [&](const Break& b) { s.built.erase(b.pos); },
                   [&](const SendMessage& m) { s.dialogue.push_back({agent, m.text}); },
                   [](const Wait&) {},
                   [](const EndTask&) {},
               },
               action);
}

void record(WorldState& s, int agent, const Action& action, std::optional<RejectReason> rejection) {
    if (!rejection) mutate(s, agent, action);
    Event e{s.round, agent, action, rejection, {}};
    e.digest = state_digest(s);
    s.events.push_back(std::move(e));
}

void close_round(WorldState& s, const EpisodeConfig& config) {
    ++s.round;
    s.status = check_termination(s, config);
}

void run_turn(WorldState& s, int agent, std::span<const Action> actions, const EpisodeConfig& config) {
    if (actions.empty()) {
        record(s, agent, Wait{}, std::nullopt);
        return;
    }
    for (std::size_t i = 0; i < actions.size(); ++i) {
        if (static_cast<int>(i) >= config.actions_per_turn) {
            record(s, agent, actions[i], RejectReason::too_many_actions);
            continue;
        }
        record(s, agent, actions[i], validate_action(s, agent, actions[i], config));
    }
}

} // namespace

WorldState apply_action(const WorldState& state, int agent, const Action& action, const EpisodeConfig& config) {
    WorldState next = state;
    record(next, agent, action, validate_action(state, agent, action, config));
    return next;
}

WorldState apply_break(const WorldState& state, int agent, Position pos, const EpisodeConfig& config) {
    Action action = Break{pos};
    if (auto reason = validate_action(state, agent, action, config)) {
        throw Error(std::string(to_string(*reason)), "cannot break at " + to_string(pos));
    }
    WorldState next = state;
    record(next, agent, action, std::nullopt);
    return next;
}

EpisodeStatus check_termination(const WorldState& state, const EpisodeConfig& config) {
    if (diff_structures(state.built, config.task.target).exact()) return EpisodeStatus::success;
    bool ended = std::any_of(state.events.begin(), state.events.end(), [](const Event& e) {
        return e.applied() && std::holds_alternative<EndTask>(e.action);
    });
    if (ended) return EpisodeStatus::terminated;
    if (state.round > config.max_rounds) return EpisodeStatus::round_limit;
    return EpisodeStatus::running;
}

WorldState step_round(const WorldState& state, std::span<const Action> actions1,
                      std::span<const Action> actions2, const EpisodeConfig& config) {
    if (state.status != EpisodeStatus::running) {
        throw Error("episode_over", "step_round called on a finished episode");
    }
    WorldState next = state;
    int first = first_agent(config.within_round_order);
    int second = 3 - first;
    run_turn(next, first, first == 1 ? actions1 : actions2, config);
    run_turn(next, second, second == 1 ? actions1 : actions2, config);
    close_round(next, config);
    return next;
}

WorldState step_round(const WorldState& state, const Action& action1, const Action& action2,
                      const EpisodeConfig& config) {
    return step_round(state, std::span<const Action>(&action1, 1), std::span<const Action>(&action2, 1), config);
}

std::string state_digest(const WorldState& state) {
    Json j = encode(state);
    j.erase("events");
    return sha256_hex(dump_canonical(j));
}

ReplayResult replay_log(std::span<const Event> events, const EpisodeConfig& config) {
    check_config(config);
    ReplayResult result{initial_state(config.task), 0};
    WorldState& s = result.state;
    int first = first_agent(config.within_round_order);

    std::size_t i = 0;
    while (i < events.size()) {
        const int round = events[i].round;
        if (s.status != EpisodeStatus::running) {
            throw Error("corrupt_log", "events after the episode finished (round " + std::to_string(round) + ")");
        }
        if (round != s.round) {
            throw Error("corrupt_log", "expected round " + std::to_string(s.round) + " but log has round " +
                                           std::to_string(round));
        }
        std::size_t end = i;
        while (end < events.size() && events[end].round == round) ++end;

        bool saw_first = false, saw_second = false;
        for (std::size_t k = i; k < end; ++k) {
            const Event& e = events[k];
            if (e.agent != 1 && e.agent != 2) throw Error("corrupt_log", "bad agent id in log");
            if (e.agent == first) {
                if (saw_second) throw Error("corrupt_log", "within-round order violated in round " + std::to_string(round));
                saw_first = true;
            } else {
                saw_second = true;
            }
        }
        if (!(saw_first && saw_second)) {
            if (end == events.size()) {
                result.dropped_events = end - i;
                break;
            }
            throw Error("corrupt_log", "round " + std::to_string(round) + " is missing an agent's turn");
        }

        int agent = 0;
        int taken = 0;
        for (std::size_t k = i; k < end; ++k) {
            const Event& e = events[k];
            if (e.agent != agent) {
                agent = e.agent;
                taken = 0;
            }
            std::optional<RejectReason> expected = taken >= config.actions_per_turn
                                                       ? std::optional<RejectReason>(RejectReason::too_many_actions)
                                                       : validate_action(s, agent, e.action, config);
            ++taken;
            if (expected != e.rejection) {
                throw Error("corrupt_log", "outcome mismatch at round " + std::to_string(round));
            }
            record(s, agent, e.action, expected);
            if (s.events.back().digest != e.digest) {
                throw Error("corrupt_log", "digest mismatch at round " + std::to_string(round));
            }
        }
        close_round(s, config);
        i = end;
    }
    return result;
}

WorldState replay(std::span<const Event> events, const EpisodeConfig& config) {
    return replay_log(events, config).state;
}

} // namespace coblock
