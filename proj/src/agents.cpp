#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

#include "coblock/agents.hpp"

namespace coblock {

AgentView make_view(const WorldState& state, const Task& task, int agent, const EpisodeConfig& config) {
    AgentView v;
    v.agent_id = agent;
    v.goal = task.goal(agent);
    v.inventory = state.inventory(agent);
    v.built = state.built;
    v.dialogue = state.dialogue;
    for (const Event& e : state.events) {
        Event copy = e;
        copy.digest.clear();
        if (e.agent == agent) {
            v.own_events.push_back(std::move(copy));
        } else if (e.applied()) {
            v.partner_events.push_back(std::move(copy));
        }
    }
    v.round = state.round;
    v.actions_per_turn = config.actions_per_turn;
    v.rules = config.rules();
    return v;
}

std::string request_text(const Block& b) {
    return "REQUEST place " + std::string(to_string(b.color)) + " (" + std::to_string(b.pos.x) + "," +
           std::to_string(b.pos.y) + "," + std::to_string(b.pos.z) + ")";
}

std::optional<Block> parse_request(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string word, verb, colour;
    char open = 0, c1 = 0, c2 = 0, close = 0;
    Position p;
    if (!(in >> word >> verb >> colour) || word != "REQUEST" || verb != "place") return std::nullopt;
    auto color = parse_color(colour);
    if (!color) return std::nullopt;
    if (!(in >> open >> p.x >> c1 >> p.y >> c2 >> p.z >> close)) return std::nullopt;
    if (open != '(' || c1 != ',' || c2 != ',' || close != ')') return std::nullopt;
    return Block{*color, p};
}

std::vector<Block> requests_from(const std::vector<DialogueLine>& dialogue, int speaker) {
    std::vector<Block> out;
    std::set<Position> seen;
    for (const auto& line : dialogue) {
        if (line.agent != speaker) continue;
        if (auto b = parse_request(line.text); b && seen.insert(b->pos).second) out.push_back(*b);
    }
    return out;
}

namespace {

ColorCounts remaining_need(const AgentView& view) {
    ColorCounts need{};
    for (const auto& [p, c] : view.goal.sub.map()) {
        if (!view.built.contains(p)) ++need[static_cast<std::size_t>(c)];
    }
    return need;
}

bool placeable(const AgentView& view, const Block& b) {
    return view.rules.bounds.contains(b.pos) && !view.built.contains(b.pos) && view.inventory.count(b.color) > 0 &&
           is_supported(b, view.built, view.rules.bounds);
}

std::optional<Block> next_own_block(const AgentView& view) {
    for (const auto& [p, c] : view.goal.sub.map()) {
        if (placeable(view, {c, p})) return Block{c, p};
    }
    return std::nullopt;
}

bool goal_complete(const AgentView& view) {
    return std::all_of(view.goal.sub.map().begin(), view.goal.sub.map().end(),
                       [&](const auto& kv) { return view.built.at(kv.first) == kv.second; });
}

std::vector<Block> bottom_up(const Structure& s) {
    std::vector<Block> out = s.blocks();
    std::stable_sort(out.begin(), out.end(), [](const Block& a, const Block& b) {
        return std::tie(a.pos.y, a.pos.x, a.pos.z) < std::tie(b.pos.y, b.pos.x, b.pos.z);
    });
    return out;
}

int last_partner_activity(const AgentView& view) {
    int last = 0;
    for (const Event& e : view.partner_events) {
        if (is_construction(e.action) || std::holds_alternative<SendMessage>(e.action)) last = std::max(last, e.round);
    }
    return last;
}

std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

} // namespace

Action scripted_policy(const AgentView& view, const ScriptedOptions& options) {
    const int self = view.agent_id;
    const int partner = 3 - self;

    if (auto b = next_own_block(view)) return Place{b->color, b->pos};

    const auto asked = requests_from(view.dialogue, self);
    for (const Block& b : bottom_up(view.goal.sub)) {
        if (view.built.contains(b.pos) || view.inventory.count(b.color) > 0) continue;
        bool already = std::any_of(asked.begin(), asked.end(), [&](const Block& r) { return r.pos == b.pos; });
        if (!already) return SendMessage{request_text(b)};
    }

    const auto partner_requests = requests_from(view.dialogue, partner);
    if (options.altruism) {
        const ColorCounts need = remaining_need(view);
        for (const Block& b : partner_requests) {
            if (view.goal.sub.contains(b.pos)) continue;
            if (view.inventory.count(b.color) <= need[static_cast<std::size_t>(b.color)]) continue;
            if (placeable(view, b)) return Place{b.color, b.pos};
        }
    }

    const bool open_request = std::any_of(partner_requests.begin(), partner_requests.end(),
                                          [&](const Block& b) { return !view.built.contains(b.pos); });
    if (goal_complete(view) && !open_request) {
        int last = last_partner_activity(view);
        for (const Event& e : view.own_events) {
            if (e.applied() && is_construction(e.action)) last = std::max(last, e.round);
        }
        if (view.round - last >= options.patience) return EndTask{};
    }
    return Wait{};
}

std::string_view to_string(TeamRole r) noexcept { return r == TeamRole::lead ? "lead" : "follow"; }
std::string_view to_string(Persuasion p) noexcept { return p == Persuasion::proactive ? "proactive" : "passive"; }

Structure known_structure(const AgentView& view) {
    Structure known = view.goal.sub;
    for (const Block& b : requests_from(view.dialogue, 3 - view.agent_id)) known.insert(b);
    return known;
}

ReflectionReport reflect(const AgentView& view, const Structure* ground_truth) {
    ReflectionReport r;
    if (ground_truth) {
        r.reference = *ground_truth;
        r.mismatches = diff_structures(view.built, *ground_truth);
    } else {
        r.reference = known_structure(view);
        const Structure& known = r.reference;
        for (const auto& [p, c] : view.built.map()) {
            if (auto want = known.at(p); want && *want != c) r.mismatches.misplaced.push_back({c, p});
        }
        for (const auto& [p, c] : known.map()) {
            if (view.built.at(p) != c) r.mismatches.missing.push_back({c, p});
        }
    }

    const bool blocked = !goal_complete(view) && !next_own_block(view);
    const int idle = view.round - 1 - last_partner_activity(view);
    if (blocked && idle >= 3) r.strategy.persuasion = Persuasion::proactive;

    bool asked_for_help = false;
    for (const Block& b : requests_from(view.dialogue, 3 - view.agent_id)) {
        if (!view.built.contains(b.pos)) asked_for_help = true;
    }
    for (auto it = view.dialogue.rbegin(); it != view.dialogue.rend(); ++it) {
        if (it->agent == view.agent_id) continue;
        const std::string text = lower(it->text);
        for (const char* cue : {"help", "could you", "can you", "please"}) {
            if (text.find(cue) != std::string::npos) asked_for_help = true;
        }
        break;
    }
    if (asked_for_help && !blocked) r.strategy.altruism = 0.75;

    int ignored = 0;
    for (const Event& e : view.own_events) {
        const auto* msg = std::get_if<SendMessage>(&e.action);
        if (!msg || !e.applied()) continue;
        auto b = parse_request(msg->text);
        if (b && !view.built.contains(b->pos) && view.round - e.round >= 3) ++ignored;
    }
    if (ignored >= 2) r.strategy.team_role = TeamRole::lead;
    return r;
}

} // namespace coblock
