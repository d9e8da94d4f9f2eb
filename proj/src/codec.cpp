#include "coblock/codec.hpp"

#include <openssl/evp.h>

#include <array>
#include <memory>

namespace coblock {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

[[noreturn]] void bad(const std::string& what) { throw Error("parse", what); }

const Json& field(const Json& j, const char* key) {
    if (!j.is_object()) bad(std::string("expected an object holding '") + key + "'");
    auto it = j.find(key);
    if (it == j.end()) bad(std::string("missing field '") + key + "'");
    return *it;
}

int as_int(const Json& j, const char* what) {
    if (!j.is_number_integer()) bad(std::string(what) + " must be an integer");
    return j.get<int>();
}

std::string as_string(const Json& j, const char* what) {
    if (!j.is_string()) bad(std::string(what) + " must be a string");
    return j.get<std::string>();
}

} // namespace

Json encode(Position p) { return Json::array({p.x, p.y, p.z}); }

Json encode(const Block& b) { return Json{{"color", to_string(b.color)}, {"pos", encode(b.pos)}}; }

Json encode(const Structure& s) {
    Json arr = Json::array();
    for (const auto& [pos, color] : s.map()) arr.push_back(encode(Block{color, pos}));
    return arr;
}

Json encode(const Inventory& inv) {
    Json obj = Json::object();
    for (Color c : kAllColors) {
        if (inv.count(c) > 0) obj[std::string(to_string(c))] = inv.count(c);
    }
    return obj;
}

Json encode(const Goal& g) {
    Json j{{"blocks", encode(g.sub)}};
    if (g.description) j["description"] = *g.description;
    return j;
}

Json encode(const Task& t) {
    return Json{{"format_version", kFormatVersion},
                {"target", encode(t.target)},
                {"goal1", encode(t.goal1)},
                {"goal2", encode(t.goal2)},
                {"inv1", encode(t.inv1)},
                {"inv2", encode(t.inv2)},
                {"family", to_string(t.family)},
                {"seed", t.seed},
                {"complexity", t.complexity.str()}};
}

Json encode(const Action& a) {
    return std::visit(Overloaded{
                          [](const Place& p) {
                              return Json{{"type", "place"}, {"color", to_string(p.color)}, {"pos", encode(p.pos)}};
                          },
                          [](const Break& b) { return Json{{"type", "break"}, {"pos", encode(b.pos)}}; },
                          [](const SendMessage& m) { return Json{{"type", "send_message"}, {"text", m.text}}; },
                          [](const Wait&) { return Json{{"type", "wait"}}; },
                          [](const EndTask&) { return Json{{"type", "end_task"}}; },
                      },
                      a);
}

Json encode(const Event& e) {
    Json j{{"round", e.round}, {"agent", e.agent}, {"action", encode(e.action)}, {"digest", e.digest}};
    if (e.rejection) {
        j["outcome"] = "rejected";
        j["reason"] = to_string(*e.rejection);
    } else {
        j["outcome"] = "applied";
    }
    return j;
}

Json encode(const WorldState& s) {
    Json dialogue = Json::array();
    for (const auto& line : s.dialogue) dialogue.push_back(Json{{"agent", line.agent}, {"text", line.text}});
    Json events = Json::array();
    for (const auto& e : s.events) events.push_back(encode(e));
    return Json{{"format_version", kFormatVersion},
                {"built", encode(s.built)},
                {"inventories", Json::array({encode(s.inventories[0]), encode(s.inventories[1])})},
                {"dialogue", std::move(dialogue)},
                {"events", std::move(events)},
                {"round", s.round},
                {"status", to_string(s.status)}};
}

Json encode(const EpisodeConfig& c, bool include_task) {
    Json j{{"max_rounds", c.max_rounds},
           {"rng_seed", c.rng_seed},
           {"message_cap", c.message_cap},
           {"actions_per_turn", c.actions_per_turn},
           {"within_round_order", to_string(c.within_round_order)},
           {"world_extent", c.bounds.extent},
           {"world_height", c.bounds.height}};
    if (include_task) j["task"] = encode(c.task);
    return j;
}

Position decode_position(const Json& j) {
    if (!j.is_array() || j.size() != 3) bad("position must be [x, y, z]");
    return {as_int(j[0], "x"), as_int(j[1], "y"), as_int(j[2], "z")};
}

Block decode_block(const Json& j) {
    auto name = as_string(field(j, "color"), "color");
    auto color = parse_color(name);
    if (!color) throw Error("unknown_color", "unknown color '" + name + "'");
    return {*color, decode_position(field(j, "pos"))};
}

Structure decode_structure(const Json& j) {
    if (!j.is_array()) bad("structure must be an array of blocks");
    std::vector<Block> blocks;
    blocks.reserve(j.size());
    for (const auto& b : j) blocks.push_back(decode_block(b));
    return Structure(blocks);
}

Inventory decode_inventory(const Json& j) {
    if (!j.is_object()) bad("inventory must be an object");
    Inventory inv;
    for (const auto& [key, value] : j.items()) {
        auto color = parse_color(key);
        if (!color) throw Error("unknown_color", "unknown color '" + key + "'");
        inv.set(*color, as_int(value, "count"));
    }
    return inv;
}

Goal decode_goal(const Json& j) {
    Goal g{decode_structure(field(j, "blocks")), std::nullopt};
    if (auto it = j.find("description"); it != j.end()) g.description = as_string(*it, "description");
    return g;
}

Task decode_task(const Json& j) {
    if (auto it = j.find("format_version"); it != j.end() && as_int(*it, "format_version") != kFormatVersion) {
        bad("unsupported task format_version");
    }
    Task t;
    t.target = decode_structure(field(j, "target"));
    t.goal1 = decode_goal(field(j, "goal1"));
    t.goal2 = decode_goal(field(j, "goal2"));
    t.inv1 = decode_inventory(field(j, "inv1"));
    t.inv2 = decode_inventory(field(j, "inv2"));
    t.family = family_from_string(as_string(field(j, "family"), "family"));
    const Json& seed = field(j, "seed");
    if (!seed.is_number_unsigned() && !seed.is_number_integer()) bad("seed must be an integer");
    t.seed = seed.get<std::uint64_t>();
    const Json& cx = field(j, "complexity");
    if (cx.is_string()) {
        try {
            t.complexity = BigInt(cx.get<std::string>());
        } catch (const std::exception&) {
            bad("complexity must be a decimal integer");
        }
    } else if (cx.is_number_unsigned() || cx.is_number_integer()) {
        t.complexity = cx.get<std::uint64_t>();
    } else {
        bad("complexity must be an integer");
    }
    return t;
}

Action decode_action(const Json& j) {
    auto type = as_string(field(j, "type"), "action type");
    if (type == "place") {
        Block b = decode_block(j);
        return Place{b.color, b.pos};
    }
    if (type == "break") return Break{decode_position(field(j, "pos"))};
    if (type == "send_message") return SendMessage{as_string(field(j, "text"), "text")};
    if (type == "wait") return Wait{};
    if (type == "end_task") return EndTask{};
    bad("unknown action type '" + type + "'");
}

Event decode_event(const Json& j) {
    Event e;
    e.round = as_int(field(j, "round"), "round");
    e.agent = as_int(field(j, "agent"), "agent");
    e.action = decode_action(field(j, "action"));
    e.digest = as_string(field(j, "digest"), "digest");
    auto outcome = as_string(field(j, "outcome"), "outcome");
    if (outcome == "rejected") {
        e.rejection = reject_reason_from_string(as_string(field(j, "reason"), "reason"));
    } else if (outcome != "applied") {
        bad("unknown outcome '" + outcome + "'");
    }
    return e;
}

WorldState decode_state(const Json& j) {
    WorldState s;
    s.built = decode_structure(field(j, "built"));
    const Json& inv = field(j, "inventories");
    if (!inv.is_array() || inv.size() != 2) bad("inventories must hold two entries");
    s.inventories = {decode_inventory(inv[0]), decode_inventory(inv[1])};
    for (const auto& line : field(j, "dialogue")) {
        s.dialogue.push_back({as_int(field(line, "agent"), "agent"), as_string(field(line, "text"), "text")});
    }
    if (auto it = j.find("events"); it != j.end()) {
        for (const auto& e : *it) s.events.push_back(decode_event(e));
    }
    s.round = as_int(field(j, "round"), "round");
    s.status = status_from_string(as_string(field(j, "status"), "status"));
    return s;
}

EpisodeConfig decode_config(const Json& j, const Task* task) {
    EpisodeConfig c;
    if (auto it = j.find("task"); it != j.end()) {
        c.task = decode_task(*it);
    } else if (task) {
        c.task = *task;
    } else {
        bad("episode config carries no task");
    }
    c.max_rounds = as_int(field(j, "max_rounds"), "max_rounds");
    c.rng_seed = field(j, "rng_seed").get<std::uint64_t>();
    c.message_cap = field(j, "message_cap").get<std::size_t>();
    c.actions_per_turn = as_int(field(j, "actions_per_turn"), "actions_per_turn");
    c.within_round_order = round_order_from_string(as_string(field(j, "within_round_order"), "order"));
    c.bounds.extent = as_int(field(j, "world_extent"), "world_extent");
    c.bounds.height = as_int(field(j, "world_height"), "world_height");
    check_config(c);
    return c;
}

std::string dump_canonical(const Json& j) {
    try {
        return j.dump();
    } catch (const Json::type_error& e) {
        throw Error("encoding", e.what());
    }
}

Json parse_json(std::string_view text) {
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw Error("parse", e.what());
    }
}

std::string canonical_json(const WorldState& s) { return dump_canonical(encode(s)); }
std::string canonical_json(const Task& t) { return dump_canonical(encode(t)); }
std::string canonical_json(const Event& e) { return dump_canonical(encode(e)); }

std::string sha256_hex(std::string_view data) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1 ||
        EVP_DigestFinal_ex(ctx.get(), digest.data(), &len) != 1) {
        throw Error("digest", "SHA-256 computation failed");
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(kHex[digest[i] >> 4]);
        out.push_back(kHex[digest[i] & 0xf]);
    }
    return out;
}

} // namespace coblock
