#pragma once

// Canonical JSON encodings for logs, task files, digests and service payloads.
// Keys are sorted, output is compact UTF-8, and decode(encode(x)) == x.

#include <string>
#include <string_view>

#include <json.hpp>

#include "coblock/engine.hpp"
#include "coblock/task.hpp"
#include "coblock/world.hpp"

namespace coblock {

using Json = nlohmann::json;

inline constexpr int kFormatVersion = 1;

Json encode(Position p);
Json encode(const Block& b);
Json encode(const Structure& s);
Json encode(const Inventory& inv);
Json encode(const Goal& g);
Json encode(const Task& t);
Json encode(const Action& a);
Json encode(const Event& e);
Json encode(const WorldState& s);
Json encode(const EpisodeConfig& c, bool include_task = true);

Position decode_position(const Json& j);
Block decode_block(const Json& j);
Structure decode_structure(const Json& j);
Inventory decode_inventory(const Json& j);
Goal decode_goal(const Json& j);
Task decode_task(const Json& j);
Action decode_action(const Json& j);
Event decode_event(const Json& j);
WorldState decode_state(const Json& j);
/// `task` is used when the encoding was produced without one.
EpisodeConfig decode_config(const Json& j, const Task* task = nullptr);

/// Compact dump with sorted keys. Throws Error("encoding") on invalid UTF-8.
std::string dump_canonical(const Json& j);
/// Throws Error("parse") on malformed input.
Json parse_json(std::string_view text);

std::string canonical_json(const WorldState& s);
std::string canonical_json(const Task& t);
std::string canonical_json(const Event& e);

std::string sha256_hex(std::string_view data);

} // namespace coblock
