#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "coblock/agents.hpp"
#include "coblock/codec.hpp"
#include "coblock/engine.hpp"

namespace coblock {

/// A recorded episode: the header line plus the event lines of a log file.
struct EpisodeRecord {
    std::string task_id;
    EpisodeConfig config;
    std::vector<Event> events;
};

using RoundCallback = std::function<void(const WorldState&)>;

/// Runs agents against each other until the episode ends. Both agents decide
/// from the state at the start of the round. An agent that throws is
/// treated as having sent Wait.
WorldState run_episode(const EpisodeConfig& config, Agent& agent1, Agent& agent2, const RoundCallback& on_round = {});

/// JSONL: {"header":{format_version, task_id, config}} then one event per line.
std::string encode_log(const EpisodeRecord& record);
/// Throws Error("corrupt_log") on a missing header or any unreadable line.
EpisodeRecord decode_log(std::string_view text);

EpisodeRecord read_log_file(const std::filesystem::path& path);
/// Writes to a temporary sibling and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

/// Loads a task file; throws Error("parse") or Error("io").
Task read_task_file(const std::filesystem::path& path);

} // namespace coblock
