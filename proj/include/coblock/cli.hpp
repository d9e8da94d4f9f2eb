#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "coblock/episode.hpp"
#include "coblock/metrics.hpp"

namespace coblock {

/// Exit codes of the command-line tool.
enum ExitCode : int { exit_ok = 0, exit_task_failures = 1, exit_usage = 2 };

/// Entry point shared by the binary and the tests. `args` excludes argv[0].
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Scores every *.jsonl log under `dir` (sorted by file name). Task ids come
/// from the log headers.
std::vector<ScoreRow> score_log_dir(const std::filesystem::path& dir);

/// Text rendering of a log: one block per round, then the final state and score.
std::string render_replay_text(const EpisodeRecord& record);
Json render_replay_json(const EpisodeRecord& record);

} // namespace coblock
