#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "coblock/codec.hpp"
#include "coblock/engine.hpp"
#include "coblock/task.hpp"

namespace coblock {

using Rational = boost::multiprecision::cpp_rational;

/// Rounded decimal rendering used in reports (4 places).
std::string format_decimal(const Rational& r, int places = 4);
double to_double(const Rational& r);

struct OptimalAssignment {
    int n_star_1 = 0;
    int n_star_2 = 0;
    std::map<Position, int> agent_of; ///< target block -> 1 or 2
};

/// Balanced assignment of target blocks to agents. Colours only one agent
/// holds go to that agent; blocks of colours both hold go, one at a time, to
/// the agent with the smaller running total (ties to agent 1), skipping an
/// agent whose stock of that colour is spent. Blocks the partner cannot
/// cover are assigned before the freely assignable ones.
/// Throws Error("unsolvable_by_inventory").
OptimalAssignment optimal_assignment(const Inventory& inv1, const Inventory& inv2, const Structure& target);

struct WorkloadBalance {
    Rational gamma;
    bool unnormalized = false; ///< an optimal count was zero, so a = n1
};

/// a = n1 * n*2 / n*1, b = n2, gamma = a*b / (a^2 + b^2); 0.5 is perfect.
/// gamma is invariant under scaling (a, b) together, so rescaling agent 2 as
/// well would give the same value.
WorkloadBalance workload_balance(int n1, int n2, int n_star_1, int n_star_2);

/// Throws Error("empty_outcomes").
Rational success_rate(std::span<const bool> outcomes);

struct EpisodeScore {
    bool success = false;
    EpisodeStatus status = EpisodeStatus::running;
    Rational gamma;
    bool gamma_defined = true; ///< false when the inventories cannot cover the target
    bool unnormalized = false;
    int timesteps = 0;
    int n1 = 0;
    int n2 = 0;
    int n_star_1 = 0;
    int n_star_2 = 0;
};

/// Replays the log (propagating corrupt_log) and scores it. Workload counts
/// applied Place and Break actions; timesteps counts every applied action.
EpisodeScore score_episode(std::span<const Event> log, const EpisodeConfig& config);

Json encode(const EpisodeScore& s);

struct ScoreRow {
    std::string task_id;
    TaskFamily family = TaskFamily::independent;
    EpisodeScore score;
};

std::string score_csv_header();
std::string score_csv_row(const ScoreRow& row);

struct FamilySummary {
    TaskFamily family = TaskFamily::independent;
    int episodes = 0;
    Rational success_rate;
    Rational mean_gamma;     ///< over episodes with a defined gamma
    Rational mean_timesteps;
};

std::vector<FamilySummary> summarize(std::span<const ScoreRow> rows);
std::string summary_csv(std::span<const FamilySummary> rows);

} // namespace coblock
