#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include "coblock/world.hpp"

namespace coblock {

using BigInt = boost::multiprecision::cpp_int;

enum class TaskFamily { independent, skill_dependent, goal_dependent };

std::string_view to_string(TaskFamily f) noexcept;
/// Throws Error("unknown_family").
TaskFamily family_from_string(std::string_view s);

/// A collaboration task: a target split into two private goals plus the
/// two private inventories. Agents are numbered 1 and 2.
struct Task {
    Structure target;
    Goal goal1;
    Goal goal2;
    Inventory inv1;
    Inventory inv2;
    TaskFamily family = TaskFamily::independent;
    std::uint64_t seed = 0;
    BigInt complexity = 0;

    const Goal& goal(int agent) const { return agent == 1 ? goal1 : goal2; }
    const Inventory& inventory(int agent) const { return agent == 1 ? inv1 : inv2; }

    friend bool operator==(const Task&, const Task&) = default;
};

} // namespace coblock
