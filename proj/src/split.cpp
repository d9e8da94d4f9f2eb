#include <algorithm>
#include <map>
#include <set>
#include <unordered_set>

#include "coblock/task_forge.hpp"
#include "rng.hpp"

namespace coblock {

namespace {

using detail::Rng;

bool touches(const Structure& s, Position p) {
    return std::any_of(kFaceOffsets.begin(), kFaceOffsets.end(), [&](Position d) { return s.contains(p + d); });
}

/// Two connected regions grown from two seed blocks; the smaller region
/// always claims the next block so the split stays balanced.
std::pair<Structure, Structure> grow_regions(const Structure& target, Position seed1, Position seed2, Rng& rng) {
    std::array<Structure, 2> regions;
    std::array<std::vector<Position>, 2> frontier;
    std::set<Position> claimed{seed1, seed2};
    regions[0].insert({*target.at(seed1), seed1});
    regions[1].insert({*target.at(seed2), seed2});
    auto extend = [&](int r, Position p) {
        for (Position d : kFaceOffsets) {
            Position q = p + d;
            if (target.contains(q) && !claimed.count(q)) frontier[r].push_back(q);
        }
    };
    extend(0, seed1);
    extend(1, seed2);
    while (claimed.size() < target.size()) {
        for (auto& f : frontier) {
            f.erase(std::remove_if(f.begin(), f.end(), [&](Position p) { return claimed.count(p) != 0; }), f.end());
        }
        int r;
        if (frontier[0].empty() && frontier[1].empty()) break;
        if (frontier[0].empty()) {
            r = 1;
        } else if (frontier[1].empty()) {
            r = 0;
        } else if (regions[0].size() != regions[1].size()) {
            r = regions[0].size() < regions[1].size() ? 0 : 1;
        } else {
            r = static_cast<int>(rng.below(2));
        }
        Position p = frontier[r][rng.below(frontier[r].size())];
        claimed.insert(p);
        regions[r].insert({*target.at(p), p});
        extend(r, p);
    }
    return {regions[0], regions[1]};
}

std::pair<Structure, Structure> height_cut(const Structure& target, int cut) {
    Structure lower, upper;
    for (const auto& [p, c] : target.map()) (p.y < cut ? lower : upper).insert({c, p});
    return {lower, upper};
}

Inventory own_needs(const Structure& goal, Rng& rng, int max_slack) {
    Inventory inv(block_multiset(goal));
    for (Color c : kAllColors) {
        if (inv.count(c) > 0 && max_slack > 0) inv.add(c, rng.between(0, max_slack));
    }
    return inv;
}

/// Moves all of `owner`'s units of one colour it needs to the partner, so the
/// owner must ask the partner to place those blocks. Prefers an owner whose
/// goal has several colours and the colour with the fewest blocks.
bool withhold_colour(const Structure& g1, const Structure& g2, Inventory& inv1, Inventory& inv2, Rng& rng) {
    struct Option {
        int owner;
        Color color;
        int need;
        int owner_colours;
    };
    std::vector<Option> opts;
    const std::array<ColorCounts, 2> needs = {block_multiset(g1), block_multiset(g2)};
    for (int a = 0; a < 2; ++a) {
        int colours = static_cast<int>(std::count_if(needs[a].begin(), needs[a].end(), [](int n) { return n > 0; }));
        for (Color c : kAllColors) {
            int need = needs[a][static_cast<std::size_t>(c)];
            if (need > 0) opts.push_back({a + 1, c, need, colours});
        }
    }
    if (opts.empty()) return false;
    rng.shuffle(opts);
    std::stable_sort(opts.begin(), opts.end(), [](const Option& x, const Option& y) {
        bool xm = x.owner_colours > 1, ym = y.owner_colours > 1;
        if (xm != ym) return xm;
        return x.need < y.need;
    });
    const Option& o = opts.front();
    Inventory& owner = o.owner == 1 ? inv1 : inv2;
    Inventory& partner = o.owner == 1 ? inv2 : inv1;
    owner.set(o.color, 0);
    partner.add(o.color, o.need);
    return true;
}

} // namespace

bool buildable_alone(const Structure& goal) {
    Structure built;
    bool progress = true;
    while (progress && built.size() < goal.size()) {
        progress = false;
        for (const auto& [p, c] : goal.map()) {
            if (built.contains(p)) continue;
            if (p.y == 0 || touches(built, p)) {
                built.insert({c, p});
                progress = true;
            }
        }
    }
    return built.size() == goal.size();
}

TaskFamily classify_task(const Task& task) {
    if (!buildable_alone(task.goal1.sub) || !buildable_alone(task.goal2.sub)) return TaskFamily::goal_dependent;
    const ColorCounts n1 = block_multiset(task.goal1.sub);
    const ColorCounts n2 = block_multiset(task.goal2.sub);
    for (Color c : kAllColors) {
        auto i = static_cast<std::size_t>(c);
        if (n1[i] > task.inv1.count(c) || n2[i] > task.inv2.count(c)) return TaskFamily::skill_dependent;
    }
    return TaskFamily::independent;
}

namespace {

struct Candidate {
    Position pos;
    Color color;
};

/// Lowest-first order so supporting blocks precede what rests on them.
std::vector<Candidate> bottom_up(const Structure& target) {
    std::vector<Candidate> out;
    for (const auto& [p, c] : target.map()) out.push_back({p, c});
    std::stable_sort(out.begin(), out.end(), [](const Candidate& a, const Candidate& b) {
        return std::tie(a.pos.y, a.pos.x, a.pos.z) < std::tie(b.pos.y, b.pos.x, b.pos.z);
    });
    return out;
}

int owner_of(const Task& task, Position p) { return task.goal1.sub.contains(p) || !task.goal2.sub.contains(p) ? 1 : 2; }

bool exhaustive(const Task& task, const std::vector<Candidate>& order, std::uint32_t mask, Structure& built,
                std::array<Inventory, 2>& inv, std::vector<WitnessStep>& plan,
                std::unordered_set<std::uint32_t>& dead) {
    if (built.size() == order.size()) return true;
    if (dead.count(mask)) return false;
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (mask & (1u << i)) continue;
        const auto& cand = order[i];
        if (cand.pos.y != 0 && !touches(built, cand.pos)) continue;
        int owner = owner_of(task, cand.pos);
        for (int agent : {owner, 3 - owner}) {
            if (!inv[agent - 1].take(cand.color)) continue;
            built.insert({cand.color, cand.pos});
            plan.push_back({agent, {cand.color, cand.pos}});
            if (exhaustive(task, order, mask | (1u << i), built, inv, plan, dead)) return true;
            plan.pop_back();
            built.erase(cand.pos);
            inv[agent - 1].add(cand.color);
        }
    }
    // Pooled stock per colour is fixed by which blocks are placed, so the mask
    // alone decides whether the rest is reachable.
    dead.insert(mask);
    return false;
}

} // namespace

Solvability check_solvable(const Task& task) {
    Solvability result;
    const auto order = bottom_up(task.target);
    std::array<Inventory, 2> inv = {task.inv1, task.inv2};
    Structure built;

    bool progress = true;
    while (progress && built.size() < order.size()) {
        progress = false;
        for (const auto& cand : order) {
            if (built.contains(cand.pos)) continue;
            if (cand.pos.y != 0 && !touches(built, cand.pos)) continue;
            int owner = owner_of(task, cand.pos);
            int agent = inv[owner - 1].count(cand.color) > 0 ? owner
                        : inv[2 - owner].count(cand.color) > 0 ? 3 - owner
                                                                : 0;
            if (agent == 0) continue;
            inv[agent - 1].take(cand.color);
            built.insert({cand.color, cand.pos});
            result.plan.push_back({agent, {cand.color, cand.pos}});
            progress = true;
            break;
        }
    }
    if (built.size() == order.size()) {
        result.solvable = true;
        return result;
    }

    if (order.size() <= 20) {
        std::array<Inventory, 2> fresh = {task.inv1, task.inv2};
        Structure b;
        std::vector<WitnessStep> plan;
        std::unordered_set<std::uint32_t> dead;
        if (exhaustive(task, order, 0, b, fresh, plan, dead)) {
            result.solvable = true;
            result.plan = std::move(plan);
            return result;
        }
    }
    result.plan.clear();
    return result;
}

Task split_task(const Structure& target, TaskFamily family, std::uint64_t seed, const SplitOptions& options) {
    if (target.size() < 2) throw Error("cannot_split", "a target needs at least two blocks to split");
    if (!validate_structure(target).empty() || connected_components(target).size() != 1) {
        throw Error("cannot_split", "target must be grounded and connected");
    }
    Rng rng(seed);

    std::vector<Position> ground, raised;
    for (const auto& [p, c] : target.map()) (p.y == 0 ? ground : raised).push_back(p);
    if (family != TaskFamily::goal_dependent && ground.size() < 2) {
        throw Error("cannot_split", "independent goals need two ground blocks");
    }
    if (family == TaskFamily::goal_dependent && raised.empty()) {
        throw Error("cannot_split", "a flat target cannot have support dependencies");
    }
    int top = 0;
    for (Position p : raised) top = std::max(top, p.y);

    std::optional<Task> best;
    std::size_t best_gap = SIZE_MAX;
    std::size_t valid = 0;
    for (std::size_t attempt = 0; attempt < options.proposal_budget && valid < options.candidates; ++attempt) {
        Structure a, b;
        if (family == TaskFamily::goal_dependent) {
            if (rng.below(2) == 0) {
                std::tie(a, b) = height_cut(target, rng.between(1, top));
            } else {
                Position s1 = ground[rng.below(ground.size())];
                Position s2 = raised[rng.below(raised.size())];
                std::tie(a, b) = grow_regions(target, s1, s2, rng);
            }
        } else {
            Position s1 = ground[rng.below(ground.size())];
            Position s2 = ground[rng.below(ground.size())];
            if (s1 == s2) continue;
            std::tie(a, b) = grow_regions(target, s1, s2, rng);
        }
        if (a.empty() || b.empty() || a.size() + b.size() != target.size()) continue;
        if (rng.below(2) == 1) std::swap(a, b);

        Task t;
        t.target = target;
        t.goal1 = {a, std::nullopt};
        t.goal2 = {b, std::nullopt};
        t.inv1 = own_needs(a, rng, options.max_slack);
        t.inv2 = own_needs(b, rng, options.max_slack);
        t.family = family;
        t.seed = seed;
        if (family != TaskFamily::independent && !withhold_colour(a, b, t.inv1, t.inv2, rng)) continue;
        if (classify_task(t) != family) continue;
        if (!check_solvable(t).solvable) continue;

        ++valid;
        std::size_t gap = a.size() > b.size() ? a.size() - b.size() : b.size() - a.size();
        if (gap < best_gap) {
            best_gap = gap;
            best = std::move(t);
        }
    }
    if (!best) {
        throw Error("cannot_split", "no " + std::string(to_string(family)) + " split found within " +
                                        std::to_string(options.proposal_budget) + " proposals");
    }
    best->complexity = complexity(target);
    return *best;
}

} // namespace coblock
