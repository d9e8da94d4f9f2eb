#include <algorithm>
#include <climits>
#include <set>

#include "coblock/task_forge.hpp"
#include "rng.hpp"

namespace coblock {

namespace {

using detail::Rng;

std::optional<int> bound_of(const StructureRule& rule, PredicateType t, bool want_min) {
    for (const auto& p : rule.predicates) {
        if (p.type == t) return want_min ? p.min : p.max;
    }
    return std::nullopt;
}

/// Monotone bounds: once violated, no descendant can satisfy the rule.
bool pruned(const StructureRule& rule, const ShapeStats& st) {
    auto over = [](int v, const std::optional<int>& max) { return max && v > *max; };
    for (const auto& p : rule.predicates) {
        switch (p.type) {
        case PredicateType::block_count:
            if (over(st.block_count, p.max)) return true;
            break;
        case PredicateType::height:
            if (over(st.height, p.max)) return true;
            break;
        case PredicateType::extent_x:
            if (over(st.extent_x, p.max)) return true;
            break;
        case PredicateType::extent_z:
            if (over(st.extent_z, p.max)) return true;
            break;
        case PredicateType::ground_cells:
            if (over(st.ground_cells, p.max)) return true;
            break;
        case PredicateType::pillar_count:
            if (over(static_cast<int>(st.pillars.size()), p.max)) return true;
            break;
        case PredicateType::pillar_height:
            for (const auto& pl : st.pillars) {
                if (over(pl.height, p.max)) return true;
            }
            break;
        case PredicateType::pillar_width:
            for (const auto& pl : st.pillars) {
                if (over(pl.width, p.max)) return true;
            }
            break;
        case PredicateType::pillar_distance:
            if (p.min && st.pillars.size() >= 2 && st.min_pillar_distance < *p.min) return true;
            break;
        case PredicateType::solid:
            if (auto cap = bound_of(rule, PredicateType::block_count, false); cap && st.bounding_volume > *cap) {
                return true;
            }
            break;
        }
    }
    return false;
}

/// Cost of the cheapest way to start another pillar: how far a block still
/// has to travel sideways (to reach the required spacing) and downwards.
int pillar_reach(const Structure& s, const ShapeStats& st, int spacing) {
    int best = INT_MAX;
    for (const auto& [p, c] : s.map()) {
        if (p.y == 0) continue;
        int dist = INT_MAX;
        for (const auto& pl : st.pillars) {
            for (auto [x, z] : pl.cells) dist = std::min(dist, std::abs(p.x - x) + std::abs(p.z - z));
        }
        best = std::min(best, std::max(0, spacing - dist) + p.y);
    }
    return best == INT_MAX ? spacing + 1 : best;
}

int deficit(const StructureRule& rule, const Structure& s, const ShapeStats& st, int target_count) {
    int d = std::max(0, target_count - st.block_count);
    for (const auto& p : rule.predicates) {
        auto gap = [&](int v) { return p.min ? std::max(0, *p.min - v) : 0; };
        switch (p.type) {
        case PredicateType::height: d += 2 * gap(st.height); break;
        case PredicateType::extent_x: d += 2 * gap(st.extent_x); break;
        case PredicateType::extent_z: d += 2 * gap(st.extent_z); break;
        case PredicateType::ground_cells: d += 2 * gap(st.ground_cells); break;
        case PredicateType::pillar_height:
            for (const auto& pl : st.pillars) d += 2 * gap(pl.height);
            break;
        case PredicateType::pillar_count:
            if (int missing = gap(static_cast<int>(st.pillars.size())); missing > 0) {
                int spacing = bound_of(rule, PredicateType::pillar_distance, true).value_or(2);
                d += 4 * missing + pillar_reach(s, st, spacing);
            }
            break;
        case PredicateType::solid: d += st.bounding_volume - st.block_count; break;
        default: break;
        }
    }
    return d;
}

std::vector<Position> frontier(const Structure& s, const WorldBounds& bounds) {
    std::set<Position> out;
    for (const auto& [p, c] : s.map()) {
        for (Position d : kFaceOffsets) {
            Position q = p + d;
            if (bounds.contains(q) && !s.contains(q)) out.insert(q);
        }
    }
    return {out.begin(), out.end()};
}

std::vector<Position> key_of(const Structure& s) {
    std::vector<Position> k;
    k.reserve(s.size());
    for (const auto& [p, c] : s.map()) k.push_back(p);
    return k;
}

Structure translate_to_origin(const Structure& s) {
    int minx = INT_MAX, minz = INT_MAX;
    for (const auto& [p, c] : s.map()) minx = std::min(minx, p.x), minz = std::min(minz, p.z);
    Structure out;
    for (const auto& [p, c] : s.map()) out.insert({c, {p.x - minx, p.y, p.z - minz}});
    return out;
}

Structure paint(const Structure& shape, const StructureRule& rule, Rng& rng) {
    std::vector<Color> palette(kAllColors.begin(), kAllColors.end());
    rng.shuffle(palette);
    palette.resize(static_cast<std::size_t>(rule.palette_size));

    const ShapeStats st = measure(shape);
    std::set<Position> pillar_blocks;
    for (const auto& pl : st.pillars) {
        for (auto [x, z] : pl.cells) {
            for (int y = 0; shape.contains({x, y, z}); ++y) pillar_blocks.insert({x, y, z});
        }
    }
    const int band = st.height > 4 ? 2 : 1;
    Structure out;
    for (const auto& [p, c] : shape.map()) {
        std::size_t index = rule.coloring == Coloring::parts ? (pillar_blocks.count(p) ? 0u : 1u)
                                                             : static_cast<std::size_t>(p.y / band);
        out.insert({palette[index % palette.size()], p});
    }
    return out;
}

enum class Verdict { goal, dead_end, expand };

} // namespace

Structure generate_structure(const StructureRule& rule, const ComplexityRange& range, std::uint64_t seed,
                             const GeneratorOptions& options) {
    if (range.lo > range.hi) throw Error("invalid_range", "complexity range has lo > hi");
    Rng rng(seed);

    const int min_blocks = std::max(3, bound_of(rule, PredicateType::block_count, true).value_or(3));
    const int max_blocks = bound_of(rule, PredicateType::block_count, false).value_or(20);
    if (min_blocks > max_blocks) throw Error("budget_exhausted", "block_count bounds admit no structure");

    // Random grounded 3-block seed near the middle of the world.
    const Position origin{options.bounds.extent / 2, 0, options.bounds.extent / 2};
    Structure initial;
    initial.insert({Color::red, origin});
    while (initial.size() < 3) {
        std::vector<Position> options_left;
        for (Position q : frontier(initial, options.bounds)) {
            Structure next = initial;
            next.insert({Color::red, q});
            if (!pruned(rule, measure(next))) options_left.push_back(q);
        }
        if (options_left.empty()) throw Error("budget_exhausted", "rule admits no 3-block seed");
        initial.insert({Color::red, options_left[rng.below(options_left.size())]});
    }

    std::size_t expansions = 0;
    std::optional<Structure> found;

    // First pass aims for a seeded size inside the allowed range; the second
    // accepts the smallest structure the rule allows.
    const std::array<int, 2> targets = {rng.between(min_blocks, min_blocks + (max_blocks - min_blocks) / 2),
                                        min_blocks};
    for (std::size_t pass = 0; pass < targets.size() && !found; ++pass) {
        const int target_count = targets[pass];
        const std::size_t pass_budget = pass == 0 ? options.expansion_budget / 2 : options.expansion_budget;

        auto evaluate = [&](const Structure& s) {
            const ShapeStats st = measure(s);
            bool shape_ok = st.block_count >= target_count &&
                            std::all_of(rule.predicates.begin(), rule.predicates.end(),
                                        [&](const Predicate& p) { return satisfies(p, st); });
            if (shape_ok) {
                BigInt cx = complexity(s);
                if (cx >= range.lo && cx <= range.hi) return Verdict::goal;
                if (cx > range.hi) return Verdict::dead_end;
            }
            return st.block_count >= max_blocks ? Verdict::dead_end : Verdict::expand;
        };

        struct Frame {
            Structure s;
            std::vector<Position> children;
            std::size_t next = 0;
        };
        std::set<std::vector<Position>> visited{key_of(initial)};
        std::vector<Frame> stack;

        auto push = [&](Structure s) -> bool {
            Verdict v = evaluate(s);
            if (v == Verdict::goal) {
                found = std::move(s);
                return true;
            }
            if (v == Verdict::dead_end) return false;
            if (++expansions > pass_budget) return false;

            struct Child {
                int score;
                Position pos;
            };
            std::vector<Child> kids;
            for (Position q : frontier(s, options.bounds)) {
                Structure next = s;
                next.insert({Color::red, q});
                ShapeStats st = measure(next);
                if (pruned(rule, st)) continue;
                if (!visited.insert(key_of(next)).second) continue;
                kids.push_back({deficit(rule, next, st, target_count), q});
            }
            rng.shuffle(kids);
            std::stable_sort(kids.begin(), kids.end(),
                             [](const Child& a, const Child& b) { return a.score < b.score; });
            Frame f{std::move(s), {}, 0};
            for (const auto& k : kids) f.children.push_back(k.pos);
            stack.push_back(std::move(f));
            return false;
        };

        if (push(initial)) break;
        while (!stack.empty() && !found && expansions <= pass_budget) {
            Frame& top = stack.back();
            if (top.next >= top.children.size()) {
                stack.pop_back();
                continue;
            }
            Structure child = top.s;
            child.insert({Color::red, top.children[top.next++]});
            push(std::move(child));
        }
    }

    if (!found) {
        throw Error("budget_exhausted", "no " + std::string(to_string(rule.kind)) + " structure within " +
                                            std::to_string(options.expansion_budget) + " expansions");
    }

    Structure result = paint(translate_to_origin(*found), rule, rng);
    if (auto v = rule_violations(rule, result); !v.empty()) {
        throw Error("internal", "generated structure violates " + v.front());
    }
    BigInt cx = complexity(result);
    if (cx < range.lo || cx > range.hi) throw Error("internal", "generated structure outside complexity range");
    return result;
}

} // namespace coblock
