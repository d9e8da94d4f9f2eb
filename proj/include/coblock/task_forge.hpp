#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "coblock/codec.hpp"
#include "coblock/task.hpp"
#include "coblock/world.hpp"

namespace coblock {

// ---------------------------------------------------------------------------
// Structure rules
// ---------------------------------------------------------------------------

enum class StructureKind { symbol, bridge, arch, tower, rectangle };

std::string_view to_string(StructureKind k) noexcept;
StructureKind kind_from_string(std::string_view s);

/// Decidable shape constraints. A pillar is a 4-connected group of ground
/// cells (blocks at y=0, projected onto the xz plane). Its width is the larger
/// side of the group's bounding box, its height the tallest contiguous column
/// rising from those cells, and the distance between two pillars is the
/// smallest xz Manhattan distance between their cells.
enum class PredicateType {
    block_count,
    height,
    extent_x,
    extent_z,
    ground_cells,
    pillar_count,
    pillar_height,   ///< every pillar's height within [min, max]
    pillar_width,    ///< every pillar's width within [min, max]
    pillar_distance, ///< every pair of pillars at distance within [min, max]
    solid,           ///< the bounding box is completely filled
};

std::string_view to_string(PredicateType t) noexcept;

struct Predicate {
    PredicateType type = PredicateType::block_count;
    std::optional<int> min;
    std::optional<int> max;

    friend bool operator==(const Predicate&, const Predicate&) = default;
};

enum class Coloring { layers, parts };

struct StructureRule {
    StructureKind kind = StructureKind::symbol;
    std::vector<Predicate> predicates;
    int palette_size = 2;           ///< distinct colours drawn for the structure
    Coloring coloring = Coloring::layers;

    friend bool operator==(const StructureRule&, const StructureRule&) = default;
};

/// The rule set shipped for each kind (mirrors data/rules/<kind>.json).
StructureRule builtin_rule(StructureKind kind);

Json encode(const StructureRule& rule);
StructureRule decode_rule(const Json& j);

/// Measurements the predicates are evaluated on.
struct ShapeStats {
    int block_count = 0;
    int height = 0;
    int extent_x = 0;
    int extent_z = 0;
    int ground_cells = 0;
    int bounding_volume = 0;
    struct Pillar {
        std::vector<std::pair<int, int>> cells; ///< (x, z)
        int width = 0;
        int height = 0;
    };
    std::vector<Pillar> pillars;
    int min_pillar_distance = 0; ///< 0 with fewer than two pillars
};

ShapeStats measure(const Structure& s);
bool satisfies(const Predicate& p, const ShapeStats& stats);
/// Names of the predicates `s` violates (empty when the rule holds).
std::vector<std::string> rule_violations(const StructureRule& rule, const Structure& s);

// ---------------------------------------------------------------------------
// Face graph and spanning-tree complexity
// ---------------------------------------------------------------------------

struct Face {
    Position block;
    int direction = 0; ///< index into kFaceOffsets
    friend auto operator<=>(const Face&, const Face&) = default;
};

/// Nodes are exposed unit faces (not covered by a neighbour, and not the
/// underside of a block resting on y=0); two faces are joined iff they share a
/// unit edge segment.
struct FaceGraph {
    std::vector<Face> nodes;
    std::vector<std::pair<int, int>> edges; ///< (u, v) with u < v, sorted
};

/// Throws Error("empty_structure").
FaceGraph face_graph(const Structure& s);

/// Plain undirected multigraph description used by the counting routine.
struct Graph {
    int node_count = 0;
    std::vector<std::pair<int, int>> edges;
};

bool is_connected(const Graph& g);
/// Spanning-tree count by the matrix-tree theorem: determinant of the
/// Laplacian with one row and column removed, using fraction-free (Bareiss)
/// elimination over exact integers. Zero for disconnected graphs.
BigInt count_spanning_trees(const Graph& g);
BigInt complexity(const Structure& s);

// ---------------------------------------------------------------------------
// Generation
// ---------------------------------------------------------------------------

struct ComplexityRange {
    BigInt lo = 1;
    BigInt hi = BigInt(1) << 256;
};

struct GeneratorOptions {
    std::size_t expansion_budget = 100000;
    WorldBounds bounds;
};

/// Rule-guided randomized depth-first search. Starts from a random grounded
/// 3-block seed and adds one supported block at a time. Branch order is a
/// seeded shuffle, stably ordered by how far each child is from satisfying
/// the rule; states violating a monotone bound are pruned. Throws
/// Error("budget_exhausted") when no structure is found within the budget.
Structure generate_structure(const StructureRule& rule, const ComplexityRange& range, std::uint64_t seed,
                             const GeneratorOptions& options = {});

// ---------------------------------------------------------------------------
// Task construction and analysis
// ---------------------------------------------------------------------------

struct SplitOptions {
    std::size_t proposal_budget = 10000;
    /// Valid proposals compared before committing to the most balanced one.
    std::size_t candidates = 48;
    int max_slack = 2; ///< extra units per owned colour, drawn per seed
};

/// Throws Error("cannot_split") when no partition within budget yields the
/// requested family.
Task split_task(const Structure& target, TaskFamily family, std::uint64_t seed, const SplitOptions& options = {});

/// True iff `goal` can be built bottom-up on empty ground using only itself.
bool buildable_alone(const Structure& goal);

TaskFamily classify_task(const Task& task);

struct WitnessStep {
    int agent = 1;
    Block block;
    friend bool operator==(const WitnessStep&, const WitnessStep&) = default;
};

struct Solvability {
    bool solvable = false;
    std::vector<WitnessStep> plan; ///< a placement order that completes the target
};

/// Greedy constructive search (lowest supported block first, owner's
/// inventory preferred) with an exhaustive fallback for targets of at most
/// 20 blocks.
Solvability check_solvable(const Task& task);

} // namespace coblock
