#pragma once

#include <functional>
#include <string>
#include <vector>

#include "coblock/codec.hpp"
#include "coblock/protocol.hpp"

namespace coblock {

/// Single-agent grounding checks. Part 1: XML structure to description.
/// Part 2: XML structure to commands. Part 3: text description to commands.

/// Plain-text rendering used as the Part 3 motive, one clause per block,
/// grouped by layer: "Layer 0: a red block at (0, 0, 0); ...".
std::string describe_structure_text(const Structure& s, const XmlOptions& opts = {});
/// Inverse of describe_structure_text; ignores anything that is not a block clause.
std::vector<Block> parse_structure_text(std::string_view text, const XmlOptions& opts = {});

std::string grounding_prompt(int part, const Structure& target, const XmlOptions& opts = {});

struct GroundingCase {
    std::string task_id;
    bool success = false;
    double score = 0; ///< part 1: colour/count mention heuristic; parts 2-3: 1 or 0
    std::string detail;
    std::string reply;
};

/// Part 1 passes when every colour and its count are mentioned. Parts 2 and 3
/// run the commands in an empty world holding exactly the target's blocks and
/// pass iff the result equals the target. Throws Error("config") on a bad part.
GroundingCase grade_grounding(int part, const Structure& target, const std::string& reply,
                              const XmlOptions& opts = {});

using GroundingSolver = std::function<std::string(const std::string& prompt)>;

struct GroundingReport {
    int part = 1;
    std::vector<GroundingCase> cases;
    double success_rate() const;
};

/// A solver exception counts as a failed case.
GroundingReport run_grounding(int part, const std::vector<std::pair<std::string, Structure>>& targets,
                              const GroundingSolver& solver, const XmlOptions& opts = {});

/// Reference answer computed only from the prompt text.
std::string oracle_grounding_reply(int part, const std::string& prompt, const XmlOptions& opts = {});

/// Blocks in an order where each one is supported when placed.
std::vector<Block> build_order(const std::vector<Block>& blocks);

Json encode(const GroundingReport& r);

} // namespace coblock
