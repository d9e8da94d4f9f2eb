#include "coblock/metrics.hpp"

#include <algorithm>
#include <sstream>

namespace coblock {

std::string format_decimal(const Rational& r, int places) {
    using boost::multiprecision::cpp_int;
    cpp_int scale = 1;
    for (int i = 0; i < places; ++i) scale *= 10;
    cpp_int num = boost::multiprecision::numerator(r) * scale;
    cpp_int den = boost::multiprecision::denominator(r);
    bool negative = num < 0;
    if (negative) num = -num;
    cpp_int q = (2 * num + den) / (2 * den); // round half up
    std::string digits = q.str();
    if (static_cast<int>(digits.size()) <= places) digits.insert(0, places + 1 - digits.size(), '0');
    std::string out = digits.substr(0, digits.size() - places);
    if (places > 0) out += "." + digits.substr(digits.size() - places);
    return negative && q != 0 ? "-" + out : out;
}

double to_double(const Rational& r) { return r.convert_to<double>(); }

OptimalAssignment optimal_assignment(const Inventory& inv1, const Inventory& inv2, const Structure& target) {
    const ColorCounts need = block_multiset(target);
    for (Color c : kAllColors) {
        const int n = need[static_cast<std::size_t>(c)];
        if (n == 0) continue;
        if (inv1.count(c) == 0 && inv2.count(c) == 0) {
            throw Error("unsolvable_by_inventory", "neither agent holds " + std::string(to_string(c)));
        }
        if (inv1.count(c) + inv2.count(c) < n) {
            throw Error("unsolvable_by_inventory", "not enough " + std::string(to_string(c)) + " blocks");
        }
    }

    OptimalAssignment out;
    std::array<int, 2> count{0, 0};
    auto assign = [&](Position p, int agent) {
        out.agent_of[p] = agent;
        ++count[agent - 1];
    };

    std::vector<Block> mutual;
    for (const Block& b : target.blocks()) {
        const bool h1 = inv1.count(b.color) > 0;
        const bool h2 = inv2.count(b.color) > 0;
        if (h1 && h2) {
            mutual.push_back(b);
        } else {
            assign(b.pos, h1 ? 1 : 2);
        }
    }

    // Mutual colours: first the blocks one agent must take because the other
    // cannot cover them, then balance the rest greedily.
    std::array<ColorCounts, 2> remaining{};
    ColorCounts forced1{}, forced2{};
    for (Color c : kAllColors) {
        auto i = static_cast<std::size_t>(c);
        remaining[0][i] = inv1.count(c);
        remaining[1][i] = inv2.count(c);
        forced1[i] = std::max(0, need[i] - inv2.count(c));
        forced2[i] = std::max(0, need[i] - inv1.count(c));
    }
    std::vector<Block> free_blocks;
    for (const Block& b : mutual) {
        auto i = static_cast<std::size_t>(b.color);
        if (forced1[i] > 0) {
            --forced1[i];
            --remaining[0][i];
            assign(b.pos, 1);
        } else if (forced2[i] > 0) {
            --forced2[i];
            --remaining[1][i];
            assign(b.pos, 2);
        } else {
            free_blocks.push_back(b);
        }
    }
    for (const Block& b : free_blocks) {
        auto i = static_cast<std::size_t>(b.color);
        int agent = count[0] <= count[1] ? 1 : 2;
        if (remaining[agent - 1][i] == 0) agent = 3 - agent;
        --remaining[agent - 1][i];
        assign(b.pos, agent);
    }
    out.n_star_1 = count[0];
    out.n_star_2 = count[1];
    return out;
}

WorkloadBalance workload_balance(int n1, int n2, int n_star_1, int n_star_2) {
    WorkloadBalance wb;
    Rational a;
    if (n_star_1 == 0 || n_star_2 == 0) {
        a = n1;
        wb.unnormalized = true;
    } else {
        a = Rational(n1) * n_star_2 / n_star_1;
    }
    Rational b = n2;
    if (a * b == 0) {
        wb.gamma = 0;
    } else {
        wb.gamma = a * b / (a * a + b * b);
    }
    return wb;
}

Rational success_rate(std::span<const bool> outcomes) {
    if (outcomes.empty()) throw Error("empty_outcomes", "success rate of zero tasks");
    auto wins = std::count(outcomes.begin(), outcomes.end(), true);
    return Rational(static_cast<long long>(wins), static_cast<long long>(outcomes.size()));
}

EpisodeScore score_episode(std::span<const Event> log, const EpisodeConfig& config) {
    const WorldState final_state = replay(log, config);
    EpisodeScore s;
    s.status = final_state.status;
    s.success = final_state.status == EpisodeStatus::success;
    for (const Event& e : final_state.events) {
        if (!e.applied()) continue;
        ++s.timesteps;
        if (is_construction(e.action)) ++(e.agent == 1 ? s.n1 : s.n2);
    }
    try {
        OptimalAssignment opt = optimal_assignment(config.task.inv1, config.task.inv2, config.task.target);
        s.n_star_1 = opt.n_star_1;
        s.n_star_2 = opt.n_star_2;
        WorkloadBalance wb = workload_balance(s.n1, s.n2, s.n_star_1, s.n_star_2);
        s.gamma = wb.gamma;
        s.unnormalized = wb.unnormalized;
    } catch (const Error& e) {
        if (e.code() != "unsolvable_by_inventory") throw;
        s.gamma_defined = false;
    }
    return s;
}

Json encode(const EpisodeScore& s) {
    Json j{{"success", s.success},
           {"status", to_string(s.status)},
           {"timesteps", s.timesteps},
           {"n1", s.n1},
           {"n2", s.n2},
           {"n_star_1", s.n_star_1},
           {"n_star_2", s.n_star_2},
           {"unnormalized", s.unnormalized}};
    if (s.gamma_defined) {
        j["gamma"] = format_decimal(s.gamma);
        j["gamma_exact"] = s.gamma.str();
    } else {
        j["gamma"] = nullptr;
    }
    return j;
}

std::string score_csv_header() { return "task_id,family,success,gamma,timesteps,n1,n2,n_star_1,n_star_2\n"; }

std::string score_csv_row(const ScoreRow& row) {
    std::ostringstream out;
    const EpisodeScore& s = row.score;
    out << row.task_id << ',' << to_string(row.family) << ',' << (s.success ? "true" : "false") << ','
        << (s.gamma_defined ? format_decimal(s.gamma) : std::string()) << ',' << s.timesteps << ',' << s.n1 << ','
        << s.n2 << ',' << s.n_star_1 << ',' << s.n_star_2 << '\n';
    return out.str();
}

std::vector<FamilySummary> summarize(std::span<const ScoreRow> rows) {
    std::vector<FamilySummary> out;
    for (TaskFamily f : {TaskFamily::independent, TaskFamily::skill_dependent, TaskFamily::goal_dependent}) {
        std::vector<bool> outcomes;
        Rational gamma_sum = 0, steps_sum = 0;
        int gamma_n = 0;
        for (const auto& r : rows) {
            if (r.family != f) continue;
            outcomes.push_back(r.score.success);
            steps_sum += r.score.timesteps;
            if (r.score.gamma_defined) {
                gamma_sum += r.score.gamma;
                ++gamma_n;
            }
        }
        if (outcomes.empty()) continue;
        FamilySummary fs;
        fs.family = f;
        fs.episodes = static_cast<int>(outcomes.size());
        const auto wins = std::count(outcomes.begin(), outcomes.end(), true);
        fs.success_rate = Rational(static_cast<long long>(wins), static_cast<long long>(fs.episodes));
        fs.mean_gamma = gamma_n > 0 ? Rational(gamma_sum / gamma_n) : Rational(0);
        fs.mean_timesteps = steps_sum / fs.episodes;
        out.push_back(fs);
    }
    return out;
}

std::string summary_csv(std::span<const FamilySummary> rows) {
    std::ostringstream out;
    out << "family,episodes,success_rate,mean_gamma,mean_timesteps\n";
    for (const auto& r : rows) {
        out << to_string(r.family) << ',' << r.episodes << ',' << format_decimal(r.success_rate) << ','
            << format_decimal(r.mean_gamma) << ',' << format_decimal(r.mean_timesteps) << '\n';
    }
    return out.str();
}

} // namespace coblock
