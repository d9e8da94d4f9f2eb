#include "coblock/cli.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <map>
#include <mutex>
#include <thread>

#include "coblock/grounding.hpp"
#include "coblock/service.hpp"
#include "coblock/task_forge.hpp"

namespace coblock {

namespace {

namespace fs = std::filesystem;

constexpr StructureKind kKinds[] = {StructureKind::symbol, StructureKind::bridge, StructureKind::arch,
                                    StructureKind::tower, StructureKind::rectangle};

// Generation retries shift the seed by this stride so a task depends only on (args, index).
constexpr std::uint64_t kRetryStride = 1000003;
constexpr int kRetries = 8;

std::vector<fs::path> files_with(const fs::path& dir, const std::string& ext) {
    std::vector<fs::path> out;
    if (fs::is_regular_file(dir)) return {dir};
    if (!fs::is_directory(dir)) throw Error("config", "no such directory " + dir.string());
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.is_regular_file() && e.path().extension() == ext) out.push_back(e.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

struct SeatSpec {
    Json config;
    fs::path base;
};

SeatSpec load_seat(const std::string& value, const fs::path& workspace) {
    if (!value.empty() && value.front() == '{') return {parse_json(value), workspace};
    fs::path p = value;
    if (p.is_relative()) p = workspace / p;
    try {
        return {parse_json(read_file(p)), p.parent_path()};
    } catch (const Error& e) {
        throw Error("config", "seat config " + p.string() + ": " + e.what());
    }
}

std::string family_counts(const Task& t) { return std::to_string(t.target.size()) + " blocks"; }

// ---- gen ----

struct GenArgs {
    std::string rule;
    std::string family;
    int count = 0;
    std::uint64_t seed = 1;
    std::string out;
    std::string complexity_min;
    std::string complexity_max;
    std::size_t budget = GeneratorOptions{}.expansion_budget;
};

int cmd_gen(const GenArgs& a, const fs::path& ws, std::ostream& out, std::ostream& err) {
    if (a.count < 1) {
        err << "gen: --count must be at least 1\n";
        return exit_usage;
    }
    TaskFamily family;
    ComplexityRange range;
    std::optional<StructureRule> file_rule;
    try {
        family = family_from_string(a.family);
        if (!a.complexity_min.empty()) range.lo = BigInt(a.complexity_min);
        if (!a.complexity_max.empty()) range.hi = BigInt(a.complexity_max);
        if (a.rule != "mixed") {
            bool builtin = false;
            for (StructureKind k : kKinds) builtin = builtin || to_string(k) == a.rule;
            if (!builtin) {
                fs::path p = a.rule;
                if (p.is_relative()) p = ws / p;
                file_rule = decode_rule(parse_json(read_file(p)));
            }
        }
    } catch (const std::exception& e) {
        err << "gen: " << e.what() << "\n";
        return exit_usage;
    }
    const fs::path dir = fs::path(a.out).is_relative() ? ws / a.out : fs::path(a.out);
    GeneratorOptions gopts;
    gopts.expansion_budget = a.budget;

    int failures = 0;
    std::optional<BigInt> lo;
    std::optional<BigInt> hi;
    for (int k = 0; k < a.count; ++k) {
        const std::uint64_t seed = a.seed + static_cast<std::uint64_t>(k);
        StructureRule rule;
        if (file_rule) {
            rule = *file_rule;
        } else if (a.rule == "mixed") {
            rule = builtin_rule(kKinds[seed % std::size(kKinds)]);
        } else {
            rule = builtin_rule(kind_from_string(a.rule));
        }
        const std::string id = a.family + "_" + std::string(to_string(rule.kind)) + "_s" + std::to_string(seed);
        std::optional<Task> task;
        std::string last_error;
        for (int attempt = 0; attempt < kRetries && !task; ++attempt) {
            const std::uint64_t s = seed + kRetryStride * static_cast<std::uint64_t>(attempt);
            try {
                task = split_task(generate_structure(rule, range, s, gopts), family, s);
            } catch (const Error& e) {
                last_error = e.code() + ": " + e.what();
            }
        }
        if (!task) {
            err << id << ": generation failed (" << last_error << ")\n";
            ++failures;
            continue;
        }
        const bool solvable = check_solvable(*task).solvable;
        write_file_atomic(dir / (id + ".json"), canonical_json(*task) + "\n");
        out << id << " " << family_counts(*task) << " complexity=" << task->complexity
            << (solvable ? "" : " UNSOLVABLE") << "\n";
        if (!solvable) ++failures;
        if (!lo || task->complexity < *lo) lo = task->complexity;
        if (!hi || task->complexity > *hi) hi = task->complexity;
    }
    if (lo) out << "complexity min=" << *lo << " max=" << *hi << "\n";
    out << (a.count - failures) << "/" << a.count << " tasks written to " << dir.string() << "\n";
    return failures ? exit_task_failures : exit_ok;
}

// ---- run ----

struct RunArgs {
    std::string tasks;
    std::string seat1;
    std::string seat2;
    std::string out;
    int jobs = 1;
    std::optional<int> max_rounds;
    std::optional<int> actions_per_turn;
    std::uint64_t rng_seed = 0;
};

void write_scores(const std::vector<ScoreRow>& rows, const fs::path& dir, std::ostream& out) {
    std::string scores = score_csv_header();
    for (const auto& r : rows) scores += score_csv_row(r);
    const auto summary = summarize(rows);
    const std::string table = summary_csv(summary);
    write_file_atomic(dir / "scores.csv", scores);
    write_file_atomic(dir / "summary.csv", table);
    out << table;
}

int cmd_run(const RunArgs& a, const fs::path& ws, std::ostream& out, std::ostream& err) {
    std::vector<fs::path> task_files;
    std::array<SeatSpec, 2> seats;
    try {
        task_files = files_with(fs::path(a.tasks).is_relative() ? ws / a.tasks : fs::path(a.tasks), ".json");
        if (task_files.empty()) throw Error("config", "no task files in " + a.tasks);
        seats = {load_seat(a.seat1, ws), load_seat(a.seat2, ws)};
        // construct once up front so a bad config or missing key fails before any episode
        const Task probe = read_task_file(task_files.front());
        for (const auto& s : seats) make_agent(s.config, s.base, &probe);
        if (a.jobs < 1) throw Error("config", "--jobs must be at least 1");
    } catch (const Error& e) {
        err << "run: " << e.what() << "\n";
        return exit_usage;
    }
    const fs::path dir = fs::path(a.out).is_relative() ? ws / a.out : fs::path(a.out);
    const fs::path logs = dir / "logs";
    fs::create_directories(logs);

    std::atomic<std::size_t> next{0};
    std::atomic<int> failures{0};
    std::mutex err_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < task_files.size(); i = next++) {
            const fs::path& file = task_files[i];
            const std::string id = file.stem().string();
            try {
                EpisodeConfig config;
                config.task = read_task_file(file);
                if (a.max_rounds) config.max_rounds = *a.max_rounds;
                if (a.actions_per_turn) config.actions_per_turn = *a.actions_per_turn;
                config.rng_seed = a.rng_seed;
                auto agent1 = make_agent(seats[0].config, seats[0].base, &config.task);
                auto agent2 = make_agent(seats[1].config, seats[1].base, &config.task);
                const WorldState final = run_episode(config, *agent1, *agent2);
                write_file_atomic(logs / (id + ".jsonl"), encode_log({id, config, final.events}));
            } catch (const std::exception& e) {
                ++failures;
                std::lock_guard lk(err_mutex);
                err << id << ": " << e.what() << "\n";
            }
        }
    };
    {
        std::vector<std::jthread> pool;
        for (int j = 1; j < a.jobs; ++j) pool.emplace_back(worker);
        worker();
    }
    try {
        write_scores(score_log_dir(logs), dir, out);
    } catch (const Error& e) {
        err << "run: scoring failed: " << e.what() << "\n";
        return exit_task_failures;
    }
    return failures ? exit_task_failures : exit_ok;
}

// ---- grounding ----

struct GroundingArgs {
    int part = 0;
    std::string tasks;
    std::string seat;
    std::string out;
    bool ground_offset = false;
};

int cmd_grounding(const GroundingArgs& a, const fs::path& ws, std::ostream& out, std::ostream& err) {
    std::vector<std::pair<std::string, Structure>> targets;
    GroundingSolver solver;
    XmlOptions xml{a.ground_offset};
    try {
        if (a.part < 1 || a.part > 3) throw Error("config", "--part must be 1, 2 or 3");
        for (const auto& f : files_with(fs::path(a.tasks).is_relative() ? ws / a.tasks : fs::path(a.tasks), ".json")) {
            targets.emplace_back(f.stem().string(), read_task_file(f).target);
        }
        const SeatSpec seat = load_seat(a.seat, ws);
        const std::string kind = seat.config.value("kind", "");
        if (kind == "oracle") {
            solver = [part = a.part, xml](const std::string& prompt) { return oracle_grounding_reply(part, prompt, xml); };
        } else if (kind == "llm") {
            if (!seat.config.contains("backend")) throw Error("config", "llm seat needs a backend object");
            std::shared_ptr<LmBackend> backend = make_backend(seat.config["backend"], seat.base, xml);
            const double temperature = seat.config.value("temperature", 0.0);
            const int max_tokens = seat.config.value("max_tokens", 1024);
            solver = [backend, temperature, max_tokens](const std::string& prompt) {
                return backend->complete({{{"user", prompt}}, temperature, max_tokens}).text;
            };
        } else {
            throw Error("config", "grounding seat kind must be oracle or llm");
        }
    } catch (const Error& e) {
        err << "grounding: " << e.what() << "\n";
        return exit_usage;
    }
    const GroundingReport report = run_grounding(a.part, targets, solver, xml);
    for (const auto& c : report.cases) {
        out << c.task_id << " " << (c.success ? "pass" : "fail") << " " << c.detail << "\n";
    }
    out << "part " << a.part << " success_rate " << report.success_rate() << (a.part == 1 ? " (heuristic)" : "")
        << "\n";
    if (!a.out.empty()) {
        const fs::path dir = fs::path(a.out).is_relative() ? ws / a.out : fs::path(a.out);
        write_file_atomic(dir / ("grounding_part" + std::to_string(a.part) + ".json"),
                          dump_canonical(encode(report)) + "\n");
        if (a.part == 1) {
            // descriptions go to manual review
            std::string review;
            for (const auto& c : report.cases) review += "## " + c.task_id + "\n" + c.reply + "\n\n";
            write_file_atomic(dir / "grounding_part1_review.md", review);
        }
    }
    return report.success_rate() == 1.0 ? exit_ok : exit_task_failures;
}

} // namespace

// ---- shared helpers ----

std::vector<ScoreRow> score_log_dir(const fs::path& dir) {
    std::vector<ScoreRow> rows;
    for (const auto& f : files_with(dir, ".jsonl")) {
        const EpisodeRecord rec = read_log_file(f);
        rows.push_back({rec.task_id, rec.config.task.family, score_episode(rec.events, rec.config)});
    }
    return rows;
}

std::string render_replay_text(const EpisodeRecord& rec) {
    const ReplayResult result = replay_log(rec.events, rec.config);
    const EpisodeScore score = score_episode(rec.events, rec.config);
    std::string out = "task " + rec.task_id + " family " + std::string(to_string(rec.config.task.family)) +
                      " max_rounds " + std::to_string(rec.config.max_rounds) + "\n";
    int round = 0;
    const std::size_t kept = rec.events.size() - result.dropped_events;
    for (std::size_t i = 0; i < kept; ++i) {
        const Event& e = rec.events[i];
        if (e.round != round) {
            round = e.round;
            out += "round " + std::to_string(round) + "\n";
        }
        out += "  agent " + std::to_string(e.agent) + ": " + describe(e.action);
        if (e.rejection) out += " [rejected: " + std::string(to_string(*e.rejection)) + "]";
        out += "\n";
    }
    if (result.dropped_events) out += "dropped " + std::to_string(result.dropped_events) + " events of an unfinished round\n";
    out += "final status " + std::string(to_string(result.state.status)) + " blocks " +
           std::to_string(result.state.built.size()) + " digest " + state_digest(result.state) + "\n";
    out += "score success " + std::string(score.success ? "true" : "false") + " gamma " +
           (score.gamma_defined ? format_decimal(score.gamma) : std::string("undefined")) + " timesteps " +
           std::to_string(score.timesteps) + " n1 " + std::to_string(score.n1) + " n2 " + std::to_string(score.n2) +
           " n_star_1 " + std::to_string(score.n_star_1) + " n_star_2 " + std::to_string(score.n_star_2) + "\n";
    return out;
}

Json render_replay_json(const EpisodeRecord& rec) {
    const ReplayResult result = replay_log(rec.events, rec.config);
    Json rounds = Json::array();
    const std::size_t kept = rec.events.size() - result.dropped_events;
    for (std::size_t i = 0; i < kept; ++i) {
        const Event& e = rec.events[i];
        if (rounds.empty() || rounds.back()["round"] != e.round) rounds.push_back({{"round", e.round}, {"events", Json::array()}});
        rounds.back()["events"].push_back(encode(e));
    }
    return {{"task_id", rec.task_id},
            {"rounds", rounds},
            {"final",
             {{"status", to_string(result.state.status)},
              {"digest", state_digest(result.state)},
              {"dropped_events", result.dropped_events}}},
            {"score", encode(score_episode(rec.events, rec.config))}};
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Two-agent block-building experiments"};
    app.require_subcommand(1);
    std::string workspace = ".";
    app.add_option("--workspace", workspace, "Root that relative paths resolve against");

    GenArgs gen;
    auto* g = app.add_subcommand("gen", "Generate a task suite");
    g->add_option("--rule", gen.rule, "Rule kind, 'mixed', or a rule JSON file")->required();
    g->add_option("--family", gen.family, "independent, skill_dependent or goal_dependent")->required();
    g->add_option("--count", gen.count, "Number of tasks")->required();
    g->add_option("--seed", gen.seed, "Seed of the first task; task k uses seed+k");
    g->add_option("--out", gen.out, "Output directory")->required();
    g->add_option("--complexity-min", gen.complexity_min);
    g->add_option("--complexity-max", gen.complexity_max);
    g->add_option("--budget", gen.budget, "Search expansions per attempt");

    RunArgs run;
    auto* r = app.add_subcommand("run", "Run machine-machine episodes");
    r->add_option("--tasks", run.tasks, "Task file or directory")->required();
    r->add_option("--seat1", run.seat1, "Agent config file or inline JSON")->required();
    r->add_option("--seat2", run.seat2, "Agent config file or inline JSON")->required();
    r->add_option("--out", run.out, "Output directory")->required();
    r->add_option("--jobs", run.jobs, "Episodes run in parallel");
    r->add_option("--max-rounds", run.max_rounds);
    r->add_option("--actions-per-turn", run.actions_per_turn);
    r->add_option("--rng-seed", run.rng_seed);

    std::string score_logs;
    std::string score_out;
    auto* sc = app.add_subcommand("score", "Score a directory of logs");
    sc->add_option("--logs", score_logs)->required();
    sc->add_option("--out", score_out, "Write scores.csv and summary.csv here");

    std::string replay_file;
    std::string replay_format = "text";
    auto* rp = app.add_subcommand("replay", "Render a log round by round");
    rp->add_option("--log", replay_file)->required();
    rp->add_option("--format", replay_format)->check(CLI::IsMember({"text", "json"}));

    GroundingArgs grounding;
    auto* gr = app.add_subcommand("grounding", "Single-agent grounding suite");
    gr->add_option("--part", grounding.part)->required();
    gr->add_option("--tasks", grounding.tasks)->required();
    gr->add_option("--seat", grounding.seat, "Seat config: {\"kind\":\"oracle\"} or an llm config")->required();
    gr->add_option("--out", grounding.out);
    gr->add_flag("--ground-offset", grounding.ground_offset);

    std::string host = "127.0.0.1";
    int port = 8080;
    std::string data_dir = "data/service";
    std::string tasks_dir;
    std::string static_dir;
    int timeout_s = 120;
    auto* sv = app.add_subcommand("serve", "Host live sessions over HTTP");
    sv->add_option("--host", host);
    sv->add_option("--port", port);
    sv->add_option("--data", data_dir);
    sv->add_option("--tasks", tasks_dir)->required();
    sv->add_option("--static", static_dir);
    sv->add_option("--human-timeout", timeout_s, "Seconds before an idle human seat waits");

    std::vector<std::string> argv_store{"coblock"};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& s : argv_store) argv.push_back(s.data());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_usage;
    }
    const fs::path ws = workspace;
    auto resolve = [&](const std::string& p) { return fs::path(p).is_relative() ? ws / p : fs::path(p); };

    try {
        if (*g) return cmd_gen(gen, ws, out, err);
        if (*r) return cmd_run(run, ws, out, err);
        if (*gr) return cmd_grounding(grounding, ws, out, err);
        if (*sc) {
            const auto rows = score_log_dir(resolve(score_logs));
            if (score_out.empty()) {
                out << summary_csv(summarize(rows));
            } else {
                write_scores(rows, resolve(score_out), out);
            }
            return exit_ok;
        }
        if (*rp) {
            const EpisodeRecord rec = read_log_file(resolve(replay_file));
            if (replay_format == "json") {
                out << dump_canonical(render_replay_json(rec)) << "\n";
            } else {
                out << render_replay_text(rec);
            }
            return exit_ok;
        }
        if (*sv) {
            ServiceOptions opts;
            opts.data_dir = resolve(data_dir);
            opts.tasks_dir = resolve(tasks_dir);
            opts.human_timeout = std::chrono::seconds(timeout_s);
            opts.agent_base = ws;
            SessionManager manager(opts);
            HttpService http(manager, static_dir.empty() ? fs::path{} : resolve(static_dir));
            const int bound = http.bind(host, port);
            if (bound < 0) {
                err << "serve: cannot bind " << host << ":" << port << "\n";
                return exit_usage;
            }
            out << "listening on http://" << host << ":" << bound << "\n" << std::flush;
            http.listen();
            return exit_ok;
        }
    } catch (const Error& e) {
        err << e.code() << ": " << e.what() << "\n";
        return e.code() == "config" ? exit_usage : exit_task_failures;
    }
    return exit_usage;
}

} // namespace coblock
