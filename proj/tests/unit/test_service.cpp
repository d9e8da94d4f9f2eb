#include <doctest.h>

#include <filesystem>

#include <unistd.h>

#include "coblock/service.hpp"

using namespace coblock;
using namespace std::chrono_literals;
namespace fs = std::filesystem;

namespace {

Task small_task() {
    Task t;
    t.target = Structure{{Color::red, {0, 0, 0}}, {Color::blue, {1, 0, 0}}};
    t.goal1.sub = Structure{{Color::red, {0, 0, 0}}};
    t.goal2.sub = Structure{{Color::blue, {1, 0, 0}}};
    t.inv1 = Inventory{{Color::red, 1}, {Color::green, 3}};
    t.inv2 = Inventory{{Color::blue, 1}, {Color::purple, 5}};
    t.family = TaskFamily::independent;
    return t;
}

struct Fixture {
    fs::path dir;
    std::unique_ptr<SessionManager> manager;
    explicit Fixture(std::chrono::milliseconds timeout = 60s) {
        static int n = 0;
        dir = fs::temp_directory_path() / ("coblock_service_" + std::to_string(::getpid()) + "_" + std::to_string(n++));
        fs::remove_all(dir);
        ServiceOptions o;
        o.data_dir = dir;
        o.human_timeout = timeout;
        manager = std::make_unique<SessionManager>(o);
        manager->add_task("small", small_task());
    }
    ~Fixture() {
        manager.reset();
        fs::remove_all(dir);
    }
};

SeatConfig human(std::string code) { return {SeatConfig::Kind::human, std::move(code), {}}; }
SeatConfig scripted() { return {SeatConfig::Kind::agent, {}, Json{{"kind", "scripted"}}}; }

std::string code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    return "";
}

std::string stream_text(const std::vector<WireMessage>& ms) {
    std::string out;
    for (const auto& m : ms) out += dump_canonical(encode(m)) + "\n";
    return out;
}

} // namespace

TEST_SUITE("service") {

TEST_CASE("session creation errors") {
    Fixture f;
    auto& m = *f.manager;
    CHECK(code_of([&] { m.create_session("nope", {human("a"), human("b")}); }) == "unknown_task");
    CHECK(code_of([&] { m.create_session("small", {human("a"), human("a")}); }) == "invalid_seat");
    CHECK(code_of([&] { m.create_session("small", {human(""), scripted()}); }) == "invalid_seat");
    CHECK(code_of([&] {
              m.create_session("small", {human("a"), SeatConfig{SeatConfig::Kind::agent, {}, Json{{"kind", "robot"}}}});
          }) == "invalid_seat");
    SessionOverrides bad;
    bad.max_rounds = 0;
    CHECK(code_of([&] { m.create_session("small", {human("a"), human("b")}, bad); }) == "invalid_seat");
    CHECK(code_of([&] { m.session_info("s999"); }) == "unknown_session");
}

TEST_CASE("submission errors") {
    Fixture f;
    auto& m = *f.manager;
    const std::string id = m.create_session("small", {human("a"), human("b")});
    CHECK(code_of([&] { m.submit_action(id, 3, "a", {Wait{}}); }) == "invalid_seat");
    CHECK(code_of([&] { m.submit_action(id, 1, "b", {Wait{}}); }) == "forbidden");
    CHECK(code_of([&] { m.submit_action("nope", 1, "a", {Wait{}}); }) == "unknown_session");
    CHECK(m.submit_action(id, 1, "a", {Wait{}}) == 1);
    CHECK(code_of([&] { m.submit_action(id, 1, "a", {Wait{}}); }) == "duplicate");
    CHECK(code_of([&] { m.messages_since(id, 2, "a", 0); }) == "forbidden");

    const std::string mixed = m.create_session("small", {human("a"), scripted()});
    CHECK(code_of([&] { m.submit_action(mixed, 2, "", {Wait{}}); }) == "not_your_seat");
    CHECK(code_of([&] { m.messages_since(mixed, 2, "", 0); }) == "forbidden");
}

TEST_CASE("a human and a scripted agent finish the task") {
    Fixture f;
    auto& m = *f.manager;
    const std::string id = m.create_session("small", {human("code-1"), scripted()});
    auto first = m.messages_since(id, 1, "code-1", 0);
    REQUIRE(first.size() == 1);
    CHECK(first[0].type == "state_snapshot");
    CHECK(first[0].seq == 1);
    CHECK(first[0].payload["goal"] == encode(small_task().goal1));
    CHECK(first[0].payload["partner"] == "agent");

    m.submit_action(id, 1, "code-1", {Place{Color::red, {0, 0, 0}}});
    REQUIRE(m.wait_finished(id, 10s));
    CHECK(m.session_info(id)["status"] == "success");
    CHECK(code_of([&] { m.submit_action(id, 1, "code-1", {Wait{}}); }) == "session_ended");

    const auto all = m.messages_since(id, 1, "code-1", 0);
    for (std::size_t i = 0; i < all.size(); ++i) CHECK(all[i].seq == i + 1);
    CHECK(all.back().type == "episode_end");
    CHECK(all.back().payload["status"] == "success");
    bool saw_result = false;
    for (const auto& w : all) {
        if (w.type == "action_result") {
            saw_result = true;
            CHECK(w.payload["automatic_wait"] == false);
        }
    }
    CHECK(saw_result);

    // resuming from any seq returns exactly the tail
    for (std::uint64_t k = 0; k <= all.size(); ++k) {
        const auto tail = m.messages_since(id, 1, "code-1", k);
        CHECK(tail.size() == all.size() - k);
        if (!tail.empty()) CHECK(tail.front().seq == k + 1);
    }
    CHECK_FALSE(m.wait_for_messages(id, 1, all.size(), 50ms));
    CHECK(m.wait_for_messages(id, 1, 0, 50ms));
}

TEST_CASE("a seat's stream never carries the partner's goal or inventory") {
    Fixture f;
    auto& m = *f.manager;
    const std::string id = m.create_session("small", {human("p1"), human("p2")});
    m.submit_action(id, 1, "p1", {SendMessage{"hello"}});
    m.submit_action(id, 2, "p2", {Place{Color::purple, {4, 0, 4}}});
    REQUIRE(m.wait_for_messages(id, 1, 1, 5s));
    m.submit_action(id, 1, "p1", {Place{Color::red, {0, 0, 0}}});
    m.submit_action(id, 2, "p2", {Place{Color::blue, {1, 0, 0}}});
    m.wait_finished(id, 5s);

    const Task t = small_task();
    const std::string s1 = stream_text(m.messages_since(id, 1, "p1", 0));
    const std::string s2 = stream_text(m.messages_since(id, 2, "p2", 0));
    CHECK(s1.find(dump_canonical(encode(t.goal2))) == std::string::npos);
    CHECK(s1.find(dump_canonical(encode(t.inv2))) == std::string::npos);
    CHECK(s2.find(dump_canonical(encode(t.goal1))) == std::string::npos);
    CHECK(s2.find(dump_canonical(encode(t.inv1))) == std::string::npos);
    CHECK(s2.find("green") == std::string::npos);
    CHECK(s1.find("hello") != std::string::npos);
    CHECK(s2.find("hello") != std::string::npos);
    // partner's placed purple block is public once built
    CHECK(s1.find("purple") != std::string::npos);
    const std::string info = dump_canonical(m.session_info(id));
    CHECK(info.find("inventory") == std::string::npos);
    CHECK(info.find("goal") == std::string::npos);
}

TEST_CASE("a silent human seat times out into Wait") {
    Fixture f(100ms);
    auto& m = *f.manager;
    SessionOverrides o;
    o.max_rounds = 2;
    const std::string id = m.create_session("small", {human("h"), scripted()}, o);
    REQUIRE(m.wait_finished(id, 10s));
    CHECK(m.session_info(id)["status"] == "round_limit");
    int automatic = 0;
    for (const auto& w : m.messages_since(id, 1, "h", 0)) {
        if (w.type == "action_result" && w.payload["automatic_wait"] == true) ++automatic;
    }
    CHECK(automatic == 2);
}

TEST_CASE("finished and abandoned sessions leave replayable logs") {
    Fixture f;
    auto& m = *f.manager;
    const std::string done = m.create_session("small", {scripted(), scripted()});
    REQUIRE(m.wait_finished(done, 10s));
    const std::string stuck = m.create_session("small", {human("x"), human("y")});
    m.submit_action(stuck, 1, "x", {Wait{}});
    m.abandon(stuck);
    CHECK(m.finished(stuck));
    CHECK(code_of([&] { m.submit_action(stuck, 2, "y", {Wait{}}); }) == "session_ended");

    const auto ok = m.store().list(std::nullopt, std::string("success"));
    REQUIRE(ok.size() == 1);
    CHECK(ok[0]["episode_id"] == done);
    CHECK(ok[0]["family"] == "independent");
    CHECK(m.store().list(std::string("goal_dependent"), std::nullopt).empty());
    CHECK(m.store().list(std::nullopt, std::nullopt).size() == 2);

    const auto text = m.store().log_text(done);
    REQUIRE(text);
    const EpisodeRecord rec = decode_log(*text);
    CHECK(replay(rec.events, rec.config).status == EpisodeStatus::success);
    const EpisodeRecord empty = decode_log(*m.store().log_text(stuck));
    CHECK(empty.events.empty());
    CHECK_FALSE(m.store().log_text("../etc/passwd"));
    CHECK_FALSE(m.store().log_text("missing"));
}

}
