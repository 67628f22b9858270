#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <thread>

#include "doctest.h"
#include "helpers.hpp"
#include "pictoforge/bus.hpp"
#include "pictoforge/error.hpp"
#include "random_model.hpp"

using namespace pictoforge;
using pftest::code_of;

namespace {

Event make(BusEventKind kind, std::string subject, std::map<std::string, std::string> payload = {}) {
  Event e;
  e.kind = kind;
  e.subject = std::move(subject);
  e.payload = std::move(payload);
  return e;
}

std::vector<std::uint64_t> seqs(const std::vector<Event>& es) {
  std::vector<std::uint64_t> out;
  for (const auto& e : es) out.push_back(e.seq);
  return out;
}

} // namespace

TEST_CASE("event lines round trip through escapes") {
  Event e = make(BusEventKind::ArtifactGenerated, "a|b;c=d%e\nf\r",
                 {{"k=1", "v;2|x"}, {"path", "/tmp/out.sql"}, {"empty", ""}});
  e.seq = 42;
  e.revision = 7;
  e.timestamp = 1700000000;
  std::string line = format_event_line(e);
  CHECK(line.find('\n') == std::string::npos);
  CHECK(std::count(line.begin(), line.end(), '|') == 5);
  auto back = parse_event_line(line);
  REQUIRE(back);
  CHECK(*back == e);

  e.revision.reset();
  e.payload.clear();
  CHECK(parse_event_line(format_event_line(e)) == e);

  CHECK_FALSE(parse_event_line("garbage"));
  CHECK_FALSE(parse_event_line("1|NOT_A_KIND|s||0|"));
  CHECK_FALSE(parse_event_line("x|CHECK_COMPLETED|s||0|"));
}

TEST_CASE("random event lines round trip") {
  pftest::Rng rng(8);
  const std::string alphabet = "ab|;=%\r\n \t\\x";
  auto word = [&] {
    std::string s;
    for (int n = static_cast<int>(rng() % 8); n > 0; --n) s += alphabet[rng() % alphabet.size()];
    return s;
  };
  for (int i = 0; i < 500; ++i) {
    Event e = make(static_cast<BusEventKind>(rng() % 4), word());
    e.seq = rng() % 100000 + 1;
    if (rng() % 2) e.revision = static_cast<std::int64_t>(rng() % 1000);
    e.timestamp = static_cast<std::int64_t>(rng() % 2000000000);
    for (int n = static_cast<int>(rng() % 4); n > 0; --n) e.payload[word()] = word();
    CHECK(parse_event_line(format_event_line(e)) == e);
  }
}

TEST_CASE("kind names") {
  for (auto k : {BusEventKind::DiagramCommitted, BusEventKind::CheckCompleted, BusEventKind::ArtifactGenerated,
                 BusEventKind::SessionEnded})
    CHECK(bus_event_kind(to_string(k)) == k);
  CHECK(std::string(to_string(BusEventKind::DiagramCommitted)) == "DIAGRAM_COMMITTED");
  CHECK_FALSE(bus_event_kind("diagram_committed"));
}

TEST_CASE("emit assigns dense sequence numbers") {
  pftest::TempDir dir;
  EventLog log(dir.path() / "events.log");
  CHECK(log.read_from(1).empty());
  auto a = log.emit(make(BusEventKind::CheckCompleted, "x"));
  auto b = log.emit(make(BusEventKind::CheckCompleted, "y"));
  CHECK(a.seq == 1);
  CHECK(b.seq == 2);
  CHECK(a.timestamp > 0);
  auto all = log.read_from(1);
  REQUIRE(all.size() == 2);
  CHECK(all[0] == a);
  CHECK(all[1] == b);
  CHECK(log.read_from(2) == std::vector<Event>{b});
  CHECK(log.read_from(3).empty());
}

TEST_CASE("two processes emitting concurrently get unique dense seqs") {
  pftest::TempDir dir;
  EventLog log(dir.path() / "events.log");
  constexpr int per_process = 100;
  pid_t child = ::fork();
  REQUIRE(child >= 0);
  if (child == 0) {
    try {
      for (int i = 0; i < per_process; ++i) log.emit(make(BusEventKind::CheckCompleted, "child"));
    } catch (...) {
      ::_exit(1);
    }
    ::_exit(0);
  }
  for (int i = 0; i < per_process; ++i) log.emit(make(BusEventKind::CheckCompleted, "parent"));
  int status = 0;
  ::waitpid(child, &status, 0);
  CHECK(WIFEXITED(status));
  CHECK(WEXITSTATUS(status) == 0);

  auto all = log.read_from(1);
  REQUIRE(all.size() == 2 * per_process);
  for (std::size_t i = 0; i < all.size(); ++i) CHECK(all[i].seq == i + 1);
  CHECK(std::count_if(all.begin(), all.end(), [](const Event& e) { return e.subject == "child"; }) == per_process);
}

TEST_CASE("tail replays then follows") {
  pftest::TempDir dir;
  EventLog log(dir.path() / "events.log");
  for (const char* s : {"a", "b", "c"}) log.emit(make(BusEventKind::SessionEnded, s));

  std::vector<Event> seen;
  std::stop_source stop;
  std::atomic<int> count{0};
  std::thread follower([&] {
    log.tail(
        1,
        [&](const Event& e) {
          seen.push_back(e);
          return ++count < 4;
        },
        stop.get_token(), std::chrono::milliseconds(5));
  });
  auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(5);
  while (count < 3 && std::chrono::steady_clock::now() < deadline)
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  CHECK(count == 3); // still blocked waiting for the fourth
  std::this_thread::sleep_for(std::chrono::milliseconds(50));
  CHECK(count == 3);
  log.emit(make(BusEventKind::SessionEnded, "d"));
  follower.join();
  CHECK(seqs(seen) == std::vector<std::uint64_t>{1, 2, 3, 4});
  CHECK(seen[3].subject == "d");
}

TEST_CASE("tail stops on request and honours from_seq") {
  pftest::TempDir dir;
  EventLog log(dir.path() / "events.log");
  for (int i = 0; i < 5; ++i) log.emit(make(BusEventKind::CheckCompleted, std::to_string(i)));
  std::vector<Event> seen;
  std::stop_source stop;
  std::thread follower([&] {
    log.tail(
        4, [&](const Event& e) { return seen.push_back(e), true; }, stop.get_token(), std::chrono::milliseconds(5));
  });
  std::this_thread::sleep_for(std::chrono::milliseconds(100));
  stop.request_stop();
  follower.join();
  CHECK(seqs(seen) == std::vector<std::uint64_t>{4, 5});
}

TEST_CASE("interleaved emitters and a follower agree on order") {
  pftest::TempDir dir;
  EventLog log(dir.path() / "events.log");
  std::vector<Event> seen;
  std::stop_source stop;
  std::thread follower([&] {
    log.tail(
        1, [&](const Event& e) { return seen.push_back(e), seen.size() < 120; }, stop.get_token(),
        std::chrono::milliseconds(1));
  });
  std::vector<std::thread> emitters;
  for (int t = 0; t < 4; ++t)
    emitters.emplace_back([&, t] {
      pftest::Rng rng(t);
      for (int i = 0; i < 30; ++i) {
        log.emit(make(BusEventKind::CheckCompleted, "t" + std::to_string(t), {{"i", std::to_string(i)}}));
        if (rng() % 3 == 0) std::this_thread::sleep_for(std::chrono::microseconds(rng() % 500));
      }
    });
  for (auto& e : emitters) e.join();
  follower.join();
  REQUIRE(seen.size() == 120);
  CHECK(seen == log.read_from(1));
  for (std::size_t i = 0; i < seen.size(); ++i) CHECK(seen[i].seq == i + 1);
  // Each emitter's own events appear in its emission order.
  std::map<std::string, int> next;
  for (const auto& e : seen) CHECK(std::stoi(e.payload.at("i")) == next[e.subject]++);
}

TEST_CASE("trigger rules") {
  auto rules = parse_trigger_rules("# comment\n\nDIAGRAM_COMMITTED echo {subject} {revision}\n"
                                   "  CHECK_COMPLETED   true  \n");
  REQUIRE(rules.size() == 2);
  CHECK(rules[0].kind == BusEventKind::DiagramCommitted);
  CHECK(rules[0].command == "echo {subject} {revision}");
  CHECK(rules[1].command == "true");
  CHECK(code_of([] { parse_trigger_rules("NOPE echo\n"); }) == "BAD_TRIGGER");
  CHECK(code_of([] { parse_trigger_rules("SESSION_ENDED\n"); }) == "BAD_TRIGGER");
}

TEST_CASE("command expansion quotes substitutions") {
  Event e = make(BusEventKind::DiagramCommitted, "it's; rm -rf x");
  e.revision = 3;
  CHECK(expand_command("echo {subject} r{revision}", e) == "echo 'it'\\''s; rm -rf x' r'3'");
  e.revision.reset();
  CHECK(expand_command("x {revision}", e) == "x ''");
  CHECK(expand_command("no placeholders {other}", e) == "no placeholders {other}");
}

TEST_CASE("dispatch passes the payload on stdin") {
  pftest::TempDir dir;
  auto out = dir.path() / "payload.txt";
  auto args = dir.path() / "args.txt";
  std::vector<TriggerRule> rules = {
      {BusEventKind::DiagramCommitted, "cat > '" + out.string() + "'; echo {subject} {revision} > '" +
                                           args.string() + "'"},
      {BusEventKind::CheckCompleted, "echo wrong kind > '" + (dir.path() / "never").string() + "'"},
  };
  Event e = make(BusEventKind::DiagramCommitted, "login.use",
                 {{"author", "ada"}, {"message", "first; cut"}, {"digest", std::string(64, 'f')}});
  e.seq = 1;
  e.revision = 5;
  auto reports = bus_dispatch(rules, e);
  REQUIRE(reports.size() == 1);
  CHECK(reports[0].ok);
  CHECK(reports[0].exit_status == 0);
  CHECK(pftest::slurp(out) ==
        "author=ada\ndigest=" + std::string(64, 'f') + "\nmessage=first; cut\n");
  CHECK(pftest::slurp(args) == "login.use 5\n");
  CHECK_FALSE(std::filesystem::exists(dir.path() / "never"));
}

TEST_CASE("a failing rule is reported and the rest still run") {
  pftest::TempDir dir;
  auto marker = dir.path() / "ran";
  std::vector<TriggerRule> rules = {
      {BusEventKind::SessionEnded, "exit 7"},
      {BusEventKind::SessionEnded, "touch '" + marker.string() + "'"},
  };
  auto reports = bus_dispatch(rules, make(BusEventKind::SessionEnded, "s"));
  REQUIRE(reports.size() == 2);
  CHECK_FALSE(reports[0].ok);
  CHECK(reports[0].exit_status == 7);
  CHECK(reports[0].error.rfind("SPAWN_FAIL", 0) == 0);
  CHECK(reports[1].ok);
  CHECK(std::filesystem::exists(marker));
}

TEST_CASE("dispatcher runs each seq once") {
  pftest::TempDir dir;
  auto counter = dir.path() / "count";
  TriggerDispatcher d({{BusEventKind::CheckCompleted, "echo x >> '" + counter.string() + "'"}});
  Event e = make(BusEventKind::CheckCompleted, "m");
  e.seq = 9;
  CHECK(d.dispatch(e).size() == 1);
  CHECK(d.dispatch(e).empty());
  e.seq = 10;
  CHECK(d.dispatch(e).size() == 1);
  CHECK(pftest::slurp(counter) == "x\nx\n");
}

TEST_CASE("rules load from a file") {
  pftest::TempDir dir;
  pftest::spit(dir.path() / "triggers.conf", "SESSION_ENDED true\n");
  CHECK(load_trigger_rules(dir.path() / "triggers.conf").size() == 1);
  CHECK(load_trigger_rules(dir.path() / "absent.conf").empty()); // no file, no rules
}
