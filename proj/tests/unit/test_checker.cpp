#include <algorithm>

#include "doctest.h"
#include "helpers.hpp"
#include "oracles.hpp"
#include "pictoforge/checker.hpp"
#include "pictoforge/stdl.hpp"
#include "random_model.hpp"

using namespace pictoforge;

namespace {

std::vector<Finding> check_src(const std::string& src) { return check_all(parse_or_throw(src, "t")); }

std::vector<std::string> lines(const std::vector<Finding>& fs) {
  std::vector<std::string> out;
  for (const auto& f : fs) out.push_back(format_finding(f));
  return out;
}

std::set<std::string> subjects(const std::vector<Finding>& fs, const std::string& code) {
  std::set<std::string> out;
  for (const auto& f : fs)
    if (f.code == code) out.insert(f.subject.name);
  return out;
}

} // namespace

TEST_CASE("clean fixtures have no findings") {
  for (const char* name : {"login.use", "guarded.use", "menu.use", "library.use", "loop.use"}) {
    CAPTURE(name);
    CHECK(lines(check_all(parse_or_throw(pftest::fixture(name), name))).empty());
  }
}

TEST_CASE("broken fixture has exactly one C001") {
  auto fs = check_all(parse_or_throw(pftest::fixture("broken.use"), "broken.use"));
  REQUIRE(fs.size() == 1);
  CHECK(format_finding(fs[0]) == "C001 ERROR arc:d[1] - arc target node 'c' undefined");
  CHECK(fs[0].span->line == 7);
  CHECK(has_errors(fs));
}

TEST_CASE("dialogue checks") {
  SUBCASE("C001 on exits, sources and return points") {
    auto fs = check_src(R"(diagram m { entry a; exit z; node a output ""; arc q -> a on "x";
                           arc a -> call m return r on "y"; })");
    CHECK(subjects(fs, "C001") == std::set<std::string>{"m", "m[0]", "m[1]"});
  }
  SUBCASE("C002 unreachable") {
    auto fs = check_src(R"(diagram d { entry a; exit b; node a output ""; node b output ""; node c output "";
                           arc a -> b on "x"; arc c -> b on "y"; })");
    CHECK(lines(fs) == std::vector<std::string>{"C002 WARNING node:d.c - node unreachable from entry 'a'"});
  }
  SUBCASE("C002 follows call return points") {
    auto fs = check_src(R"(diagram d { entry a; exit b; node a output ""; node b output "";
                           arc a -> call s return b on "x"; }
                           diagram s { entry t; exit t; node t output ""; })");
    CHECK(fs.empty());
  }
  SUBCASE("C003") {
    CHECK(subjects(check_src(R"(diagram d { node a output ""; })"), "C003") == std::set<std::string>{"d"});
    CHECK(subjects(check_src(R"(diagram d { entry x; node a output ""; })"), "C003") == std::set<std::string>{"d"});
  }
  SUBCASE("C004 on the later arc only") {
    auto fs = check_src(R"(diagram d { entry a; exit a; node a output "";
                           arc a -> a on "x" when v == "1"; arc a -> a on "x" when v == "1";
                           arc a -> a on "x" when v == "2"; arc a -> a on otherwise; arc a -> a on otherwise; }
                           action set { v = $input; })");
    CHECK(subjects(fs, "C004") == std::set<std::string>{"d[1]", "d[4]"});
  }
  SUBCASE("C005 once per callee") {
    auto fs = check_src(R"(diagram d { entry a; exit a; node a output "";
                           arc a -> call s return a on "x"; arc a -> call s return a on "y"; }
                           diagram s { entry t; node t output ""; arc t -> t on otherwise; })");
    CHECK(subjects(fs, "C005") == std::set<std::string>{"s"});
    CHECK(std::count_if(fs.begin(), fs.end(), [](const Finding& f) { return f.code == "C005"; }) == 1);
  }
  SUBCASE("C006 and C007") {
    auto fs = check_src(R"(diagram d { entry a; exit a; node a output ""; arc a -> call nope return a on "x" do ghost; })");
    CHECK(subjects(fs, "C006") == std::set<std::string>{"d[0]"});
    CHECK(subjects(fs, "C007") == std::set<std::string>{"d[0]"});
  }
  SUBCASE("C008 and C302, one per variable") {
    auto fs = check_src(R"(diagram d { entry a; exit a; node a output "${x} ${x}"; arc a -> a on "k" when x == "" do s; }
                           action s { y = $input; y = "again"; })");
    CHECK(lines(fs) == std::vector<std::string>{
                           "C008 WARNING variable:x - read in output of d.a but never assigned",
                           "C302 WARNING variable:y - assigned by s but never read by an output or guard",
                       });
  }
  SUBCASE("C009") {
    auto fs = check_src(R"(diagram d { entry a; exit b; node a output ""; node b output ""; arc a -> b on "x";
                           node c output ""; arc b -> c on "y"; })");
    CHECK(subjects(fs, "C009") == std::set<std::string>{"d.c"});
  }
}

TEST_CASE("data checks") {
  auto fs = check_src(R"(data s { entity A { id: int key; } entity B { x: int; } relation r(A 1, Z N); }
                         data t { entity a { k: int key; } })");
  CHECK(subjects(fs, "C101") == std::set<std::string>{"t.a"});
  CHECK(subjects(fs, "C102") == std::set<std::string>{"s.r"});
  CHECK(subjects(fs, "C103") == std::set<std::string>{"s.B"});
}

TEST_CASE("chart checks") {
  auto fs = check_src(R"(chart c { module top root { invokes a; invokes ghost; } module a { invokes b; }
                                   module b { invokes a; } module lonely { } }
                         chart n { module x { } })");
  CHECK(subjects(fs, "C201") == std::set<std::string>{"c.top"});
  CHECK(subjects(fs, "C202") == std::set<std::string>{"c.a", "c.b"});
  CHECK(subjects(fs, "C203") == std::set<std::string>{"c.lonely"});
  CHECK(subjects(fs, "C204") == std::set<std::string>{"n"});
}

TEST_CASE("cross checks") {
  auto fs = check_src(R"(data s { entity E { id: int key; } }
                         chart c { module m root { invokes k with id, user, junk; invokes k with junk; } module k { } }
                         diagram d { entry a; exit a; node a output "${user}"; arc a -> a on "x" do set; }
                         action set { user = $input; })");
  CHECK(lines(fs) == std::vector<std::string>{
                         "C301 WARNING couple:c.junk - data couple matches no entity attribute and no dialogue variable"});
}

TEST_CASE("severity and ordering") {
  CHECK(severity_of("C001") == Severity::Error);
  CHECK(severity_of("C302") == Severity::Warning);
  std::vector<Finding> fs = {
      {"C002", Severity::Warning, {"node", "d.b"}, "x", std::nullopt, {}},
      {"C001", Severity::Error, {"arc", "d[1]"}, "y", std::nullopt, {}},
      {"C002", Severity::Warning, {"node", "d.a"}, "x", std::nullopt, {}},
  };
  sort_findings(fs);
  CHECK(lines(fs) == std::vector<std::string>{"C001 ERROR arc:d[1] - y", "C002 WARNING node:d.a - x",
                                              "C002 WARNING node:d.b - x"});
  CHECK_FALSE(has_errors({fs[1], fs[2]}));
}

TEST_CASE("findings are deterministic and sorted on random models") {
  pftest::Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    auto m = pftest::random_model(rng);
    auto a = check_all(m);
    auto b = check_all(m);
    CHECK(lines(a) == lines(b));
    auto sorted = a;
    sort_findings(sorted);
    CHECK(lines(sorted) == lines(a));
    for (const auto& f : a) CHECK(f.severity == severity_of(f.code));
  }
}

TEST_CASE("C002 agrees with the reachability oracle") {
  pftest::Rng rng(99);
  for (int i = 0; i < 300; ++i) {
    auto m = pftest::random_reachability_model(rng);
    const auto& d = *m.find_diagram("main");
    CHECK(subjects(check_std(m), "C002") == pftest::unreachable_nodes(d));
  }
}

TEST_CASE("C202 and C203 agree with path enumeration") {
  pftest::Rng rng(100);
  for (int i = 0; i < 300; ++i) {
    auto m = pftest::random_chart_model(rng);
    auto fs = check_sc(m);
    CHECK(subjects(fs, "C202") == pftest::cyclic_modules(m.charts[0]));
    CHECK(subjects(fs, "C203") == pftest::unreached_modules(m.charts[0]));
  }
}

TEST_CASE("C302 agrees with a text scan") {
  pftest::Rng rng(101);
  for (int i = 0; i < 300; ++i) {
    auto m = pftest::random_model(rng);
    CHECK(subjects(check_cross(m), "C302") == pftest::unread_variables(pretty_print(m)));
  }
}
