#include <algorithm>

#include "doctest.h"
#include "helpers.hpp"
#include "oracles.hpp"
#include "pictoforge/error.hpp"
#include "pictoforge/stdl.hpp"
#include "random_model.hpp"

using namespace pictoforge;

namespace {

std::vector<std::string> codes(const ParseResult& r) {
  std::vector<std::string> out;
  for (const auto& e : r.errors) out.push_back(to_string(e.code));
  return out;
}

int line_count(const std::string& s) { return static_cast<int>(std::count(s.begin(), s.end(), '\n')) + 1; }

} // namespace

TEST_CASE("minimal diagram") {
  auto r = parse(R"(diagram d { entry a; node a output "hi"; })", "t");
  REQUIRE(r.ok());
  const auto& m = *r.model;
  REQUIRE(m.diagrams.size() == 1);
  CHECK(m.diagrams[0].entry == "a");
  CHECK(m.diagrams[0].nodes.size() == 1);
  CHECK(m.diagrams[0].arcs.empty());
  CHECK(pretty_print(m) == "diagram d {\n  entry a;\n  node a output \"hi\";\n}\n");
}

TEST_CASE("empty model prints as empty text") {
  auto r = parse("  // nothing here\n", "t");
  REQUIRE(r.ok());
  CHECK(r.model->empty());
  CHECK(pretty_print(*r.model).empty());
}

TEST_CASE("bad escape is LEX003 at the backslash") {
  auto r = parse("diagram d {\n  node a output \"bad\\q\";\n}\n", "f.use");
  REQUIRE(r.errors.size() == 1);
  CHECK(r.errors[0].code == ParseCode::Lex003);
  CHECK(r.errors[0].span.line == 2);
  CHECK(r.errors[0].span.col == 21);
  CHECK(format_error(r.errors[0]).rfind("f.use:2:21: LEX003", 0) == 0);
}

TEST_CASE("lexical errors") {
  CHECK(codes(parse("diagram d { node a output \"x\"; } #", "t")) == std::vector<std::string>{"LEX001"});
  CHECK(codes(parse("diagram d { node a output \"open\n\"; }", "t")).at(0) == "LEX002");
  CHECK(codes(parse("diagram d { node a output \"never closed", "t")).at(0) == "LEX002");
  CHECK(codes(parse("diagram d { node a output \"${1}\"; }", "t")) == std::vector<std::string>{"LEX003"});
  CHECK(codes(parse("diagram d { node a output \"${x\"; }", "t")) == std::vector<std::string>{"LEX003"});
  CHECK(codes(parse("diagram \xC3\xA9 { }", "t")).at(0) == "LEX001");
}

TEST_CASE("syntax errors") {
  CHECK(codes(parse("diagram d { node a \"x\"; }", "t")).at(0) == "SYN001");
  CHECK(codes(parse("diagram d { node a output \"x\";", "t")).at(0) == "SYN002");
  CHECK(codes(parse("diagram d { arc a -> b on x; }", "t")).at(0) == "SYN001");
  CHECK(codes(parse("data s { relation r(A 2, B N); }", "t")).at(0) == "SYN001");
  CHECK(codes(parse("data s { entity E { id: float; } }", "t")).at(0) == "SYN001");
}

TEST_CASE("recovery reports one error per broken item") {
  std::string src = "diagram a { node x output; }\n"
                    "diagram b { entry y; node y output \"ok\"; }\n"
                    "chart c { module m { invokes ; } }\n"
                    "action z { v = ; }\n";
  auto r = parse(src, "t");
  CHECK_FALSE(r.ok());
  REQUIRE(r.errors.size() == 3);
  CHECK(r.errors[0].span.line == 1);
  CHECK(r.errors[1].span.line == 3);
  CHECK(r.errors[2].span.line == 4);
}

TEST_CASE("duplicates") {
  auto r = parse("diagram d { node a output \"1\"; node a output \"2\"; }", "t");
  REQUIRE(r.errors.size() == 1);
  CHECK(r.errors[0].code == ParseCode::DupName);
  CHECK(r.errors[0].span.col == 32);

  CHECK(codes(parse("diagram d { entry a; entry b; node a output \"\"; }", "t")).at(0) == "DUP_ENTRY");
  CHECK(codes(parse("chart c { module a root { } module b root { } }", "t")).at(0) == "DUP_ROOT");

  auto exits = parse("diagram d { exit a; exit a; node a output \"\"; }", "t");
  REQUIRE(exits.ok());
  CHECK(exits.model->diagrams[0].exits.size() == 1);
}

TEST_CASE("keywords are usable as names") {
  std::string src = R"(diagram call {
  entry node;
  node node output "n";
  node call output "c";
  node return output "r";
  arc node -> call on "x";
  arc call -> call call return return on otherwise;
  arc return -> node on "on" when on == "when" do do;
}

action do {
  on = $input + when;
}
)";
  auto r = parse(src, "t");
  REQUIRE(r.ok());
  const auto& d = r.model->diagrams[0];
  CHECK(std::get<NodeTarget>(d.arcs[0].target).node == "call");
  auto call = std::get<CallTarget>(d.arcs[1].target);
  CHECK(call.diagram == "call");
  CHECK(call.return_to == "return");
  CHECK(pretty_print(*r.model) == src);
}

TEST_CASE("login fixture item counts match a line scan") {
  std::string src = pftest::fixture("login.use");
  auto m = parse_or_throw(src, "login.use");
  auto counts = pftest::count_lines(src);
  CHECK(static_cast<int>(m.diagrams.size()) == counts.diagrams);
  CHECK(static_cast<int>(m.actions.size()) == counts.actions);
  std::size_t nodes = 0, arcs = 0;
  for (const auto& d : m.diagrams) nodes += d.nodes.size(), arcs += d.arcs.size();
  CHECK(static_cast<int>(nodes) == counts.nodes);
  CHECK(static_cast<int>(arcs) == counts.arcs);
  CHECK(counts.diagrams == 2);
  CHECK(counts.actions == 1);
}

TEST_CASE("decl_index follows source order") {
  auto m = parse_or_throw(pftest::fixture("guarded.use"), "g");
  const auto& arcs = m.diagrams[0].arcs;
  for (std::size_t i = 0; i < arcs.size(); ++i) CHECK(arcs[i].decl_index == static_cast<int>(i));
}

TEST_CASE("round trip on fixtures") {
  for (const char* name : {"login.use", "guarded.use", "menu.use", "loop.use", "broken.use", "library.use"}) {
    CAPTURE(name);
    auto m = parse_or_throw(pftest::fixture(name), name);
    std::string once = pretty_print(m);
    auto again = parse_or_throw(once, name);
    CHECK(model_equal(m, again));
    CHECK(pretty_print(again) == once);
  }
}

TEST_CASE("round trip on random models") {
  pftest::Rng rng(2024);
  for (int i = 0; i < 300; ++i) {
    auto m = pftest::random_model(rng);
    std::string text = pretty_print(m);
    CAPTURE(text);
    auto r = parse(text, "random");
    REQUIRE(r.ok());
    CHECK(model_equal(m, *r.model));
    CHECK(pretty_print(*r.model) == text);
  }
}

TEST_CASE("error spans stay inside the source") {
  pftest::Rng rng(7);
  std::string base = pftest::fixture("login.use") + pftest::fixture("library.use");
  const std::string junk = "{};\"\\$#(),->=!\n\xC3";
  for (int i = 0; i < 300; ++i) {
    std::string src = base;
    int edits = std::uniform_int_distribution<int>(1, 6)(rng);
    for (int k = 0; k < edits; ++k) {
      std::size_t pos = std::uniform_int_distribution<std::size_t>(0, src.size())(rng);
      if (rng() % 2 && pos < src.size())
        src.erase(pos, std::uniform_int_distribution<std::size_t>(1, 12)(rng));
      else
        src.insert(pos, 1, junk[rng() % junk.size()]);
    }
    auto r = parse(src, "fuzz");
    int lines = line_count(src);
    for (const auto& e : r.errors) {
      CHECK(e.span.line >= 1);
      CHECK(e.span.col >= 1);
      CHECK(e.span.line <= lines);
    }
    auto r2 = parse(src, "fuzz");
    CHECK(r.errors.size() == r2.errors.size());
    if (r.ok()) CHECK(model_equal(*r.model, *r2.model));
  }
}

TEST_CASE("expression helpers") {
  auto e = parse_expr(R"("a\"b" + x + $input)");
  REQUIRE(e);
  REQUIRE(e->size() == 3);
  CHECK(std::get<TermLiteral>((*e)[0]).text == "a\"b");
  CHECK(print_expr(*e) == R"("a\"b" + x + $input)");
  CHECK_FALSE(parse_expr("x +"));
  CHECK(quote("a\nb\\\"") == "\"a\\nb\\\\\\\"\"");
}

TEST_CASE("parse_or_throw") {
  CHECK_THROWS_AS(parse_or_throw("diagram {", "t"), Error);
  try {
    parse_or_throw("diagram {", "t");
  } catch (const Error& e) {
    CHECK(e.code() == "PARSE_ERROR");
  }
}
