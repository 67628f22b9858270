#include "oracles.hpp"

#include <cctype>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace pftest {

using namespace pictoforge;

std::set<std::string> unreachable_nodes(const StdDiagram& d) {
  std::set<std::string> names;
  for (const auto& n : d.nodes) names.insert(n.name);
  if (d.entry.empty() || !names.count(d.entry)) return {};

  std::map<std::string, std::vector<std::string>> next;
  for (const auto& a : d.arcs) {
    if (auto t = std::get_if<NodeTarget>(&a.target))
      next[a.from].push_back(t->node);
    else
      next[a.from].push_back(std::get<CallTarget>(a.target).return_to);
  }
  std::set<std::string> seen = {d.entry};
  std::vector<std::string> frontier = {d.entry};
  while (!frontier.empty()) {
    std::vector<std::string> following;
    for (const auto& n : frontier)
      for (const auto& m : next[n])
        if (seen.insert(m).second) following.push_back(m);
    frontier.swap(following);
  }
  std::set<std::string> out;
  for (const auto& n : d.nodes)
    if (!seen.count(n.name)) out.insert(d.name + "." + n.name);
  return out;
}

namespace {

std::map<std::string, std::vector<std::string>> call_graph(const ScChart& chart) {
  std::set<std::string> defined;
  for (const auto& m : chart.modules) defined.insert(m.name);
  std::map<std::string, std::vector<std::string>> g;
  for (const auto& m : chart.modules)
    for (const auto& inv : m.invocations)
      if (defined.count(inv.callee)) g[m.name].push_back(inv.callee);
  return g;
}

// Visits every simple path starting at `from`; `on_step(path, next)` sees each extension.
void enumerate_paths(const std::map<std::string, std::vector<std::string>>& g, std::vector<std::string>& path,
                     const std::function<void(const std::vector<std::string>&, const std::string&)>& on_step) {
  auto it = g.find(path.back());
  if (it == g.end()) return;
  for (const auto& next : it->second) {
    on_step(path, next);
    bool on_path = false;
    for (const auto& p : path) on_path = on_path || p == next;
    if (on_path) continue;
    path.push_back(next);
    enumerate_paths(g, path, on_step);
    path.pop_back();
  }
}

} // namespace

std::set<std::string> cyclic_modules(const ScChart& chart) {
  auto g = call_graph(chart);
  std::set<std::string> out;
  for (const auto& m : chart.modules) {
    std::vector<std::string> path = {m.name};
    enumerate_paths(g, path, [&](const auto&, const std::string& next) {
      if (next == m.name) out.insert(chart.name + "." + m.name);
    });
  }
  return out;
}

std::set<std::string> unreached_modules(const ScChart& chart) {
  const ScModule* root = nullptr;
  for (const auto& m : chart.modules)
    if (m.is_root && !root) root = &m;
  if (!root) return {};
  auto g = call_graph(chart);
  std::set<std::string> on_some_path = {root->name};
  std::vector<std::string> path = {root->name};
  enumerate_paths(g, path, [&](const auto&, const std::string& next) { on_some_path.insert(next); });
  std::set<std::string> out;
  for (const auto& m : chart.modules)
    if (!on_some_path.count(m.name)) out.insert(chart.name + "." + m.name);
  return out;
}

// ---------------------------------------------------------------------------
// Canonical text scanning

namespace {

struct Tok {
  bool is_string = false;
  std::string text; // decoded for strings
};

std::vector<Tok> tokenize_line(const std::string& line) {
  std::vector<Tok> out;
  std::size_t i = 0;
  while (i < line.size()) {
    char c = line[i];
    if (c == ' ') {
      ++i;
    } else if (c == '"') {
      std::string s;
      ++i;
      while (line.at(i) != '"') {
        if (line[i] == '\\') {
          char e = line.at(i + 1);
          s += e == 'n' ? '\n' : e;
          i += 2;
        } else {
          s += line[i++];
        }
      }
      ++i;
      out.push_back({true, s});
    } else if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$') {
      std::size_t j = i;
      while (j < line.size() && (std::isalnum(static_cast<unsigned char>(line[j])) || line[j] == '_' || line[j] == '$'))
        ++j;
      out.push_back({false, line.substr(i, j - i)});
      i = j;
    } else if ((c == '-' || c == '=' || c == '!') && i + 1 < line.size() && (line[i + 1] == '>' || line[i + 1] == '=')) {
      out.push_back({false, line.substr(i, 2)});
      i += 2;
    } else {
      out.push_back({false, std::string(1, c)});
      ++i;
    }
  }
  return out;
}

std::set<std::string> placeholder_names(const std::string& s) {
  std::set<std::string> out;
  std::size_t pos = 0;
  while ((pos = s.find("${", pos)) != std::string::npos) {
    std::size_t close = s.find('}', pos);
    out.insert(s.substr(pos + 2, close - pos - 2));
    pos = close;
  }
  return out;
}

// One statement with the item it sits in.
struct Stmt {
  std::string item_kind; // diagram, data, chart, action
  std::string item;
  std::string owner; // entity or module name for nested lines
  int arc_index = -1;
  std::vector<Tok> toks;
};

std::vector<Stmt> statements(const std::string& text) {
  std::vector<Stmt> out;
  std::istringstream in(text);
  std::string item_kind, item, owner;
  int arcs = 0;
  for (std::string line; std::getline(in, line);) {
    auto toks = tokenize_line(line);
    if (toks.empty()) continue;
    std::size_t indent = line.find_first_not_of(' ');
    if (indent == 0 && toks.size() >= 3 && toks[2].text == "{") {
      item_kind = toks[0].text;
      item = toks[1].text;
      arcs = 0;
      continue;
    }
    if (toks[0].text == "}" && !toks[0].is_string) {
      if (indent == 2) owner.clear();
      continue;
    }
    if (indent == 2 && (toks[0].text == "entity" || toks[0].text == "module") && toks.back().text == "{") {
      owner = toks[1].text;
      out.push_back({item_kind, item, owner, -1, toks});
      continue;
    }
    Stmt s{item_kind, item, owner, -1, toks};
    if (item_kind == "diagram" && toks[0].text == "arc") s.arc_index = arcs++;
    out.push_back(std::move(s));
  }
  return out;
}

// Parts of an arc statement.
struct ArcParts {
  std::string from, target, call, ret, pattern, guard_var, action;
  bool literal = false;
};

ArcParts arc_parts(const std::vector<Tok>& t) {
  ArcParts a;
  a.from = t[1].text;
  std::size_t i = 3;
  if (t[i].text == "call" && !t[i + 2].is_string && t[i + 2].text == "return") {
    a.call = t[i + 1].text;
    a.ret = t[i + 3].text;
    i += 4;
  } else {
    a.target = t[i].text;
    i += 1;
  }
  ++i; // on
  a.literal = t[i].is_string;
  a.pattern = t[i].text;
  ++i;
  if (i < t.size() && t[i].text == "when" && !t[i].is_string) {
    a.guard_var = t[i + 1].text;
    i += 4;
  }
  if (i < t.size() && t[i].text == "do" && !t[i].is_string) a.action = t[i + 1].text;
  return a;
}

} // namespace

DictionaryScan scan_dictionary(const std::string& text, const std::string& source_name) {
  auto stmts = statements(text);
  const std::string top = "model:" + source_name;
  DictionaryScan dict;
  auto define = [&](const std::string& name, const char* kind, const std::string& where) {
    dict.try_emplace(name + "\x1f" + kind + "\x1f" + where);
  };

  // Variable homes: first assigning action wins, in action order.
  std::map<std::string, std::string> home;
  for (const auto& s : stmts)
    if (s.item_kind == "action" && s.toks.size() > 1 && s.toks[1].text == "=")
      home.try_emplace(s.toks[0].text, "action:" + s.item);
  std::set<std::string> diagrams_seen, actions_seen;
  for (const auto& s : stmts) {
    if (s.item_kind == "diagram") {
      if (s.toks[0].text == "node")
        for (const auto& v : placeholder_names(s.toks[3].text)) home.try_emplace(v, top);
      if (s.toks[0].text == "arc") {
        auto a = arc_parts(s.toks);
        if (!a.guard_var.empty()) home.try_emplace(a.guard_var, top);
      }
    }
  }
  for (const auto& s : stmts)
    if (s.item_kind == "action")
      for (std::size_t i = 2; i < s.toks.size(); ++i)
        if (!s.toks[i].is_string && s.toks[i].text != "+" && s.toks[i].text != ";" && s.toks[i].text != "$input")
          home.try_emplace(s.toks[i].text, top);
  for (const auto& [v, h] : home) define(v, "VARIABLE", h);

  // Items with no statements still define themselves; find headers directly.
  {
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) {
      if (line.empty() || line[0] == ' ' || line[0] == '}') continue;
      auto t = tokenize_line(line);
      if (t[0].text == "diagram") define(t[1].text, "DIAGRAM", top);
      if (t[0].text == "action") define(t[1].text, "ACTION", top);
    }
  }
  for (const auto& s : stmts) {
    const auto& t = s.toks;
    if (s.item_kind == "diagram" && t[0].text == "node") define(t[1].text, "NODE", "diagram:" + s.item);
    if (s.item_kind == "diagram" && t[0].text == "arc") {
      auto a = arc_parts(t);
      if (a.literal) define(a.pattern, "ARC_PATTERN", "diagram:" + s.item);
    }
    if (s.item_kind == "data" && t[0].text == "entity" && t.back().text == "{")
      define(t[1].text, "ENTITY", "schema:" + s.item);
    if (s.item_kind == "data" && !s.owner.empty() && t.size() > 1 && t[1].text == ":")
      define(t[0].text, "ATTRIBUTE", "entity:" + s.item + "." + s.owner);
    if (s.item_kind == "data" && s.owner.empty() && t[0].text == "relation") define(t[1].text, "RELATION", "schema:" + s.item);
    if (s.item_kind == "chart" && t[0].text == "module") define(t[1].text, "MODULE", "chart:" + s.item);
    if (s.item_kind == "chart" && t[0].text == "invokes")
      for (std::size_t i = 3; i < t.size(); ++i)
        if (t[i].text != "," && t[i].text != ";") define(t[i].text, "COUPLE", "chart:" + s.item);
  }

  // Brute force: every definition against every statement.
  for (auto& [key, refs] : dict) {
    std::istringstream k(key);
    std::string name, kind, where;
    std::getline(k, name, '\x1f');
    std::getline(k, kind, '\x1f');
    std::getline(k, where, '\x1f');
    std::string container = where.substr(where.find(':') + 1);
    for (const auto& s : stmts) {
      const auto& t = s.toks;
      std::string arc_site = "arc:" + s.item + "[" + std::to_string(s.arc_index) + "]";
      bool in_same_diagram = s.item_kind == "diagram" && where == "diagram:" + s.item;
      if (kind == "NODE" && in_same_diagram) {
        if ((t[0].text == "entry" || t[0].text == "exit") && t[1].text == name) refs.insert("diagram:" + s.item);
        if (t[0].text == "arc") {
          auto a = arc_parts(t);
          if (a.from == name || a.target == name || a.ret == name) refs.insert(arc_site);
        }
      }
      if (kind == "ARC_PATTERN" && in_same_diagram && t[0].text == "arc") {
        auto a = arc_parts(t);
        if (a.literal && a.pattern == name) refs.insert(arc_site);
      }
      if ((kind == "DIAGRAM" || kind == "ACTION") && s.item_kind == "diagram" && t[0].text == "arc") {
        auto a = arc_parts(t);
        if ((kind == "DIAGRAM" ? a.call : a.action) == name) refs.insert(arc_site);
      }
      if (kind == "VARIABLE") {
        if (s.item_kind == "diagram" && t[0].text == "node" && placeholder_names(t[3].text).count(name))
          refs.insert("node:" + s.item + "." + t[1].text);
        if (s.item_kind == "diagram" && t[0].text == "arc" && arc_parts(t).guard_var == name) refs.insert(arc_site);
        if (s.item_kind == "action")
          for (std::size_t i = 0; i < t.size(); ++i)
            if (!t[i].is_string && t[i].text == name && (i == 0 || i >= 2)) refs.insert("action:" + s.item);
      }
      if (kind == "ENTITY" && s.item_kind == "data" && where == "schema:" + s.item && s.owner.empty() && t[0].text == "relation")
        for (std::size_t i = 3; i < t.size(); ++i)
          if (t[i].text == name && (t[i - 1].text == "(" || t[i - 1].text == ","))
            refs.insert("relation:" + s.item + "." + t[1].text);
      if (s.item_kind == "chart" && t[0].text == "invokes") {
        std::string site = "module:" + s.item + "." + s.owner;
        bool passes = false;
        for (std::size_t i = 3; i < t.size(); ++i) passes = passes || t[i].text == name;
        if (kind == "MODULE" && where == "chart:" + s.item && t[1].text == name) refs.insert(site);
        if (kind == "COUPLE" && where == "chart:" + s.item && passes) refs.insert(site);
        if (kind == "ATTRIBUTE" && passes) refs.insert(site);
      }
      (void)container;
    }
  }
  return dict;
}

std::set<std::string> unread_variables(const std::string& text) {
  std::set<std::string> assigned, read;
  for (const auto& s : statements(text)) {
    const auto& t = s.toks;
    if (s.item_kind == "action" && t.size() > 1 && t[1].text == "=") assigned.insert(t[0].text);
    if (s.item_kind == "diagram" && t[0].text == "node")
      for (const auto& v : placeholder_names(t[3].text)) read.insert(v);
    if (s.item_kind == "diagram" && t[0].text == "arc") {
      auto a = arc_parts(t);
      if (!a.guard_var.empty()) read.insert(a.guard_var);
    }
  }
  std::set<std::string> out;
  for (const auto& v : assigned)
    if (!read.count(v)) out.insert(v);
  return out;
}

ItemCounts count_lines(const std::string& source) {
  ItemCounts c;
  std::istringstream in(source);
  for (std::string line; std::getline(in, line);) {
    std::size_t start = line.find_first_not_of(" \t");
    if (start == std::string::npos) continue;
    std::string word = line.substr(start, line.find_first_of(" \t", start) - start);
    if (word == "diagram") ++c.diagrams;
    if (word == "node") ++c.nodes;
    if (word == "arc") ++c.arcs;
    if (word == "action") ++c.actions;
  }
  return c;
}

} // namespace pftest
