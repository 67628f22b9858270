#include "pictoforge/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "pictoforge/checker.hpp"
#include "pictoforge/error.hpp"
#include "pictoforge/generators.hpp"
#include "pictoforge/json_io.hpp"
#include "pictoforge/prototyper.hpp"
#include "pictoforge/repository.hpp"
#include "pictoforge/service.hpp"
#include "pictoforge/stdl.hpp"

namespace fs = std::filesystem;

namespace pictoforge {

namespace {

// Exit code for an Error raised while running a command.
int exit_for(const std::string& code) {
  if (code == "PARSE_ERROR" || code == "MODEL_HAS_ERRORS" || code == "SCHEMA_HAS_ERRORS" ||
      code == "TARGET_HAS_ERRORS" || code == "NO_KEY")
    return kExitFindings;
  if (code == "USAGE" || code == "NO_SUCH_DIAGRAM" || code == "SCHEMA_NOT_FOUND" || code == "TARGET_NOT_FOUND" ||
      code == "BAD_CONFIG")
    return kExitUsage;
  return kExitIo;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("IO", "cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out || !(out << text)) throw Error("IO", "cannot write '" + path.string() + "'");
}

struct Loaded {
  std::optional<DesignModel> model;
  int code = kExitOk;
};

// Prints parse errors and yields no model on failure.
Loaded load_model(const std::string& path, std::ostream& err) {
  auto r = parse(read_text(path), path);
  Loaded l;
  if (!r.ok()) {
    for (const auto& e : r.errors) err << format_error(e) << "\n";
    l.code = kExitFindings;
    return l;
  }
  l.model = std::move(r.model);
  return l;
}

std::string default_author() {
  for (const char* var : {"PICTOFORGE_AUTHOR", "USER", "LOGNAME"})
    if (const char* v = std::getenv(var); v && *v) return v;
  return "unknown";
}

struct Context {
  std::ostream& out;
  std::ostream& err;
  std::istream& in;
  std::string repo_flag;

  std::string repo_path() const {
    if (!repo_flag.empty()) return repo_flag;
    if (const char* v = std::getenv("PICTOFORGE_REPO"); v && *v) return v;
    return {};
  }

  Repository require_repo() const {
    std::string p = repo_path();
    if (p.empty()) throw Error("USAGE", "no repository: pass --repo or set PICTOFORGE_REPO");
    return Repository::open(p);
  }

  // Repository for side-channel events; absent when none is configured.
  std::optional<Repository> optional_repo() const {
    std::string p = repo_path();
    if (p.empty()) return std::nullopt;
    try {
      return Repository::open(p);
    } catch (const Error& e) {
      err << "warning: " << e.what() << "; event not recorded\n";
      return std::nullopt;
    }
  }

  void dispatch_triggers(const Repository& repo, const Event& e) const {
    if (!fs::exists(repo.triggers_path())) return;
    for (const auto& report : bus_dispatch(load_trigger_rules(repo.triggers_path()), e))
      if (!report.ok) err << "warning: trigger '" << report.command << "': " << report.error << "\n";
  }

  void emit(Event e) const {
    auto repo = optional_repo();
    if (!repo) return;
    try {
      dispatch_triggers(*repo, repo->events().emit(std::move(e)));
    } catch (const Error& ex) {
      err << "warning: " << ex.what() << "\n";
    }
  }
};

// ---------------------------------------------------------------------------

int cmd_parse(Context& c, const std::string& file) {
  auto l = load_model(file, c.err);
  if (!l.model) return l.code;
  c.out << pretty_print(*l.model);
  return kExitOk;
}

int cmd_check(Context& c, const std::string& file) {
  auto l = load_model(file, c.err);
  if (!l.model) return l.code;
  auto findings = check_all(*l.model);
  int errors = 0;
  for (const auto& f : findings) {
    c.out << format_finding(f) << "\n";
    errors += f.severity == Severity::Error;
  }
  Event e;
  e.kind = BusEventKind::CheckCompleted;
  e.subject = l.model->source_name;
  e.payload = {{"errors", std::to_string(errors)},
               {"warnings", std::to_string(findings.size() - static_cast<std::size_t>(errors))}};
  c.emit(std::move(e));
  return errors ? kExitFindings : kExitOk;
}

std::string sole_name(const std::vector<std::string>& names, const char* what) {
  if (names.size() == 1) return names.front();
  throw Error("USAGE", std::string("model has ") + std::to_string(names.size()) + " " + what + "; name one");
}

int cmd_gen(Context& c, const std::string& generator, const std::string& file, std::string name,
            const std::string& out_dir) {
  auto l = load_model(file, c.err);
  if (!l.model) return l.code;
  const DesignModel& m = *l.model;

  std::string text, ext;
  if (generator == "dict") {
    text = format_dictionary(gen_dictionary(m));
    ext = "dict.txt";
  } else if (generator == "sql") {
    if (name.empty()) {
      std::vector<std::string> names;
      for (const auto& s : m.schemas) names.push_back(s.name);
      name = sole_name(names, "data schemas");
    }
    text = gen_sql(m, name);
    ext = "sql";
  } else if (generator == "skeleton") {
    if (name.empty()) {
      std::vector<std::string> names;
      for (const auto& ch : m.charts) names.push_back(ch.name);
      for (const auto& d : m.diagrams) names.push_back(d.name);
      name = sole_name(names, "charts and diagrams");
    }
    auto kind = m.find_chart(name) ? SkeletonTarget::Chart : SkeletonTarget::Diagram;
    text = gen_skeleton(m, kind, name);
    ext = "skel.c";
  } else {
    text = gen_doc(m);
    ext = "md";
  }

  fs::path dir = out_dir.empty() ? fs::path(".") : fs::path(out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  fs::path target = dir / (fs::path(file).stem().string() + "_" + generator + "." + ext);
  write_text(target, text);
  c.out << target.string() << "\n";

  Event e;
  e.kind = BusEventKind::ArtifactGenerated;
  e.subject = target.string();
  e.payload = {{"generator", generator}, {"model", m.source_name}};
  if (!name.empty()) e.payload["target"] = name;
  c.emit(std::move(e));
  return kExitOk;
}

std::vector<std::string> script_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

// Transcript lines for new events, without echoing what the user typed.
void print_live(std::ostream& out, const std::vector<TranscriptEvent>& events, std::size_t from) {
  std::vector<TranscriptEvent> fresh(events.begin() + static_cast<std::ptrdiff_t>(from), events.end());
  std::istringstream lines(format_transcript(fresh));
  for (std::string line; std::getline(lines, line);)
    if (line.rfind("I: ", 0) != 0 && line != "I:") out << line << "\n";
}

int cmd_run(Context& c, const std::string& file, const std::string& diagram, const std::string& script,
            SessionLimits limits) {
  auto l = load_model(file, c.err);
  if (!l.model) return l.code;
  SessionStatus status;
  int steps;
  if (!script.empty()) {
    auto result = session_run_script(*l.model, diagram, script_lines(read_text(script)), limits);
    c.out << format_transcript(result);
    status = result.status;
    steps = result.step_count;
  } else {
    Session s = session_start(*l.model, diagram, limits);
    std::size_t shown = 0;
    print_live(c.out, s.transcript, shown);
    shown = s.transcript.size();
    std::string line;
    while (s.status == SessionStatus::Running) {
      c.out << "> " << std::flush;
      if (!std::getline(c.in, line)) break;
      session_input(s, line);
      print_live(c.out, s.transcript, shown);
      shown = s.transcript.size();
    }
    status = s.status;
    steps = s.step_count;
  }
  Event e;
  e.kind = BusEventKind::SessionEnded;
  e.subject = diagram;
  e.payload = {{"model", l.model->source_name}, {"status", to_string(status)}, {"steps", std::to_string(steps)}};
  c.emit(std::move(e));
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct RepoArgs {
  std::string file;
  std::string author;
  std::string message;
  std::string out_file;
  std::int64_t rev = 0; // 0: current
};

std::int64_t resolve_rev(const Repository& repo, std::int64_t rev) {
  return rev == 0 ? repo.current_revision() : rev;
}

void emit_output(Context& c, const std::string& out_file, const std::string& text) {
  if (out_file.empty())
    c.out << text;
  else
    write_text(out_file, text);
}

int cmd_repo(Context& c, const std::string& action, const RepoArgs& a) {
  if (action == "init") {
    std::string p = c.repo_path();
    if (p.empty()) throw Error("USAGE", "no repository: pass --repo or set PICTOFORGE_REPO");
    Repository::init(p);
    c.out << "initialized empty repository at " << p << "\n";
    return kExitOk;
  }
  Repository repo = c.require_repo();
  if (action == "lock") {
    auto r = repo.lock(a.author);
    if (auto busy = std::get_if<Busy>(&r)) {
      c.err << "BUSY: repository locked by '" << busy->holder << "' since " << busy->acquired_at << "\n";
      return kExitIo;
    }
    c.out << "locked by " << a.author << "\n";
  } else if (action == "unlock") {
    repo.unlock(a.author);
    c.out << "unlocked\n";
  } else if (action == "commit" || action == "import") {
    Revision rev;
    if (action == "commit") {
      auto l = load_model(a.file, c.err);
      if (!l.model) return l.code;
      rev = repo.commit(*l.model, a.author, a.message);
    } else {
      auto doc = nlohmann::json::parse(read_text(a.file), nullptr, false);
      if (doc.is_discarded()) throw Error("MALFORMED_DOC", "'" + a.file + "' is not JSON");
      rev = repo.import_document(doc, a.author);
    }
    c.out << "revision " << rev.number << " " << rev.model_digest << "\n";
    if (repo.last_event()) c.dispatch_triggers(repo, *repo.last_event());
  } else if (action == "checkout") {
    emit_output(c, a.out_file, pretty_print(repo.checkout(resolve_rev(repo, a.rev))));
  } else if (action == "export") {
    emit_output(c, a.out_file, repo.export_revision(resolve_rev(repo, a.rev)).dump(2) + "\n");
  } else if (action == "log") {
    for (const auto& r : repo.log())
      c.out << r.number << "\t" << r.timestamp << "\t" << r.author << "\t" << r.model_digest.substr(0, 12) << "\t"
            << r.message << "\n";
  }
  return kExitOk;
}

int cmd_events(Context& c, std::uint64_t from, bool follow) {
  Repository repo = c.require_repo();
  if (!follow) {
    for (const auto& e : repo.events().read_from(from)) c.out << format_event_line(e) << "\n";
    return kExitOk;
  }
  std::stop_source never;
  repo.events().tail(
      from,
      [&](const Event& e) {
        c.out << format_event_line(e) << "\n" << std::flush;
        return static_cast<bool>(c.out);
      },
      never.get_token());
  return kExitOk;
}

int cmd_serve(Context& c, int port, SessionLimits limits) {
  Repository repo = c.require_repo();
  WorkbenchConfig cfg;
  cfg.repo_root = repo.root();
  cfg.listen_port = port;
  cfg.limits = limits;
  Service service(cfg);
  int bound = service.bind();
  c.out << "serving " << repo.root().string() << " on http://" << cfg.host << ":" << bound << "\n" << std::flush;
  service.run();
  return kExitOk;
}

} // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, std::istream& in) {
  CLI::App app{"Design workbench: state-transition dialogues, data schemas and structure charts", "pictoforge"};
  app.require_subcommand(1);
  Context ctx{out, err, in, {}};
  app.add_option("--repo", ctx.repo_flag, "repository directory (default: $PICTOFORGE_REPO)");

  std::string file, name, out_dir, script, generator, repo_action;
  SessionLimits limits;
  RepoArgs ra;
  ra.author = default_author();
  std::uint64_t from = 1;
  bool follow = false;
  int port = 7468;

  auto* parse_cmd = app.add_subcommand("parse", "parse a model and print its canonical form");
  parse_cmd->add_option("FILE", file)->required();

  auto* check_cmd = app.add_subcommand("check", "run all static checks");
  check_cmd->add_option("FILE", file)->required();

  auto* gen_cmd = app.add_subcommand("gen", "generate an artifact file");
  gen_cmd->add_option("GENERATOR", generator)->required()->check(CLI::IsMember({"dict", "sql", "skeleton", "doc"}));
  gen_cmd->add_option("FILE", file)->required();
  gen_cmd->add_option("NAME", name, "schema (sql) or chart/diagram (skeleton)");
  gen_cmd->add_option("--out", out_dir, "output directory (default: .)");

  auto* run_cmd = app.add_subcommand("run", "run a dialogue prototype");
  run_cmd->add_option("FILE", file)->required();
  run_cmd->add_option("DIAGRAM", name)->required();
  run_cmd->add_option("--script", script, "read inputs from a file and print the transcript");
  run_cmd->add_option("--max-steps", limits.max_steps)->check(CLI::PositiveNumber);
  run_cmd->add_option("--max-depth", limits.max_depth)->check(CLI::PositiveNumber);

  auto* repo_cmd = app.add_subcommand("repo", "repository operations");
  repo_cmd->add_option("ACTION", repo_action)
      ->required()
      ->check(CLI::IsMember({"init", "commit", "checkout", "lock", "unlock", "log", "export", "import"}));
  repo_cmd->add_option("ARG", ra.file, "model file (commit), document (import) or revision (checkout, export)");
  repo_cmd->add_option("--as,--author", ra.author, "lock holder and commit author (default: $USER)");
  repo_cmd->add_option("-m,--message", ra.message, "commit message");
  repo_cmd->add_option("-o,--out", ra.out_file, "write checkout/export output to a file");

  auto* events_cmd = app.add_subcommand("events", "event log");
  std::string events_action;
  events_cmd->add_option("ACTION", events_action)->required()->check(CLI::IsMember({"tail"}));
  events_cmd->add_option("--from", from, "first sequence number")->check(CLI::PositiveNumber);
  events_cmd->add_flag("--follow,-f", follow, "keep waiting for new events");

  auto* serve_cmd = app.add_subcommand("serve", "serve the local HTTP API");
  serve_cmd->add_option("--port", port)->check(CLI::Range(1024, 65535));
  serve_cmd->add_option("--max-steps", limits.max_steps)->check(CLI::PositiveNumber);
  serve_cmd->add_option("--max-depth", limits.max_depth)->check(CLI::PositiveNumber);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*parse_cmd) return cmd_parse(ctx, file);
    if (*check_cmd) return cmd_check(ctx, file);
    if (*gen_cmd) return cmd_gen(ctx, generator, file, name, out_dir);
    if (*run_cmd) return cmd_run(ctx, file, name, script, limits);
    if (*repo_cmd) {
      bool needs_file = repo_action == "commit" || repo_action == "import";
      if (needs_file && ra.file.empty()) throw Error("USAGE", "repo " + repo_action + " needs a file argument");
      if ((repo_action == "checkout" || repo_action == "export") && !ra.file.empty()) {
        try {
          std::size_t used = 0;
          ra.rev = std::stoll(ra.file, &used);
          if (used != ra.file.size() || ra.rev < 1) throw std::invalid_argument("rev");
        } catch (const std::exception&) {
          throw Error("USAGE", "revision must be a positive integer, got '" + ra.file + "'");
        }
      }
      return cmd_repo(ctx, repo_action, ra);
    }
    if (*events_cmd) return cmd_events(ctx, from, follow);
    if (*serve_cmd) return cmd_serve(ctx, port, limits);
  } catch (const Error& e) {
    err << "error: " << e.code() << ": " << e.what() << "\n";
    return exit_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitUsage;
}

} // namespace pictoforge
