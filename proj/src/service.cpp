#include "pictoforge/service.hpp"

#include <atomic>
#include <iostream>
#include <map>
#include <mutex>
#include <random>
#include <stop_token>
#include <thread>

#include "httplib.h"
#include "pictoforge/checker.hpp"
#include "pictoforge/error.hpp"
#include "pictoforge/json_io.hpp"
#include "pictoforge/repository.hpp"
#include "pictoforge/stdl.hpp"

namespace pictoforge {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

int status_for(const std::string& code) {
  static const std::map<std::string, int> table = {
      {"BAD_REQUEST", 400},       {"NO_SUCH_SESSION", 404},     {"NO_SUCH_REVISION", 404},
      {"NO_SUCH_DIAGRAM", 404},   {"SESSION_NOT_RUNNING", 409}, {"PARSE_ERROR", 422},
      {"MODEL_HAS_ERRORS", 422},  {"STORE_CORRUPT", 500},
  };
  auto it = table.find(code);
  return it == table.end() ? 500 : it->second;
}

Error bad_request(const std::string& msg) { return Error("BAD_REQUEST", msg); }

json parse_body(const httplib::Request& req) {
  json body = json::parse(req.body, nullptr, false);
  if (body.is_discarded() || !body.is_object()) throw bad_request("request body must be a JSON object");
  return body;
}

std::string string_field(const json& body, const char* key, bool required = true) {
  if (!body.contains(key)) {
    if (required) throw bad_request(std::string("missing field '") + key + "'");
    return {};
  }
  if (!body[key].is_string()) throw bad_request(std::string("field '") + key + "' must be a string");
  return body[key].get<std::string>();
}

std::int64_t int_param(const std::string& text, const char* what) {
  try {
    std::size_t used = 0;
    long long v = std::stoll(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  throw bad_request(std::string("'") + what + "' must be an integer");
}

// Parse errors travel with the error document so clients can show positions.
struct ParseFailure {
  std::vector<ParseError> errors;
};

DesignModel parse_source(const std::string& source, const std::string& name) {
  auto r = parse(source, name);
  if (!r.ok()) throw ParseFailure{r.errors};
  return std::move(*r.model);
}

struct SessionEntry {
  std::mutex mutex;
  Session session;
  std::string id;
  Clock::time_point last_used;
  bool end_reported = false;
};

json session_summary(const SessionEntry& e, std::size_t events_from) {
  const Session& s = e.session;
  return {{"id", e.id},
          {"root", s.root},
          {"status", to_string(s.status)},
          {"diagram", s.diagram},
          {"current", s.current},
          {"step_count", s.step_count},
          {"events", events_json(s.transcript, events_from)}};
}

json session_state(const SessionEntry& e) {
  const Session& s = e.session;
  json j = session_summary(e, 0);
  json frames = json::array();
  for (const auto& f : s.frame_stack) frames.push_back({{"diagram", f.diagram}, {"return_to", f.return_to}});
  j["frame_stack"] = std::move(frames);
  j["bindings"] = s.bindings;
  j["limits"] = {{"max_steps", s.limits.max_steps}, {"max_depth", s.limits.max_depth}};
  return j;
}

} // namespace

struct Service::Impl {
  WorkbenchConfig config;
  Repository repo;
  httplib::Server server;
  std::thread thread;
  std::stop_source stop;
  int port = 0;

  mutable std::mutex sessions_mutex;
  std::map<std::string, std::shared_ptr<SessionEntry>> sessions;
  std::mt19937_64 rng{std::random_device{}()};

  explicit Impl(WorkbenchConfig c) : config(std::move(c)), repo(Repository::open(config.repo_root)) {}

  void emit_quietly(Event e) {
    try {
      repo.events().emit(std::move(e));
    } catch (const Error& err) {
      std::cerr << "pictoforge serve: " << err.what() << "\n";
    }
  }

  std::shared_ptr<const DesignModel> model_at(const json& body) {
    std::int64_t rev = repo.current_revision();
    if (body.contains("rev")) {
      if (!body["rev"].is_number_integer()) throw bad_request("field 'rev' must be an integer");
      rev = body["rev"].get<std::int64_t>();
    }
    return std::make_shared<const DesignModel>(repo.checkout(rev));
  }

  std::shared_ptr<SessionEntry> find_session(const std::string& id) {
    std::lock_guard lock(sessions_mutex);
    expire_locked();
    auto it = sessions.find(id);
    if (it == sessions.end()) throw Error("NO_SUCH_SESSION", "no session '" + id + "'");
    it->second->last_used = Clock::now();
    return it->second;
  }

  void expire_locked() {
    auto cutoff = Clock::now() - config.session_idle;
    std::erase_if(sessions, [&](const auto& kv) { return kv.second->last_used < cutoff; });
  }

  void report_end(SessionEntry& e) {
    if (e.session.status == SessionStatus::Running || e.end_reported) return;
    e.end_reported = true;
    Event ev;
    ev.kind = BusEventKind::SessionEnded;
    ev.subject = e.session.root;
    ev.payload = {{"session", e.id},
                  {"status", to_string(e.session.status)},
                  {"steps", std::to_string(e.session.step_count)}};
    emit_quietly(std::move(ev));
  }

  // --- endpoints ---

  json get_model(const httplib::Request& req) {
    std::int64_t rev = req.has_param("rev") ? int_param(req.get_param_value("rev"), "rev") : repo.current_revision();
    return repo.export_revision(rev);
  }

  json post_check(const httplib::Request& req) {
    json body = parse_body(req);
    DesignModel model;
    std::optional<std::int64_t> rev;
    if (body.contains("source")) {
      model = parse_source(string_field(body, "source"), body.contains("name") ? string_field(body, "name") : "input");
    } else {
      model = *model_at(body);
      rev = body.contains("rev") ? body["rev"].get<std::int64_t>() : repo.current_revision();
    }
    auto findings = check_all(model);
    json out = findings_json(findings);

    Event ev;
    ev.kind = BusEventKind::CheckCompleted;
    ev.subject = model.source_name;
    ev.revision = rev;
    ev.payload = {{"errors", std::to_string(out["error_count"].get<int>())},
                  {"warnings", std::to_string(out["warning_count"].get<int>())}};
    emit_quietly(std::move(ev));
    return out;
  }

  json post_session(const httplib::Request& req) {
    json body = parse_body(req);
    std::string root = string_field(body, "root");
    std::shared_ptr<const DesignModel> model;
    if (body.contains("source"))
      model = std::make_shared<const DesignModel>(
          parse_source(string_field(body, "source"), body.contains("name") ? string_field(body, "name") : "input"));
    else
      model = model_at(body);

    auto entry = std::make_shared<SessionEntry>();
    entry->session = session_start(model, root, config.limits);
    entry->last_used = Clock::now();
    {
      std::lock_guard lock(sessions_mutex);
      expire_locked();
      char buf[17];
      do {
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(rng()));
      } while (sessions.count(buf));
      entry->id = buf;
      sessions[entry->id] = entry;
    }
    std::lock_guard lock(entry->mutex);
    report_end(*entry);
    return session_summary(*entry, 0);
  }

  json post_input(const std::string& id, const httplib::Request& req) {
    json body = parse_body(req);
    std::string line = string_field(body, "line");
    auto entry = find_session(id);
    std::lock_guard lock(entry->mutex);
    std::size_t before = entry->session.transcript.size();
    session_input(entry->session, line);
    report_end(*entry);
    return session_summary(*entry, before);
  }

  json get_session(const std::string& id) {
    auto entry = find_session(id);
    std::lock_guard lock(entry->mutex);
    return session_state(*entry);
  }

  void get_events(const httplib::Request& req, httplib::Response& res) {
    std::uint64_t from = 1;
    if (req.has_param("from")) {
      auto v = int_param(req.get_param_value("from"), "from");
      if (v < 1) throw bad_request("'from' must be at least 1");
      from = static_cast<std::uint64_t>(v);
    }
    bool follow = req.has_param("follow") && req.get_param_value("follow") != "0";
    if (!follow) {
      std::string body;
      for (const auto& e : repo.events().read_from(from)) body += to_json(e).dump() + "\n";
      res.set_content(body, "application/x-ndjson");
      return;
    }
    EventLog log = repo.events();
    auto token = stop.get_token();
    res.set_chunked_content_provider("application/x-ndjson", [log, from, token](std::size_t, httplib::DataSink& sink) {
      std::uint64_t next = from;
      auto last_write = Clock::now();
      while (!token.stop_requested()) {
        for (const auto& e : log.read_from(next)) {
          std::string line = to_json(e).dump() + "\n";
          if (!sink.write(line.data(), line.size())) return false;
          next = e.seq + 1;
          last_write = Clock::now();
        }
        // Blank keep-alive line: the only way to notice a vanished client.
        if (Clock::now() - last_write > std::chrono::seconds(5)) {
          if (!sink.write("\n", 1)) return false;
          last_write = Clock::now();
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(25));
      }
      sink.done();
      return true;
    });
  }

  template <class F> void respond(httplib::Response& res, F&& f) {
    json out;
    int status = 200;
    try {
      out = f();
    } catch (const ParseFailure& p) {
      status = status_for("PARSE_ERROR");
      json errs = json::array();
      for (const auto& e : p.errors) errs.push_back(to_json(e));
      out = {{"code", "PARSE_ERROR"}, {"message", format_error(p.errors.front())}, {"errors", std::move(errs)}};
    } catch (const Error& e) {
      status = status_for(e.code());
      out = {{"code", e.code()}, {"message", e.what()}};
    } catch (const std::exception& e) {
      status = 500;
      out = {{"code", "INTERNAL"}, {"message", e.what()}};
    }
    res.status = status;
    res.set_content(out.dump(), "application/json");
  }

  void routes() {
    server.Get("/api/model", [this](const auto& req, auto& res) { respond(res, [&] { return get_model(req); }); });
    server.Post("/api/check", [this](const auto& req, auto& res) { respond(res, [&] { return post_check(req); }); });
    server.Post("/api/sessions",
                [this](const auto& req, auto& res) { respond(res, [&] { return post_session(req); }); });
    server.Post(R"(/api/sessions/([0-9a-zA-Z_-]+)/input)", [this](const auto& req, auto& res) {
      respond(res, [&] { return post_input(req.matches[1], req); });
    });
    server.Get(R"(/api/sessions/([0-9a-zA-Z_-]+))",
               [this](const auto& req, auto& res) { respond(res, [&] { return get_session(req.matches[1]); }); });
    server.Get("/api/events", [this](const auto& req, auto& res) {
      try {
        get_events(req, res);
      } catch (...) {
        respond(res, [] () -> json { throw; });
      }
    });
    server.set_error_handler([](const auto&, auto& res) {
      if (!res.body.empty()) return;
      json out = {{"code", res.status == 404 ? "NOT_FOUND" : "BAD_REQUEST"}, {"message", "no such endpoint"}};
      res.set_content(out.dump(), "application/json");
    });
    // Default options include SO_REUSEPORT, which would let a second
    // server share the port silently.
    server.set_socket_options([](socket_t sock) {
      int yes = 1;
      ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof yes);
    });
  }
};

Service::Service(WorkbenchConfig config) {
  if (config.listen_port != 0 && (config.listen_port < 1024 || config.listen_port > 65535))
    throw Error("BAD_CONFIG", "port " + std::to_string(config.listen_port) + " is outside 1024-65535");
  impl_ = std::make_unique<Impl>(std::move(config));
  impl_->routes();
}

Service::~Service() { stop(); }

int Service::bind() {
  auto& i = *impl_;
  if (i.config.listen_port == 0) {
    i.port = i.server.bind_to_any_port(i.config.host);
    if (i.port < 0) throw Error("PORT_IN_USE", "cannot bind any port on " + i.config.host);
  } else {
    if (!i.server.bind_to_port(i.config.host, i.config.listen_port))
      throw Error("PORT_IN_USE", "port " + std::to_string(i.config.listen_port) + " on " + i.config.host +
                                     " is not available");
    i.port = i.config.listen_port;
  }
  return i.port;
}

void Service::run() { impl_->server.listen_after_bind(); }

int Service::start() {
  int port = bind();
  impl_->thread = std::thread([this] { run(); });
  impl_->server.wait_until_ready();
  return port;
}

void Service::stop() {
  if (!impl_) return;
  impl_->stop.request_stop();
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

std::size_t Service::session_count() const {
  std::lock_guard lock(impl_->sessions_mutex);
  return impl_->sessions.size();
}

} // namespace pictoforge
