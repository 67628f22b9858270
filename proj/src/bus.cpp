#include "pictoforge/bus.hpp"

#include <fcntl.h>
#include <spawn.h>
#include <sys/file.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <csignal>
#include <cstring>
#include <fstream>
#include <sstream>
#include <thread>

#include "pictoforge/error.hpp"

extern char** environ;

namespace pictoforge {

const char* to_string(BusEventKind k) {
  switch (k) {
  case BusEventKind::DiagramCommitted: return "DIAGRAM_COMMITTED";
  case BusEventKind::CheckCompleted: return "CHECK_COMPLETED";
  case BusEventKind::ArtifactGenerated: return "ARTIFACT_GENERATED";
  case BusEventKind::SessionEnded: return "SESSION_ENDED";
  }
  return "?";
}

std::optional<BusEventKind> bus_event_kind(const std::string& name) {
  for (auto k : {BusEventKind::DiagramCommitted, BusEventKind::CheckCompleted, BusEventKind::ArtifactGenerated,
                 BusEventKind::SessionEnded})
    if (name == to_string(k)) return k;
  return std::nullopt;
}

namespace {

std::string escape(const std::string& s) {
  static const char* hex = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : s) {
    if (c == '%' || c == '|' || c == ';' || c == '=' || c == '\n' || c == '\r') {
      out += '%';
      out += hex[c >> 4];
      out += hex[c & 15];
    } else {
      out += static_cast<char>(c);
    }
  }
  return out;
}

std::optional<std::string> unescape(const std::string& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '%') {
      out += s[i];
      continue;
    }
    if (i + 2 >= s.size()) return std::nullopt;
    auto nib = [](char c) -> int {
      if (c >= '0' && c <= '9') return c - '0';
      if (c >= 'A' && c <= 'F') return c - 'A' + 10;
      return -1;
    };
    int hi = nib(s[i + 1]), lo = nib(s[i + 2]);
    if (hi < 0 || lo < 0) return std::nullopt;
    out += static_cast<char>(hi * 16 + lo);
    i += 2;
  }
  return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    std::size_t p = s.find(sep, start);
    out.push_back(s.substr(start, p == std::string::npos ? std::string::npos : p - start));
    if (p == std::string::npos) return out;
    start = p + 1;
  }
}

std::optional<std::int64_t> to_int(const std::string& s) {
  if (s.empty()) return std::nullopt;
  std::size_t used = 0;
  try {
    long long v = std::stoll(s, &used);
    if (used != s.size()) return std::nullopt;
    return v;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

std::int64_t now_seconds() {
  return std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch()).count();
}

[[noreturn]] void log_io(const std::filesystem::path& p, const std::string& what) {
  throw Error("LOG_IO", what + " '" + p.string() + "': " + std::strerror(errno));
}

class FileLock {
public:
  explicit FileLock(int fd) : fd_(fd) {
    while (::flock(fd_, LOCK_EX) != 0)
      if (errno != EINTR) throw Error("LOG_IO", std::string("flock: ") + std::strerror(errno));
  }
  ~FileLock() { ::flock(fd_, LOCK_UN); }
  FileLock(const FileLock&) = delete;
  FileLock& operator=(const FileLock&) = delete;

private:
  int fd_;
};

class Fd {
public:
  explicit Fd(int fd) : fd_(fd) {}
  ~Fd() {
    if (fd_ >= 0) ::close(fd_);
  }
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  int get() const { return fd_; }

private:
  int fd_;
};

// Last complete line of the file, and whether the file ends with a newline.
std::pair<std::string, bool> last_line(int fd) {
  off_t size = ::lseek(fd, 0, SEEK_END);
  if (size <= 0) return {"", true};
  std::string tail;
  off_t pos = size;
  for (;;) {
    off_t n = std::min<off_t>(4096, pos);
    pos -= n;
    std::string buf(static_cast<std::size_t>(n), '\0');
    if (::pread(fd, buf.data(), static_cast<std::size_t>(n), pos) != n) throw Error("LOG_IO", "short read on event log");
    tail = buf + tail;
    bool terminated = tail.back() == '\n';
    std::size_t last_nl = tail.rfind('\n');
    if (last_nl != std::string::npos) {
      std::size_t prev = last_nl == 0 ? std::string::npos : tail.rfind('\n', last_nl - 1);
      if (prev != std::string::npos || pos == 0) {
        std::size_t begin = prev == std::string::npos ? 0 : prev + 1;
        return {tail.substr(begin, last_nl - begin), terminated};
      }
    } else if (pos == 0) {
      return {"", terminated};
    }
  }
}

} // namespace

std::string format_event_line(const Event& e) {
  std::string out = std::to_string(e.seq) + "|" + to_string(e.kind) + "|" + escape(e.subject) + "|" +
                    (e.revision ? std::to_string(*e.revision) : "") + "|" + std::to_string(e.timestamp) + "|";
  bool first = true;
  for (const auto& [k, v] : e.payload) {
    if (!first) out += ";";
    first = false;
    out += escape(k) + "=" + escape(v);
  }
  return out;
}

std::optional<Event> parse_event_line(const std::string& line) {
  auto f = split(line, '|');
  if (f.size() != 6) return std::nullopt;
  Event e;
  auto seq = to_int(f[0]);
  auto kind = bus_event_kind(f[1]);
  auto subject = unescape(f[2]);
  auto ts = to_int(f[4]);
  if (!seq || *seq < 1 || !kind || !subject || !ts) return std::nullopt;
  e.seq = static_cast<std::uint64_t>(*seq);
  e.kind = *kind;
  e.subject = *subject;
  if (!f[3].empty()) {
    e.revision = to_int(f[3]);
    if (!e.revision) return std::nullopt;
  }
  e.timestamp = *ts;
  if (!f[5].empty()) {
    for (const auto& kv : split(f[5], ';')) {
      auto eq = kv.find('=');
      if (eq == std::string::npos) return std::nullopt;
      auto k = unescape(kv.substr(0, eq));
      auto v = unescape(kv.substr(eq + 1));
      if (!k || !v) return std::nullopt;
      e.payload[*k] = *v;
    }
  }
  return e;
}

Event EventLog::emit(Event event) const {
  Fd fd(::open(path_.c_str(), O_RDWR | O_CREAT | O_APPEND | O_CLOEXEC, 0644));
  if (fd.get() < 0) log_io(path_, "cannot open event log");
  FileLock lock(fd.get());

  auto [last, terminated] = last_line(fd.get());
  std::uint64_t prev = 0;
  if (!last.empty()) {
    auto parsed = parse_event_line(last);
    if (!parsed) throw Error("LOG_IO", "event log '" + path_.string() + "' has a corrupt last line");
    prev = parsed->seq;
  }
  event.seq = prev + 1;
  if (event.timestamp == 0) event.timestamp = now_seconds();

  std::string line = (terminated ? "" : "\n") + format_event_line(event) + "\n";
  const char* p = line.data();
  std::size_t left = line.size();
  while (left > 0) {
    ssize_t n = ::write(fd.get(), p, left);
    if (n < 0) {
      if (errno == EINTR) continue;
      log_io(path_, "cannot append to event log");
    }
    p += n;
    left -= static_cast<std::size_t>(n);
  }
  if (::fsync(fd.get()) != 0) log_io(path_, "cannot sync event log");
  return event;
}

std::vector<Event> EventLog::read_from(std::uint64_t from_seq) const {
  std::vector<Event> out;
  std::ifstream in(path_, std::ios::binary);
  if (!in) return out;
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::size_t start = 0;
  for (std::size_t nl; (nl = content.find('\n', start)) != std::string::npos; start = nl + 1) {
    std::string line = content.substr(start, nl - start);
    if (line.empty()) continue;
    auto e = parse_event_line(line);
    if (!e) throw Error("LOG_IO", "corrupt event line in '" + path_.string() + "': " + line);
    if (e->seq >= from_seq) out.push_back(std::move(*e));
  }
  return out;
}

void EventLog::tail(std::uint64_t from_seq, const std::function<bool(const Event&)>& on_event, std::stop_token stop,
                    std::chrono::milliseconds poll) const {
  std::uint64_t next = from_seq;
  std::streamoff offset = 0;
  std::string pending;
  while (!stop.stop_requested()) {
    std::ifstream in(path_, std::ios::binary);
    if (in) {
      in.seekg(offset);
      std::string chunk((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
      offset += static_cast<std::streamoff>(chunk.size());
      pending += chunk;
      std::size_t start = 0;
      for (std::size_t nl; (nl = pending.find('\n', start)) != std::string::npos; start = nl + 1) {
        std::string line = pending.substr(start, nl - start);
        if (line.empty()) continue;
        auto e = parse_event_line(line);
        if (!e) throw Error("LOG_IO", "corrupt event line in '" + path_.string() + "': " + line);
        if (e->seq < next) continue;
        next = e->seq + 1;
        if (!on_event(*e)) return;
      }
      pending.erase(0, start);
    }
    std::this_thread::sleep_for(poll);
  }
}

// ---------------------------------------------------------------------------

std::vector<TriggerRule> parse_trigger_rules(const std::string& text) {
  std::vector<TriggerRule> rules;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    auto space = line.find_first_of(" \t", first);
    std::string kind = line.substr(first, space == std::string::npos ? std::string::npos : space - first);
    auto k = bus_event_kind(kind);
    if (!k) throw Error("BAD_TRIGGER", "line " + std::to_string(lineno) + ": unknown event kind '" + kind + "'");
    std::string cmd = space == std::string::npos ? "" : line.substr(space);
    auto cb = cmd.find_first_not_of(" \t");
    auto ce = cmd.find_last_not_of(" \t\r");
    cmd = cb == std::string::npos ? "" : cmd.substr(cb, ce - cb + 1);
    if (cmd.empty()) throw Error("BAD_TRIGGER", "line " + std::to_string(lineno) + ": empty command template");
    rules.push_back({*k, cmd});
  }
  return rules;
}

std::vector<TriggerRule> load_trigger_rules(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) return {};
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_trigger_rules(ss.str());
}

namespace {

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out += "'\\''";
    else out += c;
  }
  return out + "'";
}

} // namespace

std::string expand_command(const std::string& tmpl, const Event& event) {
  std::string out;
  for (std::size_t i = 0; i < tmpl.size();) {
    if (tmpl.compare(i, 9, "{subject}") == 0) {
      out += shell_quote(event.subject);
      i += 9;
    } else if (tmpl.compare(i, 10, "{revision}") == 0) {
      out += shell_quote(event.revision ? std::to_string(*event.revision) : "");
      i += 10;
    } else {
      out += tmpl[i++];
    }
  }
  return out;
}

namespace {

SpawnReport run_rule(const TriggerRule& rule, const Event& event) {
  SpawnReport r{rule, expand_command(rule.command, event), -1, false, {}};
  std::string payload;
  for (const auto& [k, v] : event.payload) payload += k + "=" + v + "\n";

  int fds[2];
  if (::pipe2(fds, O_CLOEXEC) != 0) {
    r.error = std::string("SPAWN_FAIL: pipe: ") + std::strerror(errno);
    return r;
  }
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, fds[0], STDIN_FILENO);
  const char* argv[] = {"sh", "-c", r.command.c_str(), nullptr};
  pid_t pid = 0;
  int rc = ::posix_spawn(&pid, "/bin/sh", &actions, nullptr, const_cast<char* const*>(argv), environ);
  posix_spawn_file_actions_destroy(&actions);
  ::close(fds[0]);
  if (rc != 0) {
    ::close(fds[1]);
    r.error = std::string("SPAWN_FAIL: ") + std::strerror(rc);
    return r;
  }

  // The child may exit without reading stdin; don't die of SIGPIPE then.
  struct sigaction ignore {}, previous {};
  ignore.sa_handler = SIG_IGN;
  ::sigaction(SIGPIPE, &ignore, &previous);
  const char* p = payload.data();
  std::size_t left = payload.size();
  while (left > 0) {
    ssize_t n = ::write(fds[1], p, left);
    if (n < 0) {
      if (errno == EINTR) continue;
      break;
    }
    p += n;
    left -= static_cast<std::size_t>(n);
  }
  ::close(fds[1]);
  ::sigaction(SIGPIPE, &previous, nullptr);

  int status = 0;
  while (::waitpid(pid, &status, 0) < 0)
    if (errno != EINTR) {
      r.error = std::string("SPAWN_FAIL: waitpid: ") + std::strerror(errno);
      return r;
    }
  if (WIFEXITED(status)) {
    r.exit_status = WEXITSTATUS(status);
  } else if (WIFSIGNALED(status)) {
    r.exit_status = 128 + WTERMSIG(status);
  }
  r.ok = r.exit_status == 0;
  if (!r.ok) r.error = "SPAWN_FAIL: command exited with status " + std::to_string(r.exit_status);
  return r;
}

} // namespace

std::vector<SpawnReport> bus_dispatch(const std::vector<TriggerRule>& rules, const Event& event) {
  std::vector<SpawnReport> out;
  for (const auto& rule : rules)
    if (rule.kind == event.kind) out.push_back(run_rule(rule, event));
  return out;
}

std::vector<SpawnReport> TriggerDispatcher::dispatch(const Event& event) {
  if (!done_.insert(event.seq).second) return {};
  return bus_dispatch(rules_, event);
}

} // namespace pictoforge
