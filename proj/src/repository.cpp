#include "pictoforge/repository.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <fstream>
#include <sstream>
#include <thread>

#include "pictoforge/error.hpp"
#include "record_text.hpp"

namespace fs = std::filesystem;

namespace pictoforge {

namespace {

std::int64_t now_seconds() {
  return std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch()).count();
}

[[noreturn]] void repo_io(const std::string& what, const fs::path& p) {
  throw Error("REPO_IO", what + " '" + p.string() + "': " + std::strerror(errno));
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) repo_io("cannot read", p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void fsync_path(const fs::path& p, int flags) {
  int fd = ::open(p.c_str(), flags | O_CLOEXEC);
  if (fd < 0) return;
  ::fsync(fd);
  ::close(fd);
}

// Readers either see the old file or the new one, never a partial write.
void write_atomically(const fs::path& p, const std::string& content) {
  fs::path tmp = p;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) repo_io("cannot write", tmp);
    out << content;
    out.flush();
    if (!out) repo_io("cannot write", tmp);
  }
  fsync_path(tmp, O_RDONLY);
  if (::rename(tmp.c_str(), p.c_str()) != 0) repo_io("cannot rename onto", p);
  fsync_path(p.parent_path(), O_RDONLY | O_DIRECTORY);
}

std::vector<std::string> lines_of(const std::string& content) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t nl; (nl = content.find('\n', start)) != std::string::npos; start = nl + 1)
    out.push_back(content.substr(start, nl - start));
  return out;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    std::size_t p = line.find('\t', start);
    out.push_back(line.substr(start, p == std::string::npos ? std::string::npos : p - start));
    if (p == std::string::npos) return out;
    start = p + 1;
  }
}

std::string text_field(const std::string& s) { return detail::encode_field(FieldValue(s)); }

std::string decode_text(const std::string& s) {
  auto v = detail::decode_field(s, FieldType::Text);
  if (!v) throw Error("STORE_CORRUPT", "bad escape in stored text '" + s + "'");
  return std::get<std::string>(*v);
}

std::string header_line(const TableDef& t) {
  std::string out;
  for (std::size_t i = 0; i < t.fields.size(); ++i) out += (i ? "\t" : "") + t.fields[i].name;
  return out;
}

fs::path table_path(const fs::path& root, const TableDef& t) { return root / "tables" / (t.name + ".recs"); }

// number, timestamp, author, digest, source, message
std::string revision_line(const Revision& r) {
  return std::to_string(r.number) + "\t" + std::to_string(r.timestamp) + "\t" + text_field(r.author) + "\t" +
         r.model_digest + "\t" + text_field(r.source_name) + "\t" + text_field(r.message);
}

Revision parse_revision_line(const std::string& line) {
  auto f = split_tabs(line);
  if (f.size() != 6) throw Error("STORE_CORRUPT", "malformed revisions.log line: " + line);
  Revision r;
  try {
    r.number = std::stoll(f[0]);
    r.timestamp = std::stoll(f[1]);
  } catch (const std::exception&) {
    throw Error("STORE_CORRUPT", "malformed revisions.log line: " + line);
  }
  r.author = decode_text(f[2]);
  r.model_digest = f[3];
  r.source_name = decode_text(f[4]);
  r.message = decode_text(f[5]);
  return r;
}

const char* type_name(FieldType t) { return t == FieldType::Int ? "int" : t == FieldType::Bool ? "bool" : "text"; }

nlohmann::json to_json(const FieldValue& v) {
  if (auto i = std::get_if<std::int64_t>(&v)) return *i;
  if (auto b = std::get_if<bool>(&v)) return *b;
  return std::get<std::string>(v);
}

} // namespace

// ---------------------------------------------------------------------------

Repository Repository::init(const fs::path& root) {
  std::error_code ec;
  if (fs::exists(root, ec)) {
    if (!fs::is_directory(root, ec) || !fs::is_empty(root, ec))
      throw Error("NOT_EMPTY", "'" + root.string() + "' exists and is not an empty directory");
  }
  fs::create_directories(root / "tables", ec);
  if (ec) throw Error("REPO_IO", "cannot create '" + root.string() + "': " + ec.message());
  for (const auto& t : table_schema()) write_atomically(table_path(root, t), header_line(t) + "\n");
  write_atomically(root / "revisions.log", "");
  // schema.txt last: its presence marks a complete store.
  write_atomically(root / "schema.txt", schema_description());
  return Repository(root);
}

Repository Repository::open(const fs::path& root) {
  if (!fs::exists(root / "schema.txt"))
    throw Error("NO_REPOSITORY", "'" + root.string() + "' is not a repository (no schema.txt)");
  return Repository(root);
}

std::vector<Revision> Repository::log() const {
  std::vector<Revision> out;
  for (const auto& line : lines_of(read_file(root_ / "revisions.log"))) {
    if (line.empty()) continue;
    out.push_back(parse_revision_line(line));
    if (out.back().number != static_cast<std::int64_t>(out.size()))
      throw Error("STORE_CORRUPT", "revision numbers in revisions.log are not dense");
  }
  return out;
}

std::int64_t Repository::current_revision() const { return static_cast<std::int64_t>(log().size()); }

Revision Repository::revision(std::int64_t number) const {
  auto all = log();
  if (number < 1 || number > static_cast<std::int64_t>(all.size()))
    throw Error("NO_SUCH_REVISION", "no revision " + std::to_string(number) + " (current is " +
                                        std::to_string(all.size()) + ")");
  return all[static_cast<std::size_t>(number - 1)];
}

RecordSet Repository::records_at(std::int64_t rev) const {
  RecordSet rs;
  for (const auto& t : table_schema()) {
    auto lines = lines_of(read_file(table_path(root_, t)));
    if (lines.empty() || lines[0] != header_line(t))
      throw Error("STORE_CORRUPT", "table " + t.name + " has a missing or wrong header");
    std::vector<Record> rows;
    for (std::size_t i = 1; i < lines.size(); ++i) {
      auto cells = split_tabs(lines[i]);
      if (cells.size() != t.fields.size())
        throw Error("STORE_CORRUPT", t.name + " line " + std::to_string(i + 1) + " has wrong field count");
      auto added = detail::decode_field(cells[0], FieldType::Int);
      if (!added) throw Error("STORE_CORRUPT", t.name + " line " + std::to_string(i + 1) + ": bad revision_added");
      if (std::get<std::int64_t>(*added) != rev) continue;
      Record r;
      for (std::size_t f = 1; f < cells.size(); ++f) {
        auto v = detail::decode_field(cells[f], t.fields[f].type);
        if (!v) throw Error("STORE_CORRUPT", t.name + " line " + std::to_string(i + 1) + ": bad " + t.fields[f].name);
        r.push_back(std::move(*v));
      }
      rows.push_back(std::move(r));
    }
    rs.tables.push_back(std::move(rows));
  }
  return rs;
}

DesignModel Repository::checkout(std::int64_t rev) const {
  Revision meta = revision(rev);
  RecordSet rs = records_at(rev);
  if (records_digest(rs) != meta.model_digest)
    throw Error("STORE_CORRUPT", "revision " + std::to_string(rev) + " content does not match its digest");
  return reconstruct(rs, meta.source_name);
}

void Repository::require_lock(const std::string& author) const {
  auto held = current_lock();
  if (!held || held->holder != author)
    throw Error("NOT_LOCKED", "'" + author + "' does not hold the repository lock" +
                                  (held ? " (held by '" + held->holder + "')" : std::string()));
}

Revision Repository::commit(const DesignModel& model, const std::string& author, const std::string& message) {
  require_lock(author);
  if (auto issues = validate_structure(model); !issues.empty())
    throw Error(issues.front().code, issues.front().message);

  const std::int64_t current = current_revision();
  Revision rev;
  rev.number = current + 1;
  rev.author = author;
  rev.timestamp = now_seconds();
  rev.message = message;
  rev.source_name = model.source_name;

  RecordSet rs = decompose(model);
  rev.model_digest = records_digest(rs);

  const auto& schema = table_schema();
  for (std::size_t t = 0; t < schema.size(); ++t) {
    auto lines = lines_of(read_file(table_path(root_, schema[t])));
    std::string content = header_line(schema[t]) + "\n";
    // Drop leftovers of an interrupted commit (revision_added beyond current).
    for (std::size_t i = 1; i < lines.size(); ++i) {
      auto added = detail::decode_field(split_tabs(lines[i])[0], FieldType::Int);
      if (added && std::get<std::int64_t>(*added) <= current) content += lines[i] + "\n";
    }
    for (const auto& r : rs.tables[t]) {
      content += std::to_string(rev.number);
      for (const auto& v : r) content += "\t" + detail::encode_field(v);
      content += "\n";
    }
    write_atomically(table_path(root_, schema[t]), content);
  }

  // Commit point.
  write_atomically(root_ / "revisions.log", read_file(root_ / "revisions.log") + revision_line(rev) + "\n");

  if (records_digest(records_at(rev.number)) != rev.model_digest)
    throw Error("STORE_CORRUPT", "read-back of revision " + std::to_string(rev.number) + " does not match its digest");

  std::string diagrams;
  for (const auto& d : model.diagrams) diagrams += (diagrams.empty() ? "" : ",") + d.name;
  Event e;
  e.kind = BusEventKind::DiagramCommitted;
  e.subject = model.source_name;
  e.revision = rev.number;
  e.payload = {{"author", author}, {"message", message}, {"digest", rev.model_digest}, {"diagrams", diagrams}};
  last_event_ = events().emit(std::move(e));
  return rev;
}

std::optional<Lock> Repository::current_lock() const {
  // A racing lock() may have linked the file a moment ago; the content is
  // complete because it is written before the link.
  std::ifstream in(root_ / "LOCK");
  if (!in) return std::nullopt;
  std::string line;
  std::getline(in, line);
  auto f = split_tabs(line);
  Lock l;
  l.holder = decode_text(f[0]);
  if (f.size() > 1) {
    try {
      l.acquired_at = std::stoll(f[1]);
    } catch (const std::exception&) {
      l.acquired_at = 0;
    }
  }
  return l;
}

LockResult Repository::lock(const std::string& holder) {
  Lock l{holder, now_seconds(), "WHOLE_STORE"};
  // Write the record under a unique name, then link() it into place: link
  // fails with EEXIST if another writer got there first.
  fs::path tmp = root_ / ("LOCK." + std::to_string(::getpid()) + "." +
                          std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id())));
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) repo_io("cannot write", tmp);
    out << text_field(holder) << "\t" << l.acquired_at << "\n";
  }
  int rc = ::link(tmp.c_str(), (root_ / "LOCK").c_str());
  int err = errno;
  ::unlink(tmp.c_str());
  if (rc == 0) return l;
  if (err != EEXIST) {
    errno = err;
    repo_io("cannot create lock", root_ / "LOCK");
  }
  auto current = current_lock();
  if (!current) return lock(holder); // released in between
  return Busy{current->holder, current->acquired_at};
}

void Repository::unlock(const std::string& holder) {
  auto held = current_lock();
  if (!held || held->holder != holder)
    throw Error("NOT_HOLDER", "'" + holder + "' does not hold the repository lock" +
                                  (held ? " (held by '" + held->holder + "')" : std::string(" (not locked)")));
  if (::unlink((root_ / "LOCK").c_str()) != 0) repo_io("cannot remove lock", root_ / "LOCK");
}

// ---------------------------------------------------------------------------

nlohmann::json Repository::export_revision(std::int64_t rev) const {
  Revision meta = revision(rev);
  RecordSet rs = records_at(rev);
  if (records_digest(rs) != meta.model_digest)
    throw Error("STORE_CORRUPT", "revision " + std::to_string(rev) + " content does not match its digest");

  nlohmann::json tables = nlohmann::json::object();
  const auto& schema = table_schema();
  for (std::size_t t = 0; t < schema.size(); ++t) {
    nlohmann::json fields = nlohmann::json::array();
    for (std::size_t f = 1; f < schema[t].fields.size(); ++f)
      fields.push_back({{"name", schema[t].fields[f].name}, {"type", type_name(schema[t].fields[f].type)}});
    nlohmann::json records = nlohmann::json::array();
    for (const auto& r : rs.tables[t]) {
      nlohmann::json row = nlohmann::json::array();
      for (const auto& v : r) row.push_back(to_json(v));
      records.push_back(std::move(row));
    }
    tables[schema[t].name] = {{"fields", std::move(fields)}, {"records", std::move(records)}};
  }
  return {
      {"revision",
       {{"number", meta.number},
        {"author", meta.author},
        {"timestamp", meta.timestamp},
        {"message", meta.message},
        {"source", meta.source_name}}},
      {"digest", meta.model_digest},
      {"tables", std::move(tables)},
  };
}

std::pair<RecordSet, Revision> read_interchange(const nlohmann::json& doc) {
  auto malformed = [](const std::string& msg) { return Error("MALFORMED_DOC", msg); };
  if (!doc.is_object() || !doc.contains("revision") || !doc.contains("digest") || !doc.contains("tables"))
    throw malformed("document needs top-level keys revision, digest, tables");
  const auto& meta = doc["revision"];
  const auto& tables = doc["tables"];
  if (!meta.is_object() || !doc["digest"].is_string() || !tables.is_object())
    throw malformed("revision must be an object, digest a string, tables an object");

  Revision rev;
  try {
    rev.number = meta.at("number").get<std::int64_t>();
    rev.author = meta.at("author").get<std::string>();
    rev.timestamp = meta.at("timestamp").get<std::int64_t>();
    rev.message = meta.at("message").get<std::string>();
    rev.source_name = meta.value("source", std::string());
  } catch (const nlohmann::json::exception& e) {
    throw malformed(std::string("bad revision metadata: ") + e.what());
  }
  rev.model_digest = doc["digest"].get<std::string>();

  RecordSet rs;
  for (const auto& t : table_schema()) {
    if (!tables.contains(t.name)) throw malformed("missing table " + t.name);
    const auto& tj = tables[t.name];
    if (!tj.is_object() || !tj.contains("fields") || !tj.contains("records") || !tj["fields"].is_array() ||
        !tj["records"].is_array())
      throw malformed("table " + t.name + " needs fields and records arrays");
    const auto& fields = tj["fields"];
    if (fields.size() + 1 != t.fields.size()) throw malformed("table " + t.name + " has wrong field list");
    for (std::size_t f = 0; f < fields.size(); ++f) {
      const auto& def = t.fields[f + 1];
      if (!fields[f].is_object() || fields[f].value("name", "") != def.name ||
          fields[f].value("type", "") != type_name(def.type))
        throw malformed("table " + t.name + " field " + std::to_string(f) + " should be " + def.name);
    }
    std::vector<Record> rows;
    for (const auto& row : tj["records"]) {
      if (!row.is_array() || row.size() != fields.size()) throw malformed("table " + t.name + " has a bad record");
      Record r;
      for (std::size_t f = 0; f < row.size(); ++f) {
        const auto& def = t.fields[f + 1];
        const auto& v = row[f];
        if (def.type == FieldType::Int && v.is_number_integer())
          r.push_back(v.get<std::int64_t>());
        else if (def.type == FieldType::Bool && v.is_boolean())
          r.push_back(v.get<bool>());
        else if (def.type == FieldType::Text && v.is_string())
          r.push_back(v.get<std::string>());
        else
          throw malformed("table " + t.name + " field " + def.name + " has the wrong type");
      }
      rows.push_back(std::move(r));
    }
    rs.tables.push_back(std::move(rows));
  }
  for (const auto& [name, _] : tables.items()) {
    bool known = false;
    for (const auto& t : table_schema()) known = known || t.name == name;
    if (!known) throw malformed("unknown table " + name);
  }
  if (records_digest(rs) != rev.model_digest)
    throw Error("STORE_CORRUPT", "document digest does not match its records");
  return {std::move(rs), std::move(rev)};
}

Revision Repository::import_document(const nlohmann::json& doc, const std::string& author) {
  require_lock(author);
  auto [rs, origin] = read_interchange(doc);
  DesignModel model;
  try {
    model = reconstruct(rs, origin.source_name);
  } catch (const Error& e) {
    throw Error("MALFORMED_DOC", e.what());
  }
  return commit(model, author, "import of revision " + std::to_string(origin.number) +
                                   (origin.message.empty() ? "" : ": " + origin.message));
}

} // namespace pictoforge
