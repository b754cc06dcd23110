#include "semtag/corpus.hpp"

#include <algorithm>
#include <ctime>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "semtag/utf8.hpp"

namespace semtag::corpus {
namespace fs = std::filesystem;
namespace {

using nlohmann::json;

void write_file(const fs::path& path, std::string_view content) {
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  if (ec) {
    throw StorageError("cannot create " + path.parent_path().string() + ": " + ec.message());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.close();
  if (!out) {
    throw StorageError("cannot write " + path.string());
  }
}

template <typename T>
json optional_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

json number_json(double v) {
  // Integral values are written without a fraction so pipeline ledgers keep
  // integer tag counts.
  if (v == static_cast<double>(static_cast<std::int64_t>(v)) && v >= 0 && v < 9.0e15) {
    return json(static_cast<std::int64_t>(v));
  }
  return json(v);
}

template <typename T>
std::optional<T> optional_field(const json& doc, const char* key) {
  const auto it = doc.find(key);
  if (it == doc.end() || it->is_null()) {
    return std::nullopt;
  }
  return it->get<T>();
}

}  // namespace

IngestResult ingest(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) {
    throw std::runtime_error("not a readable directory: " + dir.string());
  }
  fs::directory_iterator it(dir, ec);
  if (ec) {
    throw std::runtime_error("cannot list " + dir.string() + ": " + ec.message());
  }

  IngestResult result;
  for (const auto& entry : it) {
    if (!entry.is_regular_file(ec) || entry.path().extension() != ".txt") {
      continue;
    }
    std::ifstream in(entry.path(), std::ios::binary);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    if (!in && !in.eof()) {
      ++result.skipped_unreadable;
      result.warnings.push_back("unreadable: " + entry.path().string());
      continue;
    }
    const std::string raw = buffer.str();
    if (raw.empty()) {
      ++result.skipped_empty;
      result.warnings.push_back("empty: " + entry.path().string());
      continue;
    }
    auto repaired = utf8::repair(raw);
    if (repaired.replaced > 0) {
      result.warnings.push_back(std::to_string(repaired.replaced) + " invalid UTF-8 sequence(s) replaced in " +
                                entry.path().string());
    }
    result.replaced_sequences += repaired.replaced;
    result.documents.push_back(
        {entry.path().stem().string(), std::move(repaired.text), entry.path(), repaired.replaced});
  }
  std::sort(result.documents.begin(), result.documents.end(),
            [](const Document& a, const Document& b) { return a.doc_id < b.doc_id; });
  return result;
}

std::string to_json_line(const LedgerEntry& e) {
  nlohmann::ordered_json doc;
  doc["doc_id"] = e.doc_id;
  doc["task"] = e.task;
  doc["model"] = e.model;
  doc["run_index"] = e.run_index;
  doc["temperature"] = e.temperature;
  doc["max_tokens"] = e.max_tokens;
  doc["prompt_tokens"] = e.prompt_tokens;
  doc["completion_tokens"] = e.completion_tokens;
  doc["latency_ms"] = e.latency_ms;
  doc["cost_usd"] = e.cost_usd;
  doc["cpr"] = optional_json(e.cpr);
  doc["twf"] = optional_json(e.twf);
  doc["n_tags"] = e.n_tags ? number_json(*e.n_tags) : json(nullptr);
  doc["selected"] = e.selected;
  doc["failure"] = optional_json(e.failure);
  doc["output_path"] = e.output_path;
  doc["timestamp"] = e.timestamp;
  doc["version"] = e.version;
  return doc.dump();
}

LedgerEntry parse_ledger_line(std::string_view line) {
  try {
    const json doc = json::parse(line);
    if (!doc.is_object()) {
      throw std::invalid_argument("ledger line is not an object");
    }
    LedgerEntry e;
    e.doc_id = doc.at("doc_id").get<std::string>();
    e.task = doc.at("task").get<std::string>();
    e.model = doc.at("model").get<std::string>();
    e.run_index = doc.at("run_index").get<std::int64_t>();
    e.temperature = doc.at("temperature").get<double>();
    e.max_tokens = doc.at("max_tokens").get<std::int64_t>();
    e.prompt_tokens = doc.at("prompt_tokens").get<std::uint64_t>();
    e.completion_tokens = doc.at("completion_tokens").get<std::uint64_t>();
    e.latency_ms = doc.at("latency_ms").get<double>();
    e.cost_usd = doc.at("cost_usd").get<double>();
    e.cpr = optional_field<double>(doc, "cpr");
    e.twf = optional_field<double>(doc, "twf");
    e.n_tags = optional_field<double>(doc, "n_tags");
    e.selected = doc.at("selected").get<bool>();
    e.failure = optional_field<std::string>(doc, "failure");
    e.output_path = doc.value("output_path", std::string{});
    e.timestamp = doc.value("timestamp", std::string{});
    e.version = doc.value("version", std::string{});
    return e;
  } catch (const json::exception& ex) {
    throw std::invalid_argument(std::string("corrupt ledger line: ") + ex.what());
  }
}

LedgerContents read_ledger(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open ledger " + path.string());
  }
  LedgerContents contents;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      continue;
    }
    try {
      contents.entries.push_back(parse_ledger_line(line));
    } catch (const std::invalid_argument&) {
      ++contents.corrupt_lines;
    }
  }
  return contents;
}

std::string iso8601_utc(std::chrono::system_clock::time_point t) {
  const std::time_t secs = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string version_string() { return std::string("semtag ") + SEMTAG_VERSION; }

CorpusStore::CorpusStore(fs::path root, bool winners_only, Clock clock)
    : root_(std::move(root)), winners_only_(winners_only), clock_(std::move(clock)) {
  if (!clock_) {
    clock_ = [] { return std::chrono::system_clock::now(); };
  }
  std::error_code ec;
  fs::create_directories(root_, ec);
  if (ec) {
    throw StorageError("cannot create " + root_.string() + ": " + ec.message());
  }
  if (fs::exists(ledger_path())) {
    for (const auto& e : read_ledger(ledger_path()).entries) {
      keys_.emplace(e.doc_id, e.task, e.model, e.run_index);
    }
  }
}

fs::path CorpusStore::winner_relpath(std::string_view doc_id, pipeline::TaskKind task) {
  return task == pipeline::TaskKind::Clean ? fs::path("cleaned") / (std::string(doc_id) + ".txt")
                                           : fs::path("tagged") / (std::string(doc_id) + ".xml");
}

fs::path CorpusStore::candidate_relpath(const pipeline::RunRecord& record) {
  return fs::path("candidates") / record.doc_id /
         (std::string(pipeline::to_string(record.task)) + "." + record.model + "." +
          std::to_string(record.run_index) + ".txt");
}

bool CorpusStore::contains(std::string_view doc_id, std::string_view task) const {
  std::lock_guard lock(mutex_);
  return std::any_of(keys_.begin(), keys_.end(), [&](const Key& k) {
    return std::get<0>(k) == doc_id && std::get<1>(k) == task;
  });
}

StoredPaths CorpusStore::persist(const pipeline::RunRecord& record) {
  Key key{record.doc_id, std::string(pipeline::to_string(record.task)), record.model, record.run_index};
  {
    std::lock_guard lock(mutex_);
    if (keys_.count(key) != 0) {
      throw DuplicateKeyError("duplicate ledger key " + record.doc_id + "/" + std::get<1>(key) + "/" +
                              record.model + "/" + std::to_string(record.run_index));
    }
  }

  StoredPaths paths;
  if (!record.failed()) {
    if (!winners_only_ || record.selected) {
      paths.candidate = candidate_relpath(record);
      write_file(root_ / *paths.candidate, record.output);
    }
    if (record.selected) {
      paths.winner = winner_relpath(record.doc_id, record.task);
      write_file(root_ / *paths.winner, record.output);
    }
  }

  LedgerEntry entry;
  entry.doc_id = record.doc_id;
  entry.task = std::get<1>(key);
  entry.model = record.model;
  entry.run_index = record.run_index;
  entry.temperature = record.temperature;
  entry.max_tokens = record.max_tokens;
  entry.prompt_tokens = record.usage.prompt_tokens;
  entry.completion_tokens = record.usage.completion_tokens;
  entry.latency_ms = record.latency_ms;
  entry.cost_usd = record.cost;
  if (record.metrics) {
    entry.cpr = record.metrics->cpr;
    entry.twf = record.metrics->twf;
    if (record.metrics->n_tags) {
      entry.n_tags = static_cast<double>(*record.metrics->n_tags);
    }
  }
  entry.selected = record.selected;
  entry.failure = record.failure;
  if (paths.winner) {
    entry.output_path = paths.winner->generic_string();
  } else if (paths.candidate) {
    entry.output_path = paths.candidate->generic_string();
  }
  entry.timestamp = iso8601_utc(clock_());
  entry.version = version_string();

  std::lock_guard lock(mutex_);
  if (!keys_.insert(key).second) {
    throw DuplicateKeyError("duplicate ledger key for " + record.doc_id);
  }
  std::ofstream out(ledger_path(), std::ios::binary | std::ios::app);
  out << to_json_line(entry) << '\n';
  out.flush();
  if (!out) {
    keys_.erase(key);
    throw StorageError("cannot append to " + ledger_path().string());
  }
  return paths;
}

void CorpusStore::persist_all(const pipeline::TaskResult& result) {
  {
    std::lock_guard lock(mutex_);
    for (const auto& record : result.records) {
      if (keys_.count({record.doc_id, std::string(pipeline::to_string(record.task)), record.model,
                       record.run_index}) != 0) {
        throw DuplicateKeyError("ledger already holds runs for " + record.doc_id + "/" +
                                std::string(pipeline::to_string(record.task)));
      }
    }
  }
  for (const auto& record : result.records) {
    persist(record);
  }
}

}  // namespace semtag::corpus
