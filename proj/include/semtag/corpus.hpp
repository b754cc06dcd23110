#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "semtag/document.hpp"
#include "semtag/pipeline.hpp"

namespace semtag::corpus {

struct IngestResult {
  std::vector<Document> documents;  ///< sorted by doc_id
  std::size_t skipped_empty = 0;
  std::size_t skipped_unreadable = 0;
  std::size_t replaced_sequences = 0;
  std::vector<std::string> warnings;
};

/// Reads every `*.txt` file of `dir` (non-recursive). Throws
/// std::runtime_error when the directory itself cannot be listed.
IngestResult ingest(const std::filesystem::path& dir);

/// One JSON Lines record of the run ledger.
struct LedgerEntry {
  std::string doc_id;
  std::string task;
  std::string model;
  std::int64_t run_index = 1;
  double temperature = 1.0;
  std::int64_t max_tokens = 8000;
  std::uint64_t prompt_tokens = 0;
  std::uint64_t completion_tokens = 0;
  double latency_ms = 0.0;
  double cost_usd = 0.0;
  std::optional<double> cpr;
  std::optional<double> twf;
  std::optional<double> n_tags;  ///< integral for real runs; synthetic ledgers may hold means
  bool selected = false;
  std::optional<std::string> failure;
  std::string output_path;  ///< relative to the output root, empty when nothing was written
  std::string timestamp;
  std::string version;

  friend bool operator==(const LedgerEntry&, const LedgerEntry&) = default;
};

std::string to_json_line(const LedgerEntry& entry);

/// Throws std::invalid_argument on malformed input.
LedgerEntry parse_ledger_line(std::string_view line);

struct LedgerContents {
  std::vector<LedgerEntry> entries;
  std::size_t corrupt_lines = 0;
};

/// Reads a ledger file, skipping blank lines and counting corrupt ones.
/// Throws std::runtime_error when the file cannot be opened.
LedgerContents read_ledger(const std::filesystem::path& path);

class DuplicateKeyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class StorageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string iso8601_utc(std::chrono::system_clock::time_point t);

std::string version_string();

struct StoredPaths {
  std::optional<std::filesystem::path> candidate;
  std::optional<std::filesystem::path> winner;
};

/// Output tree rooted at one directory:
///
///   cleaned/<doc>.txt          selected Clean outputs
///   tagged/<doc>.xml           selected Tag outputs
///   candidates/<doc>/<task>.<model>.<run>.txt
///   ledger.jsonl
///
/// Ledger keys (doc, task, model, run) are unique; existing ledger lines
/// are loaded on construction so reruns cannot duplicate them.
class CorpusStore {
 public:
  using Clock = std::function<std::chrono::system_clock::time_point()>;

  explicit CorpusStore(std::filesystem::path root, bool winners_only = false, Clock clock = {});

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path ledger_path() const { return root_ / "ledger.jsonl"; }

  /// Writes output files for one scored record and appends its ledger
  /// line. Throws DuplicateKeyError or StorageError.
  StoredPaths persist(const pipeline::RunRecord& record);

  /// Checks every key first, then persists records in order.
  void persist_all(const pipeline::TaskResult& result);

  bool contains(std::string_view doc_id, std::string_view task) const;

  static std::filesystem::path winner_relpath(std::string_view doc_id, pipeline::TaskKind task);
  static std::filesystem::path candidate_relpath(const pipeline::RunRecord& record);

 private:
  using Key = std::tuple<std::string, std::string, std::string, std::int64_t>;

  std::filesystem::path root_;
  bool winners_only_;
  Clock clock_;
  mutable std::mutex mutex_;
  std::set<Key> keys_;
};

}  // namespace semtag::corpus
