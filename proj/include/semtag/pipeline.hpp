#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "semtag/document.hpp"
#include "semtag/provider.hpp"
#include "semtag/tagparser.hpp"

namespace semtag::pipeline {

enum class TaskKind { Clean, Tag };

std::string_view to_string(TaskKind kind);
std::optional<TaskKind> parse_task_kind(std::string_view name);

inline constexpr std::string_view kCleanInstruction =
    "Include answer only: this text is scanned old UN resolution that can be in two columns, "
    "can you convert it into one column and correct any OCR errors, and remove printing hyphens "
    "and printing line breaks - if there is English and French texts, separate them, and keep "
    "the English first and French second";

/// Followed by two line breaks and the vocabulary as `<a> <b> ...`.
inline constexpr std::string_view kTagInstructionLead =
    "Include answer only: use xml tags to annotate this text, highlighting text within the ONLY "
    "these tags, while completely preserving the input text without any addition or omission:";

struct Task {
  TaskKind kind = TaskKind::Clean;
  std::string instruction;
  tags::TagVocabulary vocabulary = tags::TagVocabulary::standard();

  static Task clean();
  static Task tag(tags::TagVocabulary vocabulary = tags::TagVocabulary::standard());

  std::string_view name() const { return to_string(kind); }
};

/// Clean fills cpr only; Tag fills all three.
struct MetricSet {
  double cpr = 0.0;
  std::optional<double> twf;
  std::optional<std::uint64_t> n_tags;

  friend bool operator==(const MetricSet&, const MetricSet&) = default;
};

struct RunRecord {
  std::string doc_id;
  TaskKind task = TaskKind::Clean;
  std::string model;
  std::int64_t run_index = 1;
  double temperature = 1.0;
  std::int64_t max_tokens = 8000;
  std::string output;
  provider::Usage usage;
  double latency_ms = 0.0;
  double cost = 0.0;
  bool truncated = false;
  std::optional<MetricSet> metrics;     ///< absent for failed runs
  std::optional<std::string> failure;   ///< error kind of a failed run
  bool selected = false;

  bool failed() const { return failure.has_value(); }
};

/// instruction + "\n\n" + body. Throws std::invalid_argument on an empty body.
std::string build_prompt(const Task& task, std::string_view body);

MetricSet score(const Task& task, std::string_view input, std::string_view output);

/// Strict ordering used for selection: true when `a` beats `b`. Clean
/// compares cpr; Tag compares (cpr, twf, n_tags). Ties fall to lower cost,
/// then smaller model name, then smaller run index.
bool outranks(const RunRecord& a, const RunRecord& b, TaskKind kind);

/// Index of the best non-failed record, or nullopt when every run failed.
std::optional<std::size_t> select_best(std::span<const RunRecord> records, TaskKind kind);

struct RunOptions {
  double temperature = 1.0;
  std::int64_t max_tokens = 8000;
  std::int64_t runs_per_model = 2;
  std::size_t parallelism = 4;
};

struct TaskResult {
  std::vector<RunRecord> records;  ///< roster order, then run index
  std::optional<std::size_t> selected;

  bool failed() const { return !selected.has_value(); }
  const RunRecord* winner() const { return selected ? &records[*selected] : nullptr; }
};

/// Runs every (model, run) completion for one document with at most
/// `options.parallelism` requests in flight, scores the results against
/// the document text and marks the winner.
TaskResult run_task(const corpus::Document& doc, const Task& task,
                    std::span<const provider::ModelSpec> roster, const RunOptions& options,
                    provider::CompletionBackend& backend);

}  // namespace semtag::pipeline
