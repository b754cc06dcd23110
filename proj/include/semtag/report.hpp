#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "semtag/corpus.hpp"

namespace semtag::corpus {

/// Per-(task, model) aggregates. Means cover non-failed runs only.
struct ModelReportRow {
  std::string task;
  std::string model;
  std::optional<double> mean_cpr;
  std::optional<double> mean_twf;
  std::optional<double> mean_n_tags;
  std::optional<double> mean_cost;
  std::optional<double> mean_latency_ms;
  std::size_t runs = 0;      ///< including failures
  std::size_t failures = 0;
  /// mean_cost relative to the highest-cpr model of the same task.
  std::optional<double> cost_vs_best;
};

struct ModelReport {
  std::vector<ModelReportRow> rows;  ///< clean before tag, then descending mean cpr
  std::size_t corrupt_lines = 0;
};

ModelReport build_report(std::span<const LedgerEntry> entries);

std::string render_text(const ModelReport& report);
std::string render_csv(const ModelReport& report);

}  // namespace semtag::corpus
