#include "semtag/report.hpp"

#include <algorithm>
#include <map>
#include <tuple>

#include <fmt/format.h>

namespace semtag::corpus {
namespace {

struct Accumulator {
  double cpr = 0, twf = 0, n_tags = 0, cost = 0, latency = 0;
  std::size_t ok = 0, with_twf = 0, with_tags = 0, runs = 0, failures = 0;
};

int task_rank(const std::string& task) {
  if (task == "clean") {
    return 0;
  }
  return task == "tag" ? 1 : 2;
}

std::optional<double> mean(double sum, std::size_t n) {
  if (n == 0) {
    return std::nullopt;
  }
  return sum / static_cast<double>(n);
}

std::string fixed(const std::optional<double>& v, int decimals) {
  return v ? fmt::format("{:.{}f}", *v, decimals) : std::string("-");
}

// Shortest representation that round-trips.
std::string exact(const std::optional<double>& v) { return v ? fmt::format("{}", *v) : std::string(); }

}  // namespace

ModelReport build_report(std::span<const LedgerEntry> entries) {
  std::map<std::pair<std::string, std::string>, Accumulator> groups;
  for (const auto& e : entries) {
    auto& acc = groups[{e.task, e.model}];
    ++acc.runs;
    if (e.failure || !e.cpr) {
      ++acc.failures;
      continue;
    }
    ++acc.ok;
    acc.cpr += *e.cpr;
    acc.cost += e.cost_usd;
    acc.latency += e.latency_ms;
    if (e.twf) {
      acc.twf += *e.twf;
      ++acc.with_twf;
    }
    if (e.n_tags) {
      acc.n_tags += *e.n_tags;
      ++acc.with_tags;
    }
  }

  ModelReport report;
  for (const auto& [key, acc] : groups) {
    ModelReportRow row;
    row.task = key.first;
    row.model = key.second;
    row.mean_cpr = mean(acc.cpr, acc.ok);
    row.mean_twf = mean(acc.twf, acc.with_twf);
    row.mean_n_tags = mean(acc.n_tags, acc.with_tags);
    row.mean_cost = mean(acc.cost, acc.ok);
    row.mean_latency_ms = mean(acc.latency, acc.ok);
    row.runs = acc.runs;
    row.failures = acc.failures;
    report.rows.push_back(std::move(row));
  }

  std::sort(report.rows.begin(), report.rows.end(), [](const ModelReportRow& a, const ModelReportRow& b) {
    const double ca = a.mean_cpr.value_or(-1.0);
    const double cb = b.mean_cpr.value_or(-1.0);
    return std::tuple(task_rank(a.task), a.task, -ca, a.model) <
           std::tuple(task_rank(b.task), b.task, -cb, b.model);
  });

  // Rows are sorted, so the first row of each task holds its best cpr.
  const ModelReportRow* best = nullptr;
  for (auto& row : report.rows) {
    if (best == nullptr || best->task != row.task) {
      best = &row;
    }
    if (best->mean_cpr && row.mean_cost && best->mean_cost && *best->mean_cost > 0.0) {
      row.cost_vs_best = *row.mean_cost / *best->mean_cost;
    }
  }
  return report;
}

std::string render_text(const ModelReport& report) {
  const std::vector<std::string> header = {"task", "model", "cpr",     "twf",  "n_tags",
                                           "cost", "rel_cost", "latency_ms", "runs", "failed"};
  std::vector<std::vector<std::string>> cells;
  for (const auto& row : report.rows) {
    cells.push_back({row.task, row.model, fixed(row.mean_cpr, 4), fixed(row.mean_twf, 4),
                     fixed(row.mean_n_tags, 1), fixed(row.mean_cost, 4), fixed(row.cost_vs_best, 2),
                     fixed(row.mean_latency_ms, 0), std::to_string(row.runs), std::to_string(row.failures)});
  }

  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) {
    width[c] = header[c].size();
    for (const auto& line : cells) {
      width[c] = std::max(width[c], line[c].size());
    }
  }

  std::string out;
  const auto emit = [&](const std::vector<std::string>& line) {
    for (std::size_t c = 0; c < line.size(); ++c) {
      // Names left-aligned, numbers right-aligned.
      out += c < 2 ? fmt::format("{:<{}}", line[c], width[c]) : fmt::format("{:>{}}", line[c], width[c]);
      out += c + 1 < line.size() ? "  " : "\n";
    }
  };
  emit(header);
  std::vector<std::string> rule;
  for (auto w : width) {
    rule.emplace_back(w, '-');
  }
  emit(rule);
  for (const auto& line : cells) {
    emit(line);
  }
  return out;
}

std::string render_csv(const ModelReport& report) {
  std::string out = "task,model,mean_cpr,mean_twf,mean_n_tags,mean_cost_usd,cost_vs_best,mean_latency_ms,runs,failures\n";
  for (const auto& row : report.rows) {
    out += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", row.task, row.model, exact(row.mean_cpr),
                       exact(row.mean_twf), exact(row.mean_n_tags), exact(row.mean_cost),
                       exact(row.cost_vs_best), exact(row.mean_latency_ms), row.runs, row.failures);
  }
  return out;
}

}  // namespace semtag::corpus
