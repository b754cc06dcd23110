#include "semtag/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "semtag/config.hpp"
#include "semtag/corpus.hpp"
#include "semtag/metrics.hpp"
#include "semtag/pipeline.hpp"
#include "semtag/report.hpp"
#include "semtag/tagparser.hpp"
#include "semtag/utf8.hpp"

namespace semtag::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct GlobalFlags {
  std::string config_path;
  std::string backend;
  std::optional<std::size_t> parallelism;
  std::optional<std::int64_t> runs;
  bool winners_only = false;
  bool json = false;
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Config resolve_config(const GlobalFlags& flags) {
  Config config;
  if (!flags.config_path.empty()) {
    config = load_config(flags.config_path);
  }
  if (!flags.backend.empty()) {
    const auto kind = parse_backend_kind(flags.backend);
    if (!kind) {
      throw ConfigError("unknown backend '" + flags.backend + "'");
    }
    config.backend = *kind;
  }
  if (flags.parallelism) {
    config.parallelism = *flags.parallelism;
  }
  if (flags.runs) {
    config.runs_per_model = *flags.runs;
  }
  config.validate();
  return config;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot read " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return utf8::repair(buffer.str()).text;
}

void write_reports(const fs::path& ledger_path, const corpus::ModelReport& report) {
  const auto dir = ledger_path.parent_path().empty() ? fs::path(".") : ledger_path.parent_path();
  std::ofstream(dir / "report.txt", std::ios::binary | std::ios::trunc) << corpus::render_text(report);
  std::ofstream(dir / "report.csv", std::ios::binary | std::ios::trunc) << corpus::render_csv(report);
}

int cmd_run_task(pipeline::TaskKind kind, const fs::path& input_dir, const fs::path& output_dir,
                 const GlobalFlags& flags, std::ostream& out, std::ostream& err) {
  const Config config = resolve_config(flags);
  const pipeline::Task task =
      kind == pipeline::TaskKind::Clean ? pipeline::Task::clean() : pipeline::Task::tag(tags::TagVocabulary(config.tags));

  corpus::IngestResult ingested;
  try {
    ingested = corpus::ingest(input_dir);
  } catch (const std::runtime_error& e) {
    throw UsageError(e.what());
  }
  for (const auto& warning : ingested.warnings) {
    err << "warning: " << warning << "\n";
  }
  out << ingested.documents.size() << " documents\n";
  if (ingested.documents.empty()) {
    return kExitOk;
  }

  BackendStack backend(config);
  corpus::CorpusStore store(output_dir, flags.winners_only);
  const pipeline::RunOptions options{config.temperature, config.max_tokens, config.runs_per_model, config.parallelism};

  std::size_t failed = 0;
  for (const auto& doc : ingested.documents) {
    if (store.contains(doc.doc_id, task.name())) {
      out << doc.doc_id << ": skipped, already recorded in ledger\n";
      continue;
    }
    const pipeline::TaskResult result = pipeline::run_task(doc, task, config.roster, options, backend.get());
    for (const auto& record : result.records) {
      if (record.truncated) {
        err << "warning: " << doc.doc_id << " " << record.model << " run " << record.run_index
            << " hit the token limit; partial output scored\n";
      }
    }
    try {
      store.persist_all(result);
    } catch (const std::exception& e) {
      err << "error: " << doc.doc_id << ": " << e.what() << "\n";
      ++failed;
      continue;
    }

    const pipeline::RunRecord* winner = result.winner();
    if (winner == nullptr) {
      ++failed;
      err << "error: " << doc.doc_id << ": all " << result.records.size() << " runs failed\n";
      if (flags.json) {
        out << json{{"doc_id", doc.doc_id}, {"task", task.name()}, {"selected", nullptr}}.dump() << "\n";
      }
      continue;
    }
    const auto& m = *winner->metrics;
    if (flags.json) {
      json line = {{"doc_id", doc.doc_id}, {"task", task.name()},  {"model", winner->model},
                   {"run_index", winner->run_index}, {"cpr", m.cpr}};
      if (m.twf) {
        line["twf"] = *m.twf;
        line["n_tags"] = *m.n_tags;
      }
      out << line.dump() << "\n";
    } else if (kind == pipeline::TaskKind::Clean) {
      out << fmt::format("{}: {} run {} cpr {:.4f}\n", doc.doc_id, winner->model, winner->run_index, m.cpr);
    } else {
      out << fmt::format("{}: {} run {} cpr {:.4f} twf {:.4f} n_tags {}\n", doc.doc_id, winner->model,
                         winner->run_index, m.cpr, *m.twf, *m.n_tags);
    }
  }

  const auto ledger = corpus::read_ledger(store.ledger_path());
  write_reports(store.ledger_path(), corpus::build_report(ledger.entries));

  if (failed > 0) {
    err << failed << " of " << ingested.documents.size() << " documents failed\n";
    return kExitPartialFailure;
  }
  return kExitOk;
}

int cmd_score(const std::string& task_name, const fs::path& input_file, const fs::path& output_file,
              const GlobalFlags& flags, std::ostream& out) {
  const Config config = resolve_config(flags);
  const auto kind = pipeline::parse_task_kind(task_name);
  if (!kind) {
    throw UsageError("task must be 'clean' or 'tag'");
  }
  const pipeline::Task task =
      *kind == pipeline::TaskKind::Clean ? pipeline::Task::clean() : pipeline::Task::tag(tags::TagVocabulary(config.tags));

  std::string input;
  std::string output;
  try {
    input = read_text(input_file);
    output = read_text(output_file);
  } catch (const std::runtime_error& e) {
    throw UsageError(e.what());
  }

  const pipeline::MetricSet m = pipeline::score(task, input, output);
  const std::string compared = *kind == pipeline::TaskKind::Tag ? tags::strip_tags(output, task.vocabulary) : output;
  const metrics::PreservationScore detail = metrics::preservation(input, compared);

  if (flags.json) {
    json doc = {{"task", task.name()},
                {"cpr", m.cpr},
                {"input_bigrams", detail.input_total},
                {"omissions", detail.omissions},
                {"additions", detail.additions},
                {"twf", m.twf ? json(*m.twf) : json(nullptr)},
                {"n_tags", m.n_tags ? json(*m.n_tags) : json(nullptr)}};
    out << doc.dump() << "\n";
    return kExitOk;
  }
  out << fmt::format("cpr {:.4f} (bigrams {}, omitted {}, added {})\n", m.cpr, detail.input_total,
                     detail.omissions, detail.additions);
  if (m.twf) {
    out << fmt::format("twf {:.4f}\nn_tags {}\n", *m.twf, *m.n_tags);
  }
  return kExitOk;
}

int cmd_report(const fs::path& ledger_path, const GlobalFlags& flags, std::ostream& out, std::ostream& err) {
  if (!fs::is_regular_file(ledger_path)) {
    throw UsageError("ledger not found: " + ledger_path.string());
  }
  const auto ledger = corpus::read_ledger(ledger_path);
  if (ledger.corrupt_lines > 0) {
    err << "warning: skipped " << ledger.corrupt_lines << " corrupt ledger line(s)\n";
  }
  auto report = corpus::build_report(ledger.entries);
  report.corrupt_lines = ledger.corrupt_lines;
  write_reports(ledger_path, report);

  if (flags.json) {
    const auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
    json rows = json::array();
    for (const auto& row : report.rows) {
      rows.push_back({{"task", row.task},
                      {"model", row.model},
                      {"mean_cpr", opt(row.mean_cpr)},
                      {"mean_twf", opt(row.mean_twf)},
                      {"mean_n_tags", opt(row.mean_n_tags)},
                      {"mean_cost_usd", opt(row.mean_cost)},
                      {"cost_vs_best", opt(row.cost_vs_best)},
                      {"mean_latency_ms", opt(row.mean_latency_ms)},
                      {"runs", row.runs},
                      {"failures", row.failures}});
    }
    out << json{{"rows", rows}, {"corrupt_lines", report.corrupt_lines}}.dump(2) << "\n";
  } else {
    out << corpus::render_text(report);
  }
  return kExitOk;
}

int cmd_validate(const fs::path& dir, const GlobalFlags& flags, std::ostream& out, std::ostream& err) {
  const Config config = resolve_config(flags);
  const tags::TagVocabulary vocab(config.tags);
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) {
    throw UsageError("not a directory: " + dir.string());
  }

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir, ec)) {
    if (entry.is_regular_file()) {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());

  std::size_t bad = 0;
  std::size_t unreadable = 0;
  std::size_t pairs = 0;
  std::size_t malformed = 0;
  json results = json::array();
  for (const auto& file : files) {
    std::string text;
    try {
      text = read_text(file);
    } catch (const std::runtime_error& e) {
      ++unreadable;
      err << "error: " << e.what() << "\n";
      continue;
    }
    const auto audit = tags::audit(tags::tokenize(text, vocab));
    const double twf = tags::twf(audit);
    pairs += audit.n_pairs;
    malformed += audit.n_malformed;
    if (audit.n_malformed > 0) {
      ++bad;
    }
    if (flags.json) {
      results.push_back({{"file", file.filename().string()},
                         {"twf", twf},
                         {"n_pairs", audit.n_pairs},
                         {"n_malformed", audit.n_malformed}});
    } else {
      out << fmt::format("{}  twf {:.4f}  pairs {}  malformed {}{}\n", file.filename().string(), twf,
                         audit.n_pairs, audit.n_malformed, audit.n_malformed > 0 ? "  NOT WELL-FORMED" : "");
    }
  }

  if (flags.json) {
    out << json{{"files", results},
                {"total_files", files.size()},
                {"not_well_formed", bad},
                {"unreadable", unreadable},
                {"n_pairs", pairs},
                {"n_malformed", malformed}}
               .dump(2)
        << "\n";
  } else {
    out << fmt::format("{} files, {} not well-formed, {} unreadable, {} pairs, {} malformed\n", files.size(), bad,
                       unreadable, pairs, malformed);
  }
  return bad > 0 || unreadable > 0 ? kExitPartialFailure : kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Clean and semantically tag documents with an ensemble of completion models.", "semtag"};
  app.fallthrough();
  app.require_subcommand(1);
  app.set_version_flag("--version", corpus::version_string());

  GlobalFlags flags;
  app.add_option("--config", flags.config_path, "JSON config file (defaults apply to omitted fields)");
  app.add_option("--backend", flags.backend, "Completion backend, overrides the config")
      ->check(CLI::IsMember({"live", "mock", "replay"}));
  app.add_option("--parallelism", flags.parallelism, "Maximum completions in flight")->check(CLI::PositiveNumber);
  app.add_option("--runs", flags.runs, "Runs per model")->check(CLI::PositiveNumber);
  app.add_flag("--winners-only", flags.winners_only, "Persist only selected outputs, not every candidate");
  app.add_flag("--json", flags.json, "Machine-readable output");

  std::string input;
  std::string output;
  std::string task_name;

  auto* clean = app.add_subcommand("clean", "Clean raw documents (one column, OCR fixes) and keep the best output");
  clean->add_option("input_dir", input, "Directory of .txt documents")->required();
  clean->add_option("output_dir", output, "Output root (cleaned/, candidates/, ledger.jsonl)")->required();

  auto* tag = app.add_subcommand("tag", "Tag cleaned documents and keep the best output");
  tag->add_option("input_dir", input, "Directory of cleaned .txt documents")->required();
  tag->add_option("output_dir", output, "Output root (tagged/, candidates/, ledger.jsonl)")->required();

  auto* score = app.add_subcommand("score", "Print metrics for one input/output pair");
  score->add_option("task", task_name, "clean or tag")->required()->check(CLI::IsMember({"clean", "tag"}));
  score->add_option("input_file", input, "Original text")->required();
  score->add_option("output_file", output, "Candidate output")->required();

  auto* report = app.add_subcommand("report", "Aggregate a ledger per model; writes report.txt and report.csv");
  report->add_option("ledger", input, "Path to ledger.jsonl")->required();

  auto* validate = app.add_subcommand("validate", "Audit tag well-formedness of every file in a directory");
  validate->add_option("tagged_dir", input, "Directory of tagged files")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*clean) {
      return cmd_run_task(pipeline::TaskKind::Clean, input, output, flags, out, err);
    }
    if (*tag) {
      return cmd_run_task(pipeline::TaskKind::Tag, input, output, flags, out, err);
    }
    if (*score) {
      return cmd_score(task_name, input, output, flags, out);
    }
    if (*report) {
      return cmd_report(input, flags, out, err);
    }
    if (*validate) {
      return cmd_validate(input, flags, out, err);
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitPartialFailure;
  }
  return kExitUsage;
}

}  // namespace semtag::cli
