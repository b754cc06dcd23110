#include "semtag/pipeline.hpp"

#include <atomic>
#include <stdexcept>
#include <thread>
#include <tuple>

#include "semtag/metrics.hpp"

namespace semtag::pipeline {

std::string_view to_string(TaskKind kind) { return kind == TaskKind::Clean ? "clean" : "tag"; }

std::optional<TaskKind> parse_task_kind(std::string_view name) {
  if (name == "clean") {
    return TaskKind::Clean;
  }
  if (name == "tag") {
    return TaskKind::Tag;
  }
  return std::nullopt;
}

Task Task::clean() { return {TaskKind::Clean, std::string(kCleanInstruction), tags::TagVocabulary::standard()}; }

Task Task::tag(tags::TagVocabulary vocabulary) {
  std::string instruction(kTagInstructionLead);
  instruction += "\n\n";
  const auto& names = vocabulary.names();
  for (std::size_t i = 0; i < names.size(); ++i) {
    instruction += (i == 0 ? "<" : " <") + names[i] + ">";
  }
  return {TaskKind::Tag, std::move(instruction), std::move(vocabulary)};
}

std::string build_prompt(const Task& task, std::string_view body) {
  if (body.empty()) {
    throw std::invalid_argument("prompt body is empty");
  }
  std::string prompt = task.instruction;
  prompt += "\n\n";
  prompt += body;
  return prompt;
}

MetricSet score(const Task& task, std::string_view input, std::string_view output) {
  MetricSet metrics;
  if (task.kind == TaskKind::Clean) {
    metrics.cpr = metrics::preservation(input, output).cpr;
    return metrics;
  }
  const auto tokens = tags::tokenize(output, task.vocabulary);
  std::string stripped;
  for (const auto& token : tokens) {
    if (token.kind == tags::TagToken::Kind::Text) {
      stripped += token.value;
    }
  }
  const auto audit = tags::audit(tokens);
  metrics.cpr = metrics::preservation(input, stripped).cpr;
  metrics.twf = tags::twf(audit);
  metrics.n_tags = tags::n_tags(audit);
  return metrics;
}

bool outranks(const RunRecord& a, const RunRecord& b, TaskKind kind) {
  const MetricSet& ma = *a.metrics;
  const MetricSet& mb = *b.metrics;
  if (ma.cpr != mb.cpr) {
    return ma.cpr > mb.cpr;
  }
  if (kind == TaskKind::Tag) {
    const double twf_a = ma.twf.value_or(0.0);
    const double twf_b = mb.twf.value_or(0.0);
    if (twf_a != twf_b) {
      return twf_a > twf_b;
    }
    const auto tags_a = ma.n_tags.value_or(0);
    const auto tags_b = mb.n_tags.value_or(0);
    if (tags_a != tags_b) {
      return tags_a > tags_b;
    }
  }
  return std::tie(a.cost, a.model, a.run_index) < std::tie(b.cost, b.model, b.run_index);
}

std::optional<std::size_t> select_best(std::span<const RunRecord> records, TaskKind kind) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].failed() || !records[i].metrics) {
      continue;
    }
    if (!best || outranks(records[i], records[*best], kind)) {
      best = i;
    }
  }
  return best;
}

TaskResult run_task(const corpus::Document& doc, const Task& task,
                    std::span<const provider::ModelSpec> roster, const RunOptions& options,
                    provider::CompletionBackend& backend) {
  if (roster.empty()) {
    throw std::invalid_argument("model roster is empty");
  }
  if (options.runs_per_model <= 0) {
    throw std::invalid_argument("runs_per_model must be positive");
  }

  const auto runs = static_cast<std::size_t>(options.runs_per_model);
  TaskResult result;
  result.records.resize(roster.size() * runs);
  for (std::size_t m = 0; m < roster.size(); ++m) {
    for (std::size_t r = 0; r < runs; ++r) {
      RunRecord& record = result.records[m * runs + r];
      record.doc_id = doc.doc_id;
      record.task = task.kind;
      record.model = roster[m].name;
      record.run_index = static_cast<std::int64_t>(r + 1);
      record.temperature = options.temperature;
      record.max_tokens = options.max_tokens;
    }
  }

  provider::CompletionRequest request{doc.doc_id, std::string(task.name()), task.instruction, doc.raw_text};

  // Each worker writes only the slot it claimed.
  const auto execute = [&](std::size_t slot) {
    RunRecord& record = result.records[slot];
    const provider::ModelSpec& model = roster[slot / runs];
    provider::RequestParams params{options.temperature, options.max_tokens, record.run_index};
    try {
      if (request.body.empty()) {
        throw provider::ProviderError(provider::ErrorKind::Rejected, "empty document");
      }
      provider::CompletionResult completion = backend.complete(model, params, request);
      record.output = std::move(completion.text);
      record.usage = completion.usage;
      record.latency_ms = completion.latency_ms;
      record.truncated = completion.truncated;
      record.cost = provider::cost(record.usage, model);
    } catch (const provider::ProviderError& e) {
      record.failure = std::string(provider::to_string(e.kind()));
    } catch (const std::exception&) {
      record.failure = "error";
    }
  };

  const std::size_t total = result.records.size();
  const std::size_t workers = std::min(std::max<std::size_t>(options.parallelism, 1), total);
  if (workers == 1) {
    for (std::size_t slot = 0; slot < total; ++slot) {
      execute(slot);
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t slot = next++; slot < total; slot = next++) {
          execute(slot);
        }
      });
    }
  }

  for (auto& record : result.records) {
    if (!record.failed()) {
      record.metrics = score(task, doc.raw_text, record.output);
    }
  }
  result.selected = select_best(result.records, task.kind);
  if (result.selected) {
    result.records[*result.selected].selected = true;
  }
  return result;
}

}  // namespace semtag::pipeline
