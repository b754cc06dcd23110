#include <doctest.h>

#include <random>

#include "semtag/corpus.hpp"
#include "semtag/report.hpp"
#include "semtag/tagparser.hpp"
#include "support/test_support.hpp"

using namespace semtag;
using namespace semtag::corpus;
using testing_support::read;
using testing_support::TempDir;
using testing_support::write;

namespace {

std::chrono::system_clock::time_point fixed_time() {
  return std::chrono::system_clock::time_point(std::chrono::seconds(1760000000));
}

pipeline::RunRecord record(std::string doc, pipeline::TaskKind task, std::string model, std::int64_t run,
                           std::string output, bool selected) {
  pipeline::RunRecord r;
  r.doc_id = std::move(doc);
  r.task = task;
  r.model = std::move(model);
  r.run_index = run;
  r.output = std::move(output);
  r.usage = {1200, 340};
  r.latency_ms = 950.25;
  r.cost = 0.00512;
  r.selected = selected;
  return r;
}

LedgerEntry synthetic(std::string model, double cpr, double n_tags, double twf, double cost) {
  LedgerEntry e;
  e.doc_id = "s_res_1";
  e.task = "tag";
  e.model = std::move(model);
  e.cpr = cpr;
  e.n_tags = n_tags;
  e.twf = twf;
  e.cost_usd = cost;
  e.latency_ms = 1000;
  return e;
}

}  // namespace

TEST_CASE("ingest lists txt files in doc_id order") {
  TempDir dir;
  write(dir / "b.txt", "second");
  write(dir / "a.txt", "first");
  write(dir / "notes.md", "ignored");
  const auto result = ingest(dir.path());
  REQUIRE(result.documents.size() == 2);
  CHECK(result.documents[0].doc_id == "a");
  CHECK(result.documents[0].raw_text == "first");
  CHECK(result.documents[1].doc_id == "b");
  CHECK(result.documents[1].source_path == dir / "b.txt");
}

TEST_CASE("ingest edge cases") {
  TempDir dir;
  SUBCASE("empty directory") {
    const auto result = ingest(dir.path());
    CHECK(result.documents.empty());
    CHECK(result.warnings.empty());
  }
  SUBCASE("zero-byte file is skipped with a warning") {
    write(dir / "empty.txt", "");
    const auto result = ingest(dir.path());
    CHECK(result.documents.empty());
    CHECK(result.skipped_empty == 1);
    CHECK(result.warnings.size() == 1);
  }
  SUBCASE("invalid UTF-8 is replaced and counted") {
    write(dir / "ocr.txt", "R\xE9solution \xFF 1946");
    const auto result = ingest(dir.path());
    REQUIRE(result.documents.size() == 1);
    CHECK(result.documents[0].replaced_sequences == 2);
    CHECK(result.replaced_sequences == 2);
    CHECK(result.documents[0].raw_text == "R\xEF\xBF\xBDsolution \xEF\xBF\xBD 1946");
    CHECK(result.warnings.size() == 1);
  }
  SUBCASE("missing directory") { CHECK_THROWS_AS(ingest(dir / "nope"), std::runtime_error); }
}

TEST_CASE("ledger lines use the documented field names in order") {
  LedgerEntry e;
  e.doc_id = "s_res_1";
  e.task = "clean";
  e.model = "gpt-4.1";
  e.cpr = 0.849;
  e.timestamp = "2025-10-09T08:53:20Z";
  e.version = "semtag 0.1.0";
  const std::string line = to_json_line(e);
  const std::vector<std::string> keys = {"doc_id",        "task",     "model",      "run_index",     "temperature",
                                         "max_tokens",    "prompt_tokens",         "completion_tokens",
                                         "latency_ms",    "cost_usd", "cpr",        "twf",           "n_tags",
                                         "selected",      "failure",  "output_path", "timestamp",    "version"};
  std::size_t last = 0;
  for (const auto& key : keys) {
    const auto at = line.find("\"" + key + "\":");
    REQUIRE_MESSAGE(at != std::string::npos, key);
    CHECK(at >= last);
    last = at;
  }
  CHECK(line.find("\"twf\":null") != std::string::npos);
  CHECK(line.find('\n') == std::string::npos);
}

TEST_CASE("ledger round trip is the identity") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> coin(0, 1);
  for (int i = 0; i < 500; ++i) {
    LedgerEntry e;
    e.doc_id = "doc-" + std::to_string(i) + (coin(rng) ? "é\"\\" : "");
    e.task = coin(rng) ? "clean" : "tag";
    e.model = "gpt-" + std::to_string(i % 7);
    e.run_index = 1 + i % 3;
    e.temperature = unit(rng) * 2;
    e.max_tokens = 1 + i * 13;
    e.prompt_tokens = static_cast<std::uint64_t>(rng() % 100000);
    e.completion_tokens = static_cast<std::uint64_t>(rng() % 100000);
    e.latency_ms = unit(rng) * 1e5;
    e.cost_usd = unit(rng) / 10;
    if (coin(rng)) {
      e.cpr = unit(rng);
      e.twf = coin(rng) ? std::optional<double>(unit(rng)) : std::nullopt;
      e.n_tags = coin(rng) ? static_cast<double>(rng() % 200) : unit(rng) * 100;
    } else {
      e.failure = "transport";
    }
    e.selected = coin(rng);
    e.output_path = "candidates/x/tag.m.1.txt";
    e.timestamp = "2026-01-01T00:00:00Z";
    e.version = "semtag 0.1.0";
    REQUIRE(parse_ledger_line(to_json_line(e)) == e);
  }
}

TEST_CASE("read_ledger skips and counts corrupt lines") {
  TempDir dir;
  LedgerEntry e;
  e.doc_id = "a";
  e.task = "clean";
  e.model = "m";
  e.cpr = 1.0;
  write(dir / "ledger.jsonl", to_json_line(e) + "\n{broken\n\n[1,2]\n{\"doc_id\":\"x\"}\n" + to_json_line(e) + "\n");
  const auto contents = read_ledger(dir / "ledger.jsonl");
  CHECK(contents.entries.size() == 2);
  CHECK(contents.corrupt_lines == 3);
  CHECK_THROWS_AS(read_ledger(dir / "missing.jsonl"), std::runtime_error);
}

TEST_CASE("persist writes winners, candidates and ledger lines") {
  TempDir dir;
  CorpusStore store(dir.path(), false, fixed_time);

  auto winner = record("s_res_1", pipeline::TaskKind::Tag, "gpt-4.1", 1,
                       "<location>Paris</location> and <date>1946", true);
  winner.metrics = pipeline::MetricSet{1.0, 0.5, 1};
  const auto paths = store.persist(winner);
  REQUIRE(paths.winner.has_value());
  CHECK(*paths.winner == std::filesystem::path("tagged/s_res_1.xml"));
  CHECK(read(dir / "tagged/s_res_1.xml") == winner.output);
  CHECK(read(dir / "candidates/s_res_1/tag.gpt-4.1.1.txt") == winner.output);

  auto loser = record("s_res_1", pipeline::TaskKind::Tag, "gpt-4.1-nano", 2, "Paris and 1946", false);
  loser.metrics = pipeline::MetricSet{1.0, 1.0, 0};
  const auto loser_paths = store.persist(loser);
  CHECK_FALSE(loser_paths.winner.has_value());
  CHECK(std::filesystem::exists(dir / "candidates/s_res_1/tag.gpt-4.1-nano.2.txt"));

  const auto ledger = read_ledger(store.ledger_path());
  REQUIRE(ledger.entries.size() == 2);
  const auto& e = ledger.entries[0];
  CHECK(e.output_path == "tagged/s_res_1.xml");
  CHECK(e.selected);
  CHECK(e.timestamp == "2025-10-09T08:53:20Z");
  CHECK(e.version == version_string());
  CHECK(e.prompt_tokens == 1200);
  CHECK(e.cost_usd == 0.00512);
  CHECK(ledger.entries[1].output_path == "candidates/s_res_1/tag.gpt-4.1-nano.2.txt");

  // The persisted winner re-audits to the ledger's twf.
  const auto audit = tags::audit(tags::tokenize(read(dir / e.output_path), tags::TagVocabulary::standard()));
  CHECK(tags::twf(audit) == *e.twf);
  CHECK(static_cast<double>(tags::n_tags(audit)) == *e.n_tags);

  SUBCASE("duplicate keys are rejected") {
    CHECK_THROWS_AS(store.persist(loser), DuplicateKeyError);
    CHECK(read_ledger(store.ledger_path()).entries.size() == 2);
  }
  SUBCASE("keys survive reopening the store") {
    CorpusStore reopened(dir.path());
    CHECK(reopened.contains("s_res_1", "tag"));
    CHECK_FALSE(reopened.contains("s_res_1", "clean"));
    CHECK_THROWS_AS(reopened.persist(winner), DuplicateKeyError);
  }
}

TEST_CASE("persist handles failures and winners-only") {
  TempDir dir;
  CorpusStore store(dir.path(), true, fixed_time);

  auto failed = record("d", pipeline::TaskKind::Clean, "m", 1, "", false);
  failed.failure = "transport";
  failed.usage = {};
  failed.cost = 0;
  const auto failed_paths = store.persist(failed);
  CHECK_FALSE(failed_paths.candidate.has_value());

  auto loser = record("d", pipeline::TaskKind::Clean, "m", 2, "text", false);
  loser.metrics = pipeline::MetricSet{0.5, std::nullopt, std::nullopt};
  CHECK_FALSE(store.persist(loser).candidate.has_value());

  auto winner = record("d", pipeline::TaskKind::Clean, "m", 3, "text!", true);
  winner.metrics = pipeline::MetricSet{0.9, std::nullopt, std::nullopt};
  CHECK(store.persist(winner).winner == std::filesystem::path("cleaned/d.txt"));

  const auto ledger = read_ledger(store.ledger_path());
  REQUIRE(ledger.entries.size() == 3);
  CHECK(ledger.entries[0].failure == "transport");
  CHECK_FALSE(ledger.entries[0].cpr.has_value());
  CHECK(ledger.entries[0].output_path.empty());
  CHECK(ledger.entries[1].output_path.empty());
  CHECK_FALSE(std::filesystem::exists(dir / "candidates/d/clean.m.2.txt"));
  CHECK(read(dir / "cleaned/d.txt") == "text!");
}

TEST_CASE("persist_all refuses a task that is already recorded") {
  TempDir dir;
  CorpusStore store(dir.path(), false, fixed_time);
  pipeline::TaskResult result;
  result.records.push_back(record("d", pipeline::TaskKind::Clean, "m", 1, "x", true));
  result.records[0].metrics = pipeline::MetricSet{1.0, std::nullopt, std::nullopt};
  result.selected = 0;
  store.persist_all(result);
  CHECK_THROWS_AS(store.persist_all(result), DuplicateKeyError);
  CHECK(read_ledger(store.ledger_path()).entries.size() == 1);
}

TEST_CASE("report reproduces injected per-model values") {
  const std::vector<LedgerEntry> ledger = {
      synthetic("gpt-4.1-mini", 0.9992, 80.1, 0.9964, 0.0033),
      synthetic("gpt-4.1", 0.9999, 92.6, 0.9992, 0.017),
      synthetic("gpt-5.1", 0.9995, 93.1, 0.9991, 0.0200),
  };
  const auto report = build_report(ledger);
  REQUIRE(report.rows.size() == 3);
  CHECK(report.rows[0].model == "gpt-4.1");
  CHECK(report.rows[1].model == "gpt-5.1");
  CHECK(report.rows[2].model == "gpt-4.1-mini");

  const auto& full = report.rows[0];
  CHECK(*full.mean_cpr == doctest::Approx(0.9999).epsilon(1e-12));
  CHECK(*full.mean_n_tags == doctest::Approx(92.6).epsilon(1e-12));
  CHECK(*full.mean_twf == doctest::Approx(0.9992).epsilon(1e-12));
  CHECK(*full.mean_cost == doctest::Approx(0.017).epsilon(1e-12));
  CHECK(*full.cost_vs_best == 1.0);
  CHECK(*report.rows[2].cost_vs_best == doctest::Approx(0.0033 / 0.017));

  const std::string text = render_text(report);
  CHECK(text.find("gpt-4.1-mini  0.9992  0.9964    80.1  0.0033      0.19") != std::string::npos);
  CHECK(text == render_text(build_report(ledger)));
  const std::string csv = render_csv(report);
  CHECK(csv.find("tag,gpt-4.1,0.9999,0.9992,92.6,0.017,1,1000,1,0") != std::string::npos);
}

TEST_CASE("report aggregation rules") {
  SUBCASE("empty ledger") {
    const auto report = build_report(std::vector<LedgerEntry>{});
    CHECK(report.rows.empty());
    CHECK(testing_support::lines(render_text(report)).size() == 2);  // header + rule
    CHECK(testing_support::lines(render_csv(report)).size() == 1);
  }
  SUBCASE("means skip failures but runs count them") {
    std::vector<LedgerEntry> ledger = {synthetic("m", 0.8, 10, 1.0, 0.01), synthetic("m", 0.6, 20, 0.5, 0.03),
                                       synthetic("m", 0.0, 0, 0, 0)};
    ledger[2].failure = "transport";
    ledger[2].cpr.reset();
    const auto report = build_report(ledger);
    REQUIRE(report.rows.size() == 1);
    CHECK(report.rows[0].runs == 3);
    CHECK(report.rows[0].failures == 1);
    CHECK(*report.rows[0].mean_cpr == doctest::Approx(0.7));
    CHECK(*report.rows[0].mean_n_tags == doctest::Approx(15));
    CHECK(*report.rows[0].mean_twf == doctest::Approx(0.75));
    CHECK(*report.rows[0].mean_cost == doctest::Approx(0.02));
  }
  SUBCASE("tasks are reported separately, clean first") {
    auto clean = synthetic("gpt-4.1", 0.849, 0, 0, 0.0139);
    clean.task = "clean";
    clean.twf.reset();
    clean.n_tags.reset();
    auto clean_mini = clean;
    clean_mini.model = "gpt-4.1-mini";
    clean_mini.cpr = 0.835;
    clean_mini.cost_usd = 0.0028;
    const std::vector<LedgerEntry> ledger = {synthetic("gpt-4.1", 0.9999, 92.6, 0.9992, 0.017), clean_mini, clean};
    const auto report = build_report(ledger);
    REQUIRE(report.rows.size() == 3);
    CHECK(report.rows[0].task == "clean");
    CHECK(report.rows[0].model == "gpt-4.1");
    CHECK_FALSE(report.rows[0].mean_twf.has_value());
    CHECK(*report.rows[1].cost_vs_best == doctest::Approx(0.0028 / 0.0139));
    CHECK(report.rows[2].task == "tag");
    CHECK(*report.rows[2].cost_vs_best == 1.0);
  }
  SUBCASE("row order does not depend on ledger line order") {
    std::vector<LedgerEntry> ledger = {synthetic("a", 0.5, 1, 1, 0.1), synthetic("b", 0.5, 2, 1, 0.2),
                                       synthetic("a", 0.7, 3, 1, 0.1)};
    const auto forward = render_text(build_report(ledger));
    std::reverse(ledger.begin(), ledger.end());
    CHECK(render_text(build_report(ledger)) == forward);
  }
}

TEST_CASE("iso8601 timestamps") {
  CHECK(iso8601_utc(std::chrono::system_clock::time_point{}) == "1970-01-01T00:00:00Z");
  CHECK(iso8601_utc(fixed_time()) == "2025-10-09T08:53:20Z");
}
