// Prints one PASS/FAIL line per acceptance criterion; exits nonzero on any FAIL.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>

#include "lexirag/corpus_ingest.hpp"
#include "lexirag/evaluation.hpp"
#include "lexirag/utf8.hpp"
#include "mmr_oracle.hpp"
#include "service_fixture.hpp"
#include "splitter_props.hpp"

namespace lexirag {
namespace {

using nlohmann::json;

// Digest of the scripted two-iteration run below, frozen from a reference build.
constexpr const char* kFrozenDigest = "fnv1a64:fef4a7af1757fe8d";

std::string Fail(const std::string& why) { return why.empty() ? "unspecified" : why; }

#define REQUIRE(cond, why)                      \
  do {                                          \
    if (!(cond)) return Fail(why);              \
  } while (0)

PipelineConfig Scripted(PipelineMode mode) {
  PipelineConfig cfg;
  cfg.mode = mode;
  cfg.generator.backend = LlmBackendKind::kScripted;
  cfg.checker.backend = LlmBackendKind::kScripted;
  cfg.retrieval = RetrievalConfig::ForTopK(3);
  return cfg;
}

VectorStore RandomCorpus(std::mt19937_64& rng, std::size_t dim) {
  std::uniform_int_distribution<int> n(4, 15);
  std::vector<std::string> texts;
  for (int i = 0, count = n(rng); i < count; ++i) {
    std::string t;
    while (utf8::Length(t) < 3) t = testing::RandomBilingualText(rng, 12);
    texts.push_back(t);
  }
  return testing::StoreOfTexts(texts, dim);
}

std::string MmrOracleEquivalence() {
  std::mt19937_64 rng(2024);
  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < 500; ++i) {
    const auto inst = testing::RandomMmrInstance(rng);
    const auto store = testing::StoreOf(inst.items);
    const RetrievalConfig cfg{inst.top_k, inst.fetch_k, inst.lambda, RetrievalStrategy::kMmr};
    const auto got = testing::Ids(store.MmrSelect(EmbeddingVector(inst.query, "m"), cfg));
    const auto want = testing::OracleMmr(inst.items, inst.query, inst.top_k, inst.fetch_k, inst.lambda);
    REQUIRE(got == want, "instance " + std::to_string(i) + " differs from oracle");
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  REQUIRE(secs < 10.0, "took " + std::to_string(secs) + " s");
  return "";
}

std::string CosineReferenceCases() {
  const auto c = CosineSimilarity(testing::Vec({1, 2, 2}), testing::Vec({2, 1, 2}));
  REQUIRE(std::fabs(c - 8.0 / 9.0) <= 1e-12, "cos((1,2,2),(2,1,2)) = " + std::to_string(c));
  REQUIRE(std::fabs(CosineSimilarity(testing::Vec({1, 0}), testing::Vec({0, 3}))) <= 1e-12,
          "orthogonal vectors");
  REQUIRE(std::fabs(CosineSimilarity(testing::Vec({1, -2}), testing::Vec({-1, 2})) + 1.0) <= 1e-12,
          "opposite vectors");
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-5, 5), scale(0.001, 1000);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> a(8), b(8);
    for (auto& x : a) x = u(rng);
    for (auto& x : b) x = u(rng);
    const double s1 = scale(rng), s2 = scale(rng);
    std::vector<double> as = a, bs = b;
    for (auto& x : as) x *= s1;
    for (auto& x : bs) x *= s2;
    const double d = CosineSimilarity(testing::Vec(a), testing::Vec(b)) -
                     CosineSimilarity(testing::Vec(as), testing::Vec(bs));
    REQUIRE(std::fabs(d) <= 1e-9, "scale invariance broken on case " + std::to_string(i));
  }
  return "";
}

/// Embedder that counts retrieval passes.
class CountingEmbedder : public Embedder {
 public:
  explicit CountingEmbedder(std::size_t dim) : inner_(dim) {}
  std::vector<EmbeddingVector> Embed(std::span<const std::string> texts) override {
    ++calls;
    return inner_.Embed(texts);
  }
  const std::string& model_id() const override { return inner_.model_id(); }
  std::size_t dim() const override { return inner_.dim(); }
  int calls = 0;

 private:
  MockEmbedder inner_;
};

const std::vector<std::string> kPoliceTexts = {
    "Tourist Police was formed in 2009.", "River Police patrols the waterways.",
    "ট্যুরিস্ট পুলিশ ২০০৯ সালে গঠিত হয়।", "The budget was approved by the ministry.",
    "Highway Police covers national roads."};
const Query kQuery{"When was Tourist Police formed?", "police"};

std::string IterationCap() {
  {
    const auto store = testing::StoreOfTexts(kPoliceTexts);
    CountingEmbedder embedder(64);
    std::vector<std::string> script(10, "VERDICT: IRRELEVANT\nREFINED_QUERY: try again");
    ScriptedBackend gen({"answer"}), chk(script);
    RagPipeline p(store, embedder, gen, chk);
    auto cfg = Scripted(PipelineMode::kAdvanced);
    cfg.max_refinements = 3;
    const auto r = p.AnswerAdvanced(kQuery, cfg);
    REQUIRE(embedder.calls == 4, "retrievals = " + std::to_string(embedder.calls));
    REQUIRE(chk.calls() == 4, "checker calls = " + std::to_string(chk.calls()));
    REQUIRE(r.refinement_exhausted, "refinement_exhausted not set");
  }
  {
    const auto store = testing::StoreOfTexts(kPoliceTexts);
    CountingEmbedder embedder(64);
    ScriptedBackend gen({"answer"}), chk({"VERDICT: RELEVANT"});
    RagPipeline p(store, embedder, gen, chk);
    const auto r = p.AnswerAdvanced(kQuery, Scripted(PipelineMode::kAdvanced));
    REQUIRE(embedder.calls == 1 && chk.calls() == 1, "first-pass relevant did more than one pass");
    REQUIRE(!r.refinement_exhausted, "exhausted on first-pass relevant");
  }
  return "";
}

std::string VanillaPurity() {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 20; ++i) {
    const auto store = i == 0 ? testing::StoreOfTexts(kPoliceTexts) : RandomCorpus(rng, 64);
    MockEmbedder embedder(64);
    ScriptedBackend gen({"answer"}), chk({"VERDICT: RELEVANT"});
    RagPipeline p(store, embedder, gen, chk);
    p.AnswerVanilla(kQuery, Scripted(PipelineMode::kVanilla));
    REQUIRE(chk.calls() == 0, "checker called on corpus " + std::to_string(i));
  }
  return "";
}

std::string FailOpenEquivalence() {
  std::mt19937_64 rng(12);
  const std::vector<std::string> junk{"", "I cannot tell.", "VERDICT: IRRELEVANT", "VERDICT: maybe",
                                      "REFINED_QUERY: x"};
  for (int i = 0; i < 20; ++i) {
    const auto store = RandomCorpus(rng, 64);
    const std::string question = testing::RandomBilingualText(rng, 6) + " প্রশ্ন";
    MockEmbedder embedder(64);
    ScriptedBackend gen({"a", "a"}), chk(std::vector<std::string>(4, junk[i % junk.size()]));
    RagPipeline p(store, embedder, gen, chk);
    const Query q{question, "random"};
    const auto adv = p.AnswerAdvanced(q, Scripted(PipelineMode::kAdvanced));
    const auto van = p.AnswerVanilla(q, Scripted(PipelineMode::kVanilla));
    REQUIRE(testing::Ids(adv.final_chunks) == testing::Ids(van.final_chunks),
            "final chunks differ on corpus " + std::to_string(i));
    REQUIRE(adv.trace.size() == 1 && adv.trace[0].verdict->parse_failed,
            "unparseable verdict did not fail open on corpus " + std::to_string(i));
  }
  return "";
}

std::string DeterministicRunDigest() {
  const auto store = testing::StoreOfTexts(kPoliceTexts);
  MockEmbedder embedder(64);
  ScriptedBackend gen({"Tourist Police was formed in 2009."}),
      chk({"VERDICT: IRRELEVANT\nREFINED_QUERY: Tourist Police formation year", "VERDICT: RELEVANT"});
  RagPipeline p(store, embedder, gen, chk, PromptTemplates::Defaults(), testing::TickingClock());
  const auto r = p.AnswerAdvanced(kQuery, Scripted(PipelineMode::kAdvanced));
  return "fnv1a64:" + utf8::ToHex64(utf8::Fnv1a64(SerializeRagResult(r)));
}

std::string Determinism() {
  const auto a = DeterministicRunDigest();
  const auto b = DeterministicRunDigest();
  REQUIRE(a == b, "two runs differ: " + a + " vs " + b);
  REQUIRE(a == kFrozenDigest, "digest " + a + " differs from frozen " + kFrozenDigest);
  return "";
}

std::string PageCountArithmetic() {
  const int pages[] = {36, 1, 2, 3, 4, 5, 6, 3, 4, 5, 4, 5, 3};
  std::vector<DocumentMeta> metas;
  for (int i = 0; i < 13; ++i) {
    metas.push_back({"gz" + std::to_string(i), "Gazette " + std::to_string(i), pages[i],
                     LanguageHint::kBn, ""});
  }
  const auto s = CorpusStats(metas);
  REQUIRE(s.total_docs == 13 && s.total_pages == 81, "totals " + std::to_string(s.total_docs) + "/" +
                                                         std::to_string(s.total_pages));
  REQUIRE(std::fabs(s.mean_pages - 6.23) <= 0.005, "mean pages " + std::to_string(s.mean_pages));
  return "";
}

std::string ReportFormatting() {
  const auto text = FormatMeanStd(0.761234, 0.114456);
  REQUIRE(text == "0.76 ± 0.114", "rendered '" + text + "'");
  const std::vector<QaItem> items{{"a", "q", "g", QaDomain::kFactual}};
  const auto t = ComparePipelines(ReportFromScores(items, std::vector<double>{0.76}),
                                  ReportFromScores(items, std::vector<double>{0.82}));
  REQUIRE(FormatDelta(t.overall_delta) == "+0.06", "delta '" + FormatDelta(t.overall_delta) + "'");
  return "";
}

std::string SplitterProperties() {
  std::mt19937_64 rng(1000);
  std::uniform_int_distribution<std::size_t> size(1, 150);
  for (int i = 0; i < 1000; ++i) {
    const std::string text = testing::RandomBilingualText(rng, 80);
    ChunkConfig cfg;
    cfg.chunk_size = size(rng);
    cfg.chunk_overlap = std::uniform_int_distribution<std::size_t>(0, cfg.chunk_size - 1)(rng);
    const auto err = testing::CheckSplitProperties(text, cfg, SplitText(text, cfg));
    REQUIRE(err.empty(), "random case " + std::to_string(i) + ": " + err);
  }
  const auto cases = testing::LoadJson("splitter_golden.json");
  for (const auto& c : cases) {
    ChunkConfig cfg;
    cfg.chunk_size = c.at("chunk_size");
    cfg.chunk_overlap = c.at("chunk_overlap");
    cfg.separators = c.at("separators").get<std::vector<std::string>>();
    std::vector<std::string> got;
    for (const auto& d : SplitText(c.at("text").get<std::string>(), cfg)) got.push_back(d.text);
    REQUIRE(got == c.at("chunks").get<std::vector<std::string>>(),
            "golden mismatch for '" + c.at("text").get<std::string>() + "'");
  }
  return "";
}

std::string StoreRoundTrip() {
  std::mt19937_64 rng(50);
  std::normal_distribution<double> g;
  auto random_vec = [&] {
    std::vector<double> v(16);
    for (auto& x : v) x = g(rng);
    return testing::Vec(v, "m");
  };
  VectorStore store;
  std::vector<StoreRecord> records;
  for (int i = 0; i < 50; ++i) records.push_back(testing::Record("r" + std::to_string(i), random_vec()));
  store.AddChunks(records);
  testing::TempDir dir;
  const auto path = dir / "store.jsonl";
  store.Persist(path);
  const auto loaded = VectorStore::Load(path);
  for (int q = 0; q < 5; ++q) {
    const auto query = random_vec();
    const auto a = store.TopKBySimilarity(query, 10), b = loaded.TopKBySimilarity(query, 10);
    REQUIRE(testing::Ids(a) == testing::Ids(b), "top-k ids differ for query " + std::to_string(q));
    for (std::size_t i = 0; i < a.size(); ++i) {
      REQUIRE(a[i].score == b[i].score, "scores differ for query " + std::to_string(q));
    }
  }

  auto rejects = [&](const std::string& contents, ErrorCode want) {
    testing::WriteAll(dir / "bad.jsonl", contents);
    try {
      VectorStore::Load(dir / "bad.jsonl");
    } catch (const Error& e) {
      return e.code() == want;
    }
    return false;
  };
  std::string good = testing::ReadAll(path);
  std::string flipped = good;
  flipped[flipped.size() / 2] = flipped[flipped.size() / 2] == '1' ? '2' : '1';
  REQUIRE(rejects(flipped, ErrorCode::kCorruptFile), "corrupted file accepted");
  REQUIRE(rejects(good.substr(0, good.size() / 2), ErrorCode::kCorruptFile), "truncated file accepted");
  const auto nl = good.find('\n');
  auto header = json::parse(good.substr(0, nl));
  header["format_version"] = 2;
  REQUIRE(rejects(header.dump() + good.substr(nl), ErrorCode::kVersionMismatch),
          "version-mismatched file accepted");
  return "";
}

std::string ServiceContract() {
  auto svc = testing::ScriptedService({"It was formed in 2009."}, {"VERDICT: RELEVANT"});
  testing::SeedCorpus(*svc, "police");
  const auto ok = svc->Dispatch("POST", "/v1/query", testing::QueryBody("police", kQuery.text));
  REQUIRE(ok.status == 200, "expected 200, got " + std::to_string(ok.status) + ": " + ok.body);
  const auto body = json::parse(ok.body);
  REQUIRE(ToJson(QueryResponseFromJson(body)).dump() == body.dump(), "response does not round-trip");

  const auto missing = svc->Dispatch("POST", "/v1/query", testing::QueryBody("absent", kQuery.text));
  REQUIRE(missing.status == 404, "unknown corpus gave " + std::to_string(missing.status));

  const auto big = svc->Dispatch("POST", "/v1/query", testing::QueryBody("police", std::string(5000, 'x')));
  REQUIRE(big.status == 400, "overlong question gave " + std::to_string(big.status));
  REQUIRE(json::parse(big.body)["fields"].contains("question"), "400 body does not name the field");
  return "";
}

}  // namespace
}  // namespace lexirag

int main(int argc, char** argv) {
  using Check = std::pair<const char*, std::function<std::string()>>;
  const std::vector<Check> checks{
      {"mmr_oracle_equivalence", lexirag::MmrOracleEquivalence},
      {"cosine_similarity", lexirag::CosineReferenceCases},
      {"iteration_cap", lexirag::IterationCap},
      {"vanilla_purity", lexirag::VanillaPurity},
      {"fail_open_equivalence", lexirag::FailOpenEquivalence},
      {"determinism", lexirag::Determinism},
      {"corpus_stats_arithmetic", lexirag::PageCountArithmetic},
      {"report_formatting", lexirag::ReportFormatting},
      {"splitter_properties", lexirag::SplitterProperties},
      {"store_round_trip", lexirag::StoreRoundTrip},
      {"service_contract", lexirag::ServiceContract},
  };
  if (argc > 1 && std::string(argv[1]) == "--print-digest") {
    std::printf("%s\n", lexirag::DeterministicRunDigest().c_str());
    return 0;
  }
  int failed = 0;
  for (const auto& [name, fn] : checks) {
    std::string why;
    try {
      why = fn();
    } catch (const std::exception& e) {
      why = std::string("threw: ") + e.what();
    }
    if (why.empty()) {
      std::printf("PASS %s\n", name);
    } else {
      std::printf("FAIL %s: %s\n", name, why.c_str());
      ++failed;
    }
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(checks.size()) - failed, checks.size());
  return failed == 0 ? 0 : 1;
}
