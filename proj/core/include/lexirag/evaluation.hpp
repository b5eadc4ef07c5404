#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "lexirag/embedding.hpp"

namespace lexirag {

enum class QaDomain {
  kFactual,
  kTemporal,
  kGazetteSearch,
  kBanglaDialect,
  kStatistical,
  kGrammarSpellError,
  kOutOfContext,
  kOthers,
};

inline constexpr std::array<QaDomain, 8> kAllDomains{
    QaDomain::kFactual,     QaDomain::kTemporal,          QaDomain::kGazetteSearch,
    QaDomain::kBanglaDialect, QaDomain::kStatistical,     QaDomain::kGrammarSpellError,
    QaDomain::kOutOfContext, QaDomain::kOthers};

std::string_view ToString(QaDomain d);
/// Column heading used in rendered tables, e.g. "Factual".
std::string_view DomainHeading(QaDomain d);
QaDomain ParseQaDomain(std::string_view s);

struct QaItem {
  std::string id;
  std::string question;
  std::string ground_truth;
  QaDomain domain = QaDomain::kOthers;
};

/// Line-delimited {id, question, ground_truth, domain}. Errors carry line numbers.
std::vector<QaItem> LoadTestset(const std::filesystem::path& path);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population
};

MeanStd PopulationMeanStd(std::span<const double> values);

struct ItemScore {
  std::string id;
  double score = 0.0;
};

struct EvalReport {
  std::vector<ItemScore> per_item;
  double mean = 0.0;
  double std = 0.0;
  std::map<QaDomain, double> domain_means;
  std::map<QaDomain, std::size_t> domain_counts;
  std::size_t n_items = 0;
};

/// Builds a report from already-computed scores, index-aligned with `items`.
EvalReport ReportFromScores(const std::vector<QaItem>& items, std::span<const double> scores);

/// Scores each answer by cosine similarity between its embedding and the
/// embedding of the item's ground truth.
EvalReport SemanticSimilarityEval(const std::map<std::string, std::string>& answers,
                                  const std::vector<QaItem>& items, Embedder& embedder);

struct HumanRatings {
  std::map<std::string, std::vector<int>> per_response;  // one rating per evaluator
};

struct HumanAggregate {
  std::map<std::string, double> per_response_mean;
  double overall = 0.0;
};

HumanAggregate AggregateHumanScores(const HumanRatings& ratings);

struct ComparisonRow {
  std::string label;
  double vanilla = 0.0;
  double advanced = 0.0;
  double delta = 0.0;  // advanced - vanilla
};

struct ComparisonTable {
  MeanStd vanilla_overall;
  MeanStd advanced_overall;
  double overall_delta = 0.0;
  std::vector<ComparisonRow> domains;

  std::string Render() const;
};

ComparisonTable ComparePipelines(const EvalReport& vanilla, const EvalReport& advanced);

/// "0.76 ± 0.114": mean to two decimals, deviation to three.
std::string FormatMeanStd(double mean, double std);
std::string FormatDelta(double delta);

/// One row per named report: overall mu ± sigma, then each domain's mean.
std::string RenderReportTable(const std::vector<std::pair<std::string, EvalReport>>& reports);

nlohmann::json ToJson(const EvalReport& report);
nlohmann::json ToJson(const ComparisonTable& table);

struct AnswerRecord {
  std::string id;
  std::string answer;
  std::string pipeline;
  std::string trace_digest;
};

void WriteAnswers(const std::filesystem::path& path, const std::vector<AnswerRecord>& records);
std::vector<AnswerRecord> LoadAnswers(const std::filesystem::path& path);

}  // namespace lexirag
