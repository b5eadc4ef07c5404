#include "lexirag/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "lexirag/error.hpp"
#include "lexirag/utf8.hpp"

namespace lexirag {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view ToString(QaDomain d) {
  switch (d) {
    case QaDomain::kFactual: return "factual";
    case QaDomain::kTemporal: return "temporal";
    case QaDomain::kGazetteSearch: return "gazette_search";
    case QaDomain::kBanglaDialect: return "bangla_dialect";
    case QaDomain::kStatistical: return "statistical";
    case QaDomain::kGrammarSpellError: return "grammar_spell_error";
    case QaDomain::kOutOfContext: return "out_of_context";
    case QaDomain::kOthers: return "others";
  }
  return "others";
}

std::string_view DomainHeading(QaDomain d) {
  switch (d) {
    case QaDomain::kFactual: return "Factual Question";
    case QaDomain::kTemporal: return "Temporal Changes";
    case QaDomain::kGazetteSearch: return "Gazette Search";
    case QaDomain::kBanglaDialect: return "Bangla Dialect";
    case QaDomain::kStatistical: return "Statistical Question";
    case QaDomain::kGrammarSpellError: return "Grammar/Spell Error";
    case QaDomain::kOutOfContext: return "Out of Context";
    case QaDomain::kOthers: return "Others";
  }
  return "Others";
}

QaDomain ParseQaDomain(std::string_view s) {
  for (QaDomain d : kAllDomains) {
    if (ToString(d) == s) return d;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown domain label '" + std::string(s) + "'");
}

std::vector<QaItem> LoadTestset(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kNotFound, "testset " + path.string() + " not found");
  std::vector<QaItem> items;
  std::map<std::string, int> first_line;
  std::string line;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + " line " + std::to_string(lineno);
    QaItem item;
    try {
      const json rec = json::parse(line);
      if (!rec.is_object()) throw Error(ErrorCode::kParse, "record is not an object");
      for (const auto& [key, _] : rec.items()) {
        if (key != "id" && key != "question" && key != "ground_truth" && key != "domain") {
          throw Error(ErrorCode::kParse, "unknown field '" + key + "'");
        }
      }
      item.id = rec.at("id").get<std::string>();
      item.question = rec.at("question").get<std::string>();
      item.ground_truth = rec.at("ground_truth").get<std::string>();
      item.domain = ParseQaDomain(rec.at("domain").get<std::string>());
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kParse, where + ": " + e.what());
    } catch (const Error& e) {
      throw Error(e.code(), where + ": " + e.what());
    }
    if (item.id.empty() || item.question.empty() || item.ground_truth.empty()) {
      throw Error(ErrorCode::kParse, where + ": id, question and ground_truth must be non-empty");
    }
    const auto [it, inserted] = first_line.emplace(item.id, lineno);
    if (!inserted) {
      throw Error(ErrorCode::kAlreadyExists, path.string() + ": duplicate id '" + item.id +
                                                 "' on lines " + std::to_string(it->second) +
                                                 " and " + std::to_string(lineno));
    }
    items.push_back(std::move(item));
  }
  return items;
}

MeanStd PopulationMeanStd(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::kInvalidArgument, "mean of an empty set");
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / static_cast<double>(values.size());
  double sq = 0.0;
  for (double v : values) sq += (v - mean) * (v - mean);
  return {mean, std::sqrt(sq / static_cast<double>(values.size()))};
}

EvalReport ReportFromScores(const std::vector<QaItem>& items, std::span<const double> scores) {
  if (items.empty()) throw Error(ErrorCode::kInvalidArgument, "evaluation needs at least one item");
  if (items.size() != scores.size()) {
    throw Error(ErrorCode::kInvalidArgument, "score count does not match item count");
  }
  EvalReport report;
  report.n_items = items.size();
  std::map<QaDomain, double> sums;
  for (std::size_t i = 0; i < items.size(); ++i) {
    report.per_item.push_back({items[i].id, scores[i]});
    sums[items[i].domain] += scores[i];
    ++report.domain_counts[items[i].domain];
  }
  const auto overall = PopulationMeanStd(scores);
  report.mean = overall.mean;
  report.std = overall.std;
  for (const auto& [domain, sum] : sums) {
    report.domain_means[domain] = sum / static_cast<double>(report.domain_counts[domain]);
  }
  return report;
}

EvalReport SemanticSimilarityEval(const std::map<std::string, std::string>& answers,
                                  const std::vector<QaItem>& items, Embedder& embedder) {
  if (items.empty()) throw Error(ErrorCode::kInvalidArgument, "evaluation needs at least one item");
  std::vector<std::string> texts;
  texts.reserve(2 * items.size());
  for (const auto& item : items) {
    const auto it = answers.find(item.id);
    if (it == answers.end()) {
      throw Error(ErrorCode::kInvalidArgument, "no answer for item '" + item.id + "'");
    }
    if (it->second.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "empty answer for item '" + item.id + "'");
    }
    texts.push_back(it->second);
  }
  for (const auto& item : items) texts.push_back(item.ground_truth);

  const auto vectors = embedder.Embed(texts);
  std::vector<double> scores;
  scores.reserve(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    scores.push_back(CosineSimilarity(vectors[i], vectors[items.size() + i]));
  }
  return ReportFromScores(items, scores);
}

HumanAggregate AggregateHumanScores(const HumanRatings& ratings) {
  if (ratings.per_response.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "no human ratings to aggregate");
  }
  const std::size_t evaluators = ratings.per_response.begin()->second.size();
  HumanAggregate out;
  double total = 0.0;
  for (const auto& [response_id, scores] : ratings.per_response) {
    if (scores.empty() || scores.size() != evaluators) {
      throw Error(ErrorCode::kInvalidArgument,
                  "response '" + response_id + "' has " + std::to_string(scores.size()) +
                      " ratings, expected " + std::to_string(evaluators));
    }
    long sum = 0;
    for (int s : scores) {
      if (s < 1 || s > 5) {
        throw Error(ErrorCode::kInvalidArgument, "rating " + std::to_string(s) + " for response '" +
                                                     response_id + "' is outside 1..5");
      }
      sum += s;
    }
    const double mean = static_cast<double>(sum) / static_cast<double>(scores.size());
    out.per_response_mean[response_id] = mean;
    total += mean;
  }
  out.overall = total / static_cast<double>(ratings.per_response.size());
  return out;
}

ComparisonTable ComparePipelines(const EvalReport& vanilla, const EvalReport& advanced) {
  std::set<std::string> a;
  std::set<std::string> b;
  for (const auto& s : vanilla.per_item) a.insert(s.id);
  for (const auto& s : advanced.per_item) b.insert(s.id);
  if (a != b) throw Error(ErrorCode::kInvalidArgument, "reports cover different item ids");

  ComparisonTable table;
  table.vanilla_overall = {vanilla.mean, vanilla.std};
  table.advanced_overall = {advanced.mean, advanced.std};
  table.overall_delta = advanced.mean - vanilla.mean;
  for (QaDomain d : kAllDomains) {
    const auto v = vanilla.domain_means.find(d);
    const auto w = advanced.domain_means.find(d);
    if (v == vanilla.domain_means.end() || w == advanced.domain_means.end()) continue;
    table.domains.push_back({std::string(ToString(d)), v->second, w->second, w->second - v->second});
  }
  return table;
}

std::string FormatMeanStd(double mean, double std) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f ± %.3f", mean, std);
  return buf;
}

std::string FormatDelta(double delta) {
  char buf[32];
  // Keep "+0.00" rather than "-0.00" for deltas that round to zero.
  if (std::fabs(delta) < 0.005) delta = 0.0;
  std::snprintf(buf, sizeof buf, "%+.2f", delta);
  return buf;
}

namespace {

std::string Fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string RenderGrid(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width;
  for (const auto& row : rows) {
    width.resize(std::max(width.size(), row.size()), 0);
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], utf8::Length(row[c]));
  }
  std::string out;
  for (const auto& row : rows) {
    std::string line;
    for (std::size_t c = 0; c < row.size(); ++c) {
      line += row[c];
      if (c + 1 < row.size()) line.append(width[c] - utf8::Length(row[c]) + 2, ' ');
    }
    out += line + '\n';
  }
  return out;
}

}  // namespace

std::string ComparisonTable::Render() const {
  std::vector<std::vector<std::string>> rows(4);
  rows[0] = {"Method", "Cosine μ ± σ"};
  rows[1] = {"Vanilla RAG", FormatMeanStd(vanilla_overall.mean, vanilla_overall.std)};
  rows[2] = {"Advanced RAG", FormatMeanStd(advanced_overall.mean, advanced_overall.std)};
  rows[3] = {"Delta", FormatDelta(overall_delta)};
  for (const auto& d : domains) {
    rows[0].emplace_back(DomainHeading(ParseQaDomain(d.label)));
    rows[1].push_back(Fixed2(d.vanilla));
    rows[2].push_back(Fixed2(d.advanced));
    rows[3].push_back(FormatDelta(d.delta));
  }
  return RenderGrid(rows);
}

std::string RenderReportTable(const std::vector<std::pair<std::string, EvalReport>>& reports) {
  std::set<QaDomain> present;
  for (const auto& [_, r] : reports) {
    for (const auto& [d, __] : r.domain_means) present.insert(d);
  }
  std::vector<std::vector<std::string>> rows;
  rows.push_back({"Method", "n", "Cosine μ ± σ"});
  for (QaDomain d : kAllDomains) {
    if (present.contains(d)) rows[0].emplace_back(DomainHeading(d));
  }
  for (const auto& [name, r] : reports) {
    std::vector<std::string> row{name, std::to_string(r.n_items), FormatMeanStd(r.mean, r.std)};
    for (QaDomain d : kAllDomains) {
      if (!present.contains(d)) continue;
      const auto it = r.domain_means.find(d);
      row.push_back(it == r.domain_means.end() ? "-" : Fixed2(it->second));
    }
    rows.push_back(std::move(row));
  }
  return RenderGrid(rows);
}

json ToJson(const EvalReport& report) {
  json per_item = json::array();
  for (const auto& s : report.per_item) per_item.push_back({{"id", s.id}, {"score", s.score}});
  json domains = json::object();
  for (const auto& [d, mean] : report.domain_means) {
    domains[std::string(ToString(d))] = {{"mean", mean}, {"count", report.domain_counts.at(d)}};
  }
  return {{"per_item", std::move(per_item)},
          {"mean", report.mean},
          {"std", report.std},
          {"domain_means", std::move(domains)},
          {"n_items", report.n_items},
          {"rendered", FormatMeanStd(report.mean, report.std)}};
}

json ToJson(const ComparisonTable& table) {
  json domains = json::array();
  for (const auto& d : table.domains) {
    domains.push_back({{"domain", d.label},
                       {"vanilla", d.vanilla},
                       {"advanced", d.advanced},
                       {"delta", d.delta}});
  }
  return {{"vanilla", {{"mean", table.vanilla_overall.mean}, {"std", table.vanilla_overall.std}}},
          {"advanced", {{"mean", table.advanced_overall.mean}, {"std", table.advanced_overall.std}}},
          {"overall_delta", table.overall_delta},
          {"domains", std::move(domains)}};
}

void WriteAnswers(const fs::path& path, const std::vector<AnswerRecord>& records) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  for (const auto& r : records) {
    out << json{{"id", r.id}, {"answer", r.answer}, {"pipeline", r.pipeline},
                {"trace_digest", r.trace_digest}}
               .dump()
        << '\n';
  }
}

std::vector<AnswerRecord> LoadAnswers(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kNotFound, "answers file " + path.string() + " not found");
  std::vector<AnswerRecord> out;
  std::string line;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    if (line.empty()) continue;
    try {
      const json rec = json::parse(line);
      out.push_back({rec.at("id").get<std::string>(), rec.at("answer").get<std::string>(),
                     rec.at("pipeline").get<std::string>(), rec.at("trace_digest").get<std::string>()});
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kParse, path.string() + " line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace lexirag
