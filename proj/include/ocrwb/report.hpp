/**********************************************************************
 * File:        report.hpp
 * Description: Per-sample and aggregated CER/WER reports and their
 *              TSV / JSON / table renderings.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 * http://www.apache.org/licenses/LICENSE-2.0
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *
 **********************************************************************/

#pragma once

#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ocrwb/metrics.hpp"

namespace ocrwb::metrics {

struct SampleScore {
  std::string id;
  EditCounts chars;
  std::optional<EditCounts> words;  // absent when only CER was measured
};

struct SampleRates {
  std::string id;
  double cer = 0;
  std::optional<double> wer;
  EditCounts chars;
  std::optional<EditCounts> words;
};

struct EvalReport {
  std::string engine_name;
  std::string dataset_name;
  std::vector<SampleRates> per_sample;
  double macro_cer = 0;
  double micro_cer = 0;
  std::optional<double> macro_wer;
  std::optional<double> micro_wer;
};

inline SampleScore score_sample(std::string id, std::string_view reference,
                                std::string_view hypothesis, const RateOptions& opt = {}) {
  const ErrorRates r = error_rates(reference, hypothesis, opt);
  return SampleScore{std::move(id), r.chars, r.words};
}

/// Macro = mean of per-sample rates, micro = pooled (S+D+I)/N. WER figures
/// are present only when every sample carries word counts.
inline EvalReport aggregate(std::string engine, std::string dataset,
                            const std::vector<SampleScore>& samples) {
  if (samples.empty()) throw Error(ErrorCode::NoSamples, engine + "/" + dataset);
  EvalReport rep;
  rep.engine_name = std::move(engine);
  rep.dataset_name = std::move(dataset);
  bool all_words = true;
  EditCounts pooled_c, pooled_w;
  double sum_cer = 0, sum_wer = 0;
  for (const auto& s : samples) {
    SampleRates r{s.id, s.chars.rate(), std::nullopt, s.chars, s.words};
    sum_cer += r.cer;
    pooled_c.substitutions += s.chars.substitutions;
    pooled_c.deletions += s.chars.deletions;
    pooled_c.insertions += s.chars.insertions;
    pooled_c.ref_length += s.chars.ref_length;
    if (s.words) {
      r.wer = s.words->rate();
      sum_wer += *r.wer;
      pooled_w.substitutions += s.words->substitutions;
      pooled_w.deletions += s.words->deletions;
      pooled_w.insertions += s.words->insertions;
      pooled_w.ref_length += s.words->ref_length;
    } else {
      all_words = false;
    }
    rep.per_sample.push_back(std::move(r));
  }
  const double n = static_cast<double>(samples.size());
  rep.macro_cer = sum_cer / n;
  rep.micro_cer = pooled_c.rate();
  if (all_words) {
    rep.macro_wer = sum_wer / n;
    rep.micro_wer = pooled_w.rate();
  }
  return rep;
}

inline std::string fixed(double v, int precision = 2) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(precision) << v;
  return os.str();
}

enum class Headline { Macro, Micro };

inline double headline_cer(const EvalReport& r, Headline h) {
  return h == Headline::Macro ? r.macro_cer : r.micro_cer;
}
inline std::optional<double> headline_wer(const EvalReport& r, Headline h) {
  return h == Headline::Macro ? r.macro_wer : r.micro_wer;
}

/// `name\tcer\twer` with a header line; one row per report.
inline std::string to_tsv(const std::vector<EvalReport>& reports, Headline h = Headline::Macro,
                          int precision = 2) {
  std::string out = "name\tcer\twer\n";
  for (const auto& r : reports) {
    const auto wer = headline_wer(r, h);
    out += r.engine_name + "\t" + fixed(headline_cer(r, h), precision) + "\t" +
           (wer ? fixed(*wer, precision) : std::string("-")) + "\n";
  }
  return out;
}

/// Per-sample rows of a single report followed by the aggregate rows.
inline std::string samples_tsv(const EvalReport& r, int precision = 2) {
  std::string out = "name\tcer\twer\n";
  for (const auto& s : r.per_sample) {
    out += s.id + "\t" + fixed(s.cer, precision) + "\t" +
           (s.wer ? fixed(*s.wer, precision) : std::string("-")) + "\n";
  }
  out += "macro\t" + fixed(r.macro_cer, precision) + "\t" +
         (r.macro_wer ? fixed(*r.macro_wer, precision) : std::string("-")) + "\n";
  out += "micro\t" + fixed(r.micro_cer, precision) + "\t" +
         (r.micro_wer ? fixed(*r.micro_wer, precision) : std::string("-")) + "\n";
  return out;
}

/// Human-readable rows in the shape "name CER% WER%".
inline std::string render_table(const std::vector<EvalReport>& reports,
                                Headline h = Headline::Macro, int precision = 2) {
  std::string out;
  for (const auto& r : reports) {
    out += r.engine_name + " " + fixed(headline_cer(r, h), precision) + "%";
    if (const auto wer = headline_wer(r, h)) out += " " + fixed(*wer, precision) + "%";
    out += "\n";
  }
  return out;
}

/// One trained model: CER on its training and evaluation partitions.
struct TrainingRow {
  std::string name;
  std::string split_label;  // e.g. "90/10"
  EvalReport train;
  EvalReport eval;
};

inline std::string render_training_table(const std::vector<TrainingRow>& rows,
                                         Headline h = Headline::Macro, int precision = 3) {
  std::string out;
  for (const auto& row : rows) {
    out += row.name + " " + row.split_label + " " + fixed(headline_cer(row.train, h), precision) +
           "% " + fixed(headline_cer(row.eval, h), precision) + "%\n";
  }
  return out;
}

inline nlohmann::json counts_json(const EditCounts& c) {
  return {{"S", c.substitutions}, {"D", c.deletions}, {"I", c.insertions}, {"N", c.ref_length}};
}

inline EditCounts counts_from_json(const nlohmann::json& j) {
  return EditCounts{j.at("S").get<std::size_t>(), j.at("D").get<std::size_t>(),
                    j.at("I").get<std::size_t>(), j.at("N").get<std::size_t>()};
}

inline nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json samples = nlohmann::json::array();
  for (const auto& s : r.per_sample) {
    nlohmann::json j{{"id", s.id}, {"cer", s.cer}, {"chars", counts_json(s.chars)}};
    j["wer"] = s.wer ? nlohmann::json(*s.wer) : nlohmann::json(nullptr);
    if (s.words) j["words"] = counts_json(*s.words);
    samples.push_back(std::move(j));
  }
  auto opt = [](const std::optional<double>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  return {{"engine", r.engine_name},
          {"dataset", r.dataset_name},
          {"samples", std::move(samples)},
          {"macro", {{"cer", r.macro_cer}, {"wer", opt(r.macro_wer)}}},
          {"micro", {{"cer", r.micro_cer}, {"wer", opt(r.micro_wer)}}}};
}

/// Rebuilds a report from stored per-sample counts (the "samples" array of
/// to_json output, or any array of {id, chars, words?}).
inline EvalReport report_from_counts(const nlohmann::json& j) {
  std::vector<SampleScore> scores;
  for (const auto& s : j.at("samples")) {
    SampleScore sc{s.at("id").get<std::string>(), counts_from_json(s.at("chars")), std::nullopt};
    if (s.contains("words")) sc.words = counts_from_json(s.at("words"));
    scores.push_back(std::move(sc));
  }
  return aggregate(j.at("engine").get<std::string>(), j.value("dataset", std::string()), scores);
}

}  // namespace ocrwb::metrics
