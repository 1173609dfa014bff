/**********************************************************************
 * File:        dataset.hpp
 * Description: Sample registry: ingest of <id>.png / <id>.gt.txt pairs,
 *              the manifest.jsonl store, seeded train/eval splits, corpus
 *              statistics and export to the trainer's ground-truth layout.
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

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ocrwb/engine_config.hpp"
#include "ocrwb/rng.hpp"
#include "ocrwb/textnorm.hpp"

namespace ocrwb::dataset {

namespace fs = std::filesystem;

inline constexpr std::string_view kManifestName = "manifest.jsonl";
inline constexpr std::string_view kGtExtension = ".gt.txt";
inline constexpr std::string_view kProcessedDir = "processed";

enum class Status { Raw, Clean, Rejected };
enum class Split { Unassigned, Train, Eval, Test };

inline std::string_view to_string(Status s) {
  switch (s) {
    case Status::Raw: return "raw";
    case Status::Clean: return "clean";
    case Status::Rejected: return "rejected";
  }
  return "raw";
}

inline std::string_view to_string(Split s) {
  switch (s) {
    case Split::Unassigned: return "unassigned";
    case Split::Train: return "train";
    case Split::Eval: return "eval";
    case Split::Test: return "test";
  }
  return "unassigned";
}

inline std::optional<Status> parse_status(std::string_view s) {
  if (s == "raw") return Status::Raw;
  if (s == "clean") return Status::Clean;
  if (s == "rejected") return Status::Rejected;
  return std::nullopt;
}

inline std::optional<Split> parse_split(std::string_view s) {
  if (s == "unassigned") return Split::Unassigned;
  if (s == "train") return Split::Train;
  if (s == "eval") return Split::Eval;
  if (s == "test") return Split::Test;
  return std::nullopt;
}

/// "<batch><author>_<seq>" with fixed digit counts, e.g. a01_07.
struct IdPattern {
  std::string batches = "ab";
  int author_digits = 2;
  int seq_digits = 2;
};

struct ParsedId {
  char batch = 'a';
  int author = 0;
  int seq = 0;
};

inline std::optional<ParsedId> parse_id(std::string_view id, const IdPattern& p = {}) {
  const std::size_t expect = 1 + static_cast<std::size_t>(p.author_digits) + 1 + p.seq_digits;
  if (id.size() != expect || p.batches.find(id[0]) == std::string::npos) return std::nullopt;
  if (id[1 + p.author_digits] != '_') return std::nullopt;
  auto digits = [&](std::size_t from, int count, int& out) {
    out = 0;
    for (int i = 0; i < count; ++i) {
      const char c = id[from + i];
      if (c < '0' || c > '9') return false;
      out = out * 10 + (c - '0');
    }
    return true;
  };
  ParsedId r;
  r.batch = id[0];
  if (!digits(1, p.author_digits, r.author) || !digits(2 + p.author_digits, p.seq_digits, r.seq)) {
    return std::nullopt;
  }
  return r;
}

inline std::string format_id(char batch, int author, int seq, const IdPattern& p = {}) {
  std::ostringstream os;
  os << batch << std::setw(p.author_digits) << std::setfill('0') << author << '_'
     << std::setw(p.seq_digits) << std::setfill('0') << seq;
  return os.str();
}

struct Sample {
  std::string id;
  char batch = 'a';
  int author = 0;
  int seq = 0;
  std::string image;      // path relative to the registry root
  std::string gt;         // normalized ground truth, empty if none yet
  std::string processed;  // relative path of the processed stage, empty if none
  Status status = Status::Raw;
  std::uint64_t revision = 1;
  Split split = Split::Unassigned;

  bool operator==(const Sample&) const = default;
};

/// Samples keyed (and therefore ordered) by id, rooted at a directory.
struct Registry {
  fs::path root;
  std::map<std::string, Sample> samples;

  const Sample* find(const std::string& id) const {
    auto it = samples.find(id);
    return it == samples.end() ? nullptr : &it->second;
  }
  Sample* find(const std::string& id) {
    auto it = samples.find(id);
    return it == samples.end() ? nullptr : &it->second;
  }
  fs::path image_path(const Sample& s) const { return root / s.image; }
  fs::path gt_path(const Sample& s) const { return root / (s.id + std::string(kGtExtension)); }
  fs::path processed_path(const Sample& s) const {
    return root / std::string(kProcessedDir) / (s.id + ".png");
  }
};

inline nlohmann::json to_json(const Sample& s) {
  nlohmann::json j{{"id", s.id},
                   {"batch", std::string(1, s.batch)},
                   {"author", s.author},
                   {"seq", s.seq},
                   {"image", s.image},
                   {"gt", s.gt},
                   {"status", std::string(to_string(s.status))},
                   {"revision", s.revision},
                   {"split", std::string(to_string(s.split))}};
  if (!s.processed.empty()) j["processed"] = s.processed;
  return j;
}

inline Sample sample_from_json(const nlohmann::json& j) {
  Sample s;
  s.id = j.at("id").get<std::string>();
  const std::string batch = j.at("batch").get<std::string>();
  if (batch.size() != 1) throw Error(ErrorCode::BadName, s.id);
  s.batch = batch[0];
  s.author = j.at("author").get<int>();
  s.seq = j.at("seq").get<int>();
  s.image = j.at("image").get<std::string>();
  s.gt = j.at("gt").get<std::string>();
  s.processed = j.value("processed", std::string());
  const auto status = parse_status(j.at("status").get<std::string>());
  const auto split = parse_split(j.at("split").get<std::string>());
  if (!status || !split) throw Error(ErrorCode::InvalidArgument, "bad status/split for " + s.id);
  s.status = *status;
  s.split = *split;
  s.revision = j.at("revision").get<std::uint64_t>();
  return s;
}

inline std::string read_file(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw Error(ErrorCode::IoFailure, "cannot read " + p.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

/// Writes to a sibling temp file and renames over the target.
inline void write_file_atomic(const fs::path& p, std::string_view content) {
  fs::path tmp = p;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorCode::IoFailure, "cannot write " + tmp.string());
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f) throw Error(ErrorCode::IoFailure, "short write to " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, p, ec);
  if (ec) throw Error(ErrorCode::IoFailure, "rename to " + p.string() + ": " + ec.message());
}

/// First line of a .gt.txt file (LF or CRLF terminated, or unterminated).
inline std::string read_ground_truth_file(const fs::path& p) {
  std::string text = read_file(p);
  const auto nl = text.find('\n');
  if (nl != std::string::npos) text.resize(nl);
  if (!text.empty() && text.back() == '\r') text.pop_back();
  return text;
}

inline void write_ground_truth_file(const fs::path& p, std::string_view text) {
  std::string content(text);
  content.push_back('\n');
  write_file_atomic(p, content);
}

inline std::string manifest_text(const Registry& reg) {
  std::string out;
  for (const auto& [id, s] : reg.samples) out += to_json(s).dump() + "\n";
  return out;
}

inline void save_manifest(const Registry& reg) {
  write_file_atomic(reg.root / std::string(kManifestName), manifest_text(reg));
}

inline std::map<std::string, Sample> read_manifest(const fs::path& file) {
  std::map<std::string, Sample> out;
  std::istringstream in(read_file(file));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    Sample s = sample_from_json(nlohmann::json::parse(line));
    out.emplace(s.id, std::move(s));
  }
  return out;
}

struct IngestOptions {
  IdPattern pattern{};
};

/// Pairs every <id>.png with <id>.gt.txt in `dir` (non-recursive). Ground
/// truth is normalized; a pair whose text normalizes to nothing is kept as
/// status raw with empty ground truth, the rest start clean. When the
/// directory already has a manifest, status/revision/split/processed of
/// known ids are carried over.
inline Registry ingest(const fs::path& dir, const IngestOptions& opt = {}) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::IoFailure, "not a directory: " + dir.string());
  std::set<std::string> images, truths;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (name.size() > kGtExtension.size() && name.ends_with(kGtExtension)) {
      truths.insert(name.substr(0, name.size() - kGtExtension.size()));
    } else if (name.size() > 4 && name.ends_with(".png")) {
      images.insert(name.substr(0, name.size() - 4));
    }
  }

  std::vector<std::pair<ErrorCode, std::string>> problems;
  std::set<std::string> all = images;
  all.insert(truths.begin(), truths.end());
  for (const auto& id : all) {
    if (!parse_id(id, opt.pattern)) {
      problems.emplace_back(ErrorCode::BadName, id);
    } else if (!truths.count(id)) {
      problems.emplace_back(ErrorCode::OrphanImage, id);
    } else if (!images.count(id)) {
      problems.emplace_back(ErrorCode::OrphanTruth, id);
    }
  }
  if (!problems.empty()) {
    std::string detail;
    for (const auto& [code, id] : problems) {
      if (code != problems.front().first) continue;
      detail += (detail.empty() ? "" : ", ") + id;
    }
    throw Error(problems.front().first, detail);
  }

  std::map<std::string, Sample> previous;
  const fs::path manifest = dir / std::string(kManifestName);
  if (fs::exists(manifest)) previous = read_manifest(manifest);

  Registry reg;
  reg.root = dir;
  for (const auto& id : images) {
    const ParsedId pid = *parse_id(id, opt.pattern);
    Sample s;
    s.id = id;
    s.batch = pid.batch;
    s.author = pid.author;
    s.seq = pid.seq;
    s.image = id + ".png";
    try {
      s.gt = textnorm::normalize_text(read_ground_truth_file(dir / (id + std::string(kGtExtension)))).text();
      s.status = Status::Clean;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::EmptyAfterNormalization) throw;
      s.gt.clear();
      s.status = Status::Raw;
    }
    if (auto it = previous.find(id); it != previous.end()) {
      s.status = it->second.status;
      s.revision = it->second.revision;
      s.split = it->second.split;
      s.processed = it->second.processed;
      if (s.status == Status::Clean && s.gt.empty()) s.status = Status::Raw;
    }
    reg.samples.emplace(id, std::move(s));
  }
  return reg;
}

/// Reads the manifest if there is one, otherwise ingests the directory.
inline Registry load(const fs::path& root, const IngestOptions& opt = {}) {
  const fs::path manifest = root / std::string(kManifestName);
  if (!fs::exists(manifest)) return ingest(root, opt);
  Registry reg;
  reg.root = root;
  reg.samples = read_manifest(manifest);
  return reg;
}

struct SplitSpec {
  double ratio_train = 0.9;
  std::uint64_t seed = 0;
  bool by_author = false;  // keep each writer's lines on one side

  void validate() const {
    if (!(ratio_train > 0 && ratio_train < 1)) {
      throw Error(ErrorCode::InvalidArgument, "ratio_train must lie in (0, 1)");
    }
  }
};

using Assignment = std::map<std::string, Split>;

/// floor(n * ratio); the epsilon keeps products such as 100 * 0.29 from
/// landing one below the intended integer.
inline std::size_t train_count(std::size_t n, double ratio) {
  return static_cast<std::size_t>(std::floor(static_cast<double>(n) * ratio + 1e-9));
}

/// Clean samples only. Ids are sorted, permuted by a splitmix64-driven
/// Fisher-Yates shuffle, and the first floor(N * ratio) go to train.
/// With by_author, whole writers are shuffled instead and taken in order
/// until the train quota is reached, so sizes are only approximate.
inline Assignment split(const Registry& reg, const SplitSpec& spec) {
  spec.validate();
  std::vector<std::string> ids;
  for (const auto& [id, s] : reg.samples) {
    if (s.status == Status::Clean) ids.push_back(id);
  }
  if (ids.empty()) throw Error(ErrorCode::EmptyRegistry, "no clean samples to split");
  SplitMix64 rng(spec.seed);
  const std::size_t quota = train_count(ids.size(), spec.ratio_train);
  Assignment out;
  if (!spec.by_author) {
    shuffle(ids, rng);
    for (std::size_t i = 0; i < ids.size(); ++i) out[ids[i]] = i < quota ? Split::Train : Split::Eval;
    return out;
  }
  std::map<int, std::vector<std::string>> by_author;
  for (const auto& id : ids) by_author[reg.samples.at(id).author].push_back(id);
  std::vector<int> authors;
  for (const auto& [a, _] : by_author) authors.push_back(a);
  shuffle(authors, rng);
  std::size_t taken = 0;
  for (int a : authors) {
    const Split side = taken < quota ? Split::Train : Split::Eval;
    for (const auto& id : by_author[a]) out[id] = side;
    if (side == Split::Train) taken += by_author[a].size();
  }
  return out;
}

/// Stores the assignment on the samples; samples outside it become
/// unassigned (test-split samples are left alone). Revisions move only for
/// samples whose split actually changed.
inline void apply_assignment(Registry& reg, const Assignment& a) {
  for (auto& [id, s] : reg.samples) {
    if (s.split == Split::Test) continue;
    auto it = a.find(id);
    const Split next = it == a.end() ? Split::Unassigned : it->second;
    if (next != s.split) {
      s.split = next;
      ++s.revision;
    }
  }
}

struct VolunteerRecord {
  std::string gender;  // "Female" / "Male"
  int age = 0;
  std::string occupation;
  std::string origin;  // "N/A" when unknown
};

namespace detail {

inline std::vector<std::string> csv_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(std::move(cur));
  return out;
}

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

}  // namespace detail

/// `gender,age,occupation,origin` with a header row.
inline std::vector<VolunteerRecord> parse_volunteers_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::vector<VolunteerRecord> out;
  bool header = true;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    auto f = detail::csv_fields(line);
    for (auto& x : f) x = detail::trim(x);
    if (header) {
      if (f.size() != 4 || f[0] != "gender" || f[1] != "age" || f[2] != "occupation" || f[3] != "origin") {
        throw Error(ErrorCode::InvalidArgument, "volunteers.csv header must be gender,age,occupation,origin");
      }
      header = false;
      continue;
    }
    if (f.size() != 4) throw Error(ErrorCode::InvalidArgument, "line " + std::to_string(lineno) + ": expected 4 fields");
    VolunteerRecord r{f[0], 0, f[2], f[3]};
    try {
      r.age = std::stoi(f[1]);
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidArgument, "line " + std::to_string(lineno) + ": bad age");
    }
    if (r.age <= 0) throw Error(ErrorCode::InvalidArgument, "line " + std::to_string(lineno) + ": age must be > 0");
    out.push_back(std::move(r));
  }
  return out;
}

struct CorpusStats {
  std::size_t sample_count = 0;
  std::size_t author_count = 0;
  std::map<std::string, std::size_t> gender_counts;
  std::optional<double> mean_age;  // one decimal, absent without volunteers
  std::map<std::string, std::size_t> status_counts;
  std::map<std::string, std::size_t> split_counts;
};

inline CorpusStats stats(const Registry& reg, const std::vector<VolunteerRecord>& volunteers) {
  CorpusStats st;
  st.sample_count = reg.samples.size();
  std::set<int> authors;
  for (const auto& [id, s] : reg.samples) {
    authors.insert(s.author);
    ++st.status_counts[std::string(to_string(s.status))];
    ++st.split_counts[std::string(to_string(s.split))];
  }
  st.author_count = authors.size();
  double age_sum = 0;
  for (const auto& v : volunteers) {
    ++st.gender_counts[v.gender];
    age_sum += v.age;
  }
  if (!volunteers.empty()) {
    st.mean_age = std::round(10.0 * age_sum / static_cast<double>(volunteers.size())) / 10.0;
  }
  return st;
}

inline nlohmann::json to_json(const CorpusStats& st) {
  return {{"sample_count", st.sample_count},
          {"author_count", st.author_count},
          {"gender_counts", st.gender_counts},
          {"mean_age", st.mean_age ? nlohmann::json(*st.mean_age) : nlohmann::json(nullptr)},
          {"status_counts", st.status_counts},
          {"split_counts", st.split_counts}};
}

struct ExportResult {
  fs::path ground_truth_dir;
  fs::path config_file;
  std::vector<std::string> train_ids;
  std::vector<std::string> eval_ids;
};

struct ExportOptions {
  bool prefer_processed = true;  // copy the processed stage when it exists
};

/// Writes, under `out`:
///   <name>-ground-truth/<id>.png + <id>.gt.txt   (clean samples)
///   <name>-ground-truth/manifest.jsonl           (exported samples)
///   training.conf                                (KEY VALUE lines)
///   list.train, list.eval                        (one id per line, sorted)
inline ExportResult export_training_layout(const Registry& reg, const Assignment& assignment,
                                           const engines::EngineConfig& cfg, const fs::path& out,
                                           const ExportOptions& opt = {}) {
  cfg.validate();
  ExportResult res;
  std::vector<const Sample*> chosen;
  std::string unassigned;
  for (const auto& [id, s] : reg.samples) {
    if (s.status != Status::Clean) continue;
    auto it = assignment.find(id);
    if (it == assignment.end() || (it->second != Split::Train && it->second != Split::Eval)) {
      unassigned += (unassigned.empty() ? "" : ", ") + id;
      continue;
    }
    chosen.push_back(&s);
    (it->second == Split::Train ? res.train_ids : res.eval_ids).push_back(id);
  }
  if (!unassigned.empty()) throw Error(ErrorCode::UnassignedSamples, unassigned);

  std::error_code ec;
  res.ground_truth_dir = out / (cfg.name + "-ground-truth");
  fs::create_directories(res.ground_truth_dir, ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + res.ground_truth_dir.string());

  Registry exported;
  exported.root = res.ground_truth_dir;
  for (const Sample* s : chosen) {
    fs::path src = reg.image_path(*s);
    if (opt.prefer_processed && !s->processed.empty() && fs::exists(reg.root / s->processed)) {
      src = reg.root / s->processed;
    }
    write_file_atomic(res.ground_truth_dir / (s->id + ".png"), read_file(src));
    write_ground_truth_file(res.ground_truth_dir / (s->id + std::string(kGtExtension)), s->gt);
    Sample copy = *s;
    copy.image = s->id + ".png";
    copy.processed.clear();
    copy.split = assignment.at(s->id);
    exported.samples.emplace(copy.id, copy);
  }

  auto list = [](const std::vector<std::string>& ids) {
    std::string t;
    for (const auto& id : ids) t += id + "\n";
    return t;
  };
  res.config_file = out / "training.conf";
  write_file_atomic(res.config_file, engines::to_text(cfg));
  write_file_atomic(out / "list.train", list(res.train_ids));
  write_file_atomic(out / "list.eval", list(res.eval_ids));
  save_manifest(exported);
  return res;
}

}  // namespace ocrwb::dataset
