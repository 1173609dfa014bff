/**********************************************************************
 * File:        review_service.hpp
 * Description: Curation operations over a dataset registry: listing,
 *              ground-truth patches with optimistic concurrency,
 *              per-sample reprocessing and engine runs with alignment.
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

#include <condition_variable>
#include <deque>
#include <functional>
#include <future>
#include <map>
#include <mutex>
#include <optional>
#include <semaphore>
#include <shared_mutex>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "ocrwb/dataset.hpp"
#include "ocrwb/external_engine.hpp"
#include "ocrwb/metrics.hpp"
#include "ocrwb/png_io.hpp"

namespace ocrwb::service {

namespace fs = std::filesystem;
using dataset::Sample;
using dataset::Split;
using dataset::Status;

/// Charset rejection that carries the offending positions.
class ValidationFailure : public Error {
 public:
  explicit ValidationFailure(std::vector<textnorm::Violation> v)
      : Error(ErrorCode::ValidationFailed, std::to_string(v.size()) + " charset violation(s)"),
        violations_(std::move(v)) {}
  const std::vector<textnorm::Violation>& violations() const noexcept { return violations_; }

 private:
  std::vector<textnorm::Violation> violations_;
};

struct PatchRequest {
  std::optional<std::string> ground_truth;
  std::optional<Status> status;
  std::uint64_t expected_revision = 0;
  bool force = false;  // store text even with charset violations
};

inline PatchRequest patch_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::BadParams, "body must be a JSON object");
  if (!j.contains("expected_revision") || !j["expected_revision"].is_number_integer() ||
      j["expected_revision"].get<std::int64_t>() < 0) {
    throw Error(ErrorCode::BadParams, "expected_revision (non-negative integer) is required");
  }
  PatchRequest r;
  r.expected_revision = j["expected_revision"].get<std::uint64_t>();
  if (j.contains("ground_truth")) {
    if (!j["ground_truth"].is_string()) throw Error(ErrorCode::BadParams, "ground_truth must be a string");
    r.ground_truth = j["ground_truth"].get<std::string>();
  }
  if (j.contains("status")) {
    const auto s = j["status"].is_string() ? dataset::parse_status(j["status"].get<std::string>())
                                           : std::nullopt;
    if (!s) throw Error(ErrorCode::BadParams, "status must be raw, clean or rejected");
    r.status = *s;
  }
  if (j.contains("force")) {
    if (!j["force"].is_boolean()) throw Error(ErrorCode::BadParams, "force must be a boolean");
    r.force = j["force"].get<bool>();
  }
  if (!r.ground_truth && !r.status) throw Error(ErrorCode::BadParams, "nothing to change");
  return r;
}

inline constexpr int kMaxBlurK = 64;

struct ReprocessRequest {
  std::optional<int> blur_k;
  std::optional<int> threshold;
  std::optional<bool> invert;

  imaging::PreprocessParams params() const {
    imaging::PreprocessParams p;
    if (blur_k) p.blur_k = *blur_k;
    if (threshold) p.threshold = *threshold;
    if (invert) p.invert = *invert;
    if (p.blur_k < 1 || p.blur_k > kMaxBlurK) {
      throw Error(ErrorCode::BadParams, "blur_k must lie in 1.." + std::to_string(kMaxBlurK));
    }
    if (p.threshold < 0 || p.threshold > 255) throw Error(ErrorCode::BadParams, "threshold must lie in 0..255");
    return p;
  }
};

inline ReprocessRequest reprocess_from_json(const nlohmann::json& j) {
  ReprocessRequest r;
  if (j.is_null()) return r;
  if (!j.is_object()) throw Error(ErrorCode::BadParams, "body must be a JSON object");
  auto integer = [&](const char* key, std::optional<int>& out) {
    if (!j.contains(key)) return;
    if (!j[key].is_number_integer()) throw Error(ErrorCode::BadParams, std::string(key) + " must be an integer");
    out = j[key].get<int>();
  };
  integer("blur_k", r.blur_k);
  integer("threshold", r.threshold);
  if (j.contains("invert")) {
    if (!j["invert"].is_boolean()) throw Error(ErrorCode::BadParams, "invert must be a boolean");
    r.invert = j["invert"].get<bool>();
  }
  r.params();
  return r;
}

struct SampleFilter {
  std::optional<Split> split;
  std::optional<Status> status;
  std::optional<int> author;

  bool matches(const Sample& s) const {
    return (!split || s.split == *split) && (!status || s.status == *status) &&
           (!author || s.author == *author);
  }
};

struct SamplePage {
  std::vector<Sample> items;
  std::size_t page = 1;  // 1-based
  std::size_t page_count = 0;
  std::size_t total = 0;
  std::size_t page_size = 0;
};

struct ReprocessResult {
  Sample sample;
  int width = 0;
  int height = 0;
  bool low_contrast = false;
};

struct RecognizeResult {
  std::string engine;
  std::string hypothesis;
  std::string reference;
  metrics::Alignment alignment;
  double cer = 0;
};

inline nlohmann::json sample_view(const Sample& s) {
  nlohmann::json j{{"id", s.id},
                   {"batch", std::string(1, s.batch)},
                   {"author", s.author},
                   {"seq", s.seq},
                   {"ground_truth", s.gt},
                   {"status", std::string(dataset::to_string(s.status))},
                   {"split", std::string(dataset::to_string(s.split))},
                   {"revision", s.revision},
                   {"image_url", "/samples/" + s.id + "/image?stage=raw"},
                   {"processed_url", nullptr}};
  if (!s.processed.empty()) j["processed_url"] = "/samples/" + s.id + "/image?stage=processed";
  return j;
}

inline nlohmann::json to_json(const RecognizeResult& r) {
  nlohmann::json ops = nlohmann::json::array();
  for (const auto& op : r.alignment.ops) {
    ops.push_back({{"op", std::string(metrics::to_string(op.op))}, {"ref", op.ref_pos}, {"hyp", op.hyp_pos}});
  }
  return {{"engine", r.engine},
          {"hypothesis", r.hypothesis},
          {"reference", r.reference},
          {"ops", std::move(ops)},
          {"S", r.alignment.substitutions},
          {"D", r.alignment.deletions},
          {"I", r.alignment.insertions},
          {"N", r.alignment.ref_length},
          {"cer", r.cer}};
}

/// One worker thread running submitted tasks in order.
class SerialExecutor {
 public:
  SerialExecutor() : worker_([this](std::stop_token st) { run(st); }) {}
  ~SerialExecutor() {
    worker_.request_stop();
    cv_.notify_all();
  }
  SerialExecutor(const SerialExecutor&) = delete;
  SerialExecutor& operator=(const SerialExecutor&) = delete;

  template <typename F>
  auto submit(F f) -> std::future<decltype(f())> {
    auto task = std::make_shared<std::packaged_task<decltype(f())()>>(std::move(f));
    auto fut = task->get_future();
    {
      std::lock_guard lk(mu_);
      queue_.emplace_back([task] { (*task)(); });
    }
    cv_.notify_one();
    return fut;
  }

 private:
  void run(std::stop_token st) {
    for (;;) {
      std::function<void()> job;
      {
        std::unique_lock lk(mu_);
        cv_.wait(lk, [&] { return st.stop_requested() || !queue_.empty(); });
        if (queue_.empty()) return;
        job = std::move(queue_.front());
        queue_.pop_front();
      }
      job();
    }
  }

  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::function<void()>> queue_;
  std::jthread worker_;  // last: joins before the queue is destroyed
};

struct ServiceOptions {
  textnorm::Charset charset = textnorm::Charset::syriac();
  std::size_t page_size = 50;
  unsigned engine_parallelism = 2;
  std::map<std::string, engines::EngineHandle> engines;  // "reference" is added if absent
};

inline constexpr std::string_view kEnginesFile = "engines.json";
inline constexpr std::string_view kReportsDir = "reports";

/// Reads `{"engines":[{"name","command","timeout"}]}` from the registry
/// root; a missing file means no external engines.
inline std::map<std::string, engines::EngineHandle> load_engines(const fs::path& root) {
  std::map<std::string, engines::EngineHandle> out;
  const fs::path file = root / std::string(kEnginesFile);
  if (!fs::exists(file)) return out;
  const auto j = nlohmann::json::parse(dataset::read_file(file));
  for (const auto& e : j.at("engines")) {
    auto h = engines::EngineHandle::external(e.at("name").get<std::string>(), e.at("command").get<std::string>(),
                                             e.value("timeout", 60.0));
    out.emplace(h.name, std::move(h));
  }
  return out;
}

/// Reads run concurrently; every mutation goes through one serial writer,
/// is persisted (ground-truth file, then manifest) and only then published.
class ReviewService {
 public:
  explicit ReviewService(dataset::Registry reg, ServiceOptions opt = {})
      : reg_(std::move(reg)), opt_(std::move(opt)), engine_slots_(std::max(1u, opt_.engine_parallelism)) {
    if (opt_.page_size == 0) throw Error(ErrorCode::InvalidArgument, "page size must be positive");
    if (!opt_.engines.count("reference")) {
      auto model = std::make_shared<const engines::ReferenceModel>(
          engines::train_from_atlas(synth::default_atlas()));
      opt_.engines.emplace("reference", engines::EngineHandle::reference("reference", std::move(model)));
    }
  }

  static std::unique_ptr<ReviewService> open(const fs::path& root, ServiceOptions opt = {}) {
    for (auto& [name, h] : load_engines(root)) opt.engines.insert_or_assign(name, std::move(h));
    return std::make_unique<ReviewService>(dataset::load(root), std::move(opt));
  }

  const fs::path& root() const { return reg_.root; }
  std::size_t page_size() const { return opt_.page_size; }

  std::vector<std::string> engine_names() const {
    std::vector<std::string> out;
    for (const auto& [name, _] : opt_.engines) out.push_back(name);
    return out;
  }

  /// Pages are 1-based; a page past the end is empty.
  SamplePage list_samples(const SampleFilter& filter, std::size_t page = 1) const {
    if (page == 0) throw Error(ErrorCode::BadParams, "page numbers start at 1");
    std::shared_lock lk(mu_);
    std::vector<const Sample*> hits;
    for (const auto& [id, s] : reg_.samples) {
      if (filter.matches(s)) hits.push_back(&s);
    }
    SamplePage out;
    out.page = page;
    out.page_size = opt_.page_size;
    out.total = hits.size();
    out.page_count = (hits.size() + opt_.page_size - 1) / opt_.page_size;
    for (std::size_t i = (page - 1) * opt_.page_size; i < hits.size() && i < page * opt_.page_size; ++i) {
      out.items.push_back(*hits[i]);
    }
    return out;
  }

  Sample get_sample(const std::string& id) const {
    std::shared_lock lk(mu_);
    return require(id);
  }

  /// PNG bytes of the raw scan or of the processed stage.
  std::string image_bytes(const std::string& id, std::string_view stage) const {
    fs::path path;
    {
      std::shared_lock lk(mu_);
      const Sample& s = require(id);
      if (stage == "raw") {
        path = reg_.image_path(s);
      } else if (stage == "processed") {
        if (s.processed.empty()) throw Error(ErrorCode::NotFound, id + " has no processed stage");
        path = reg_.root / s.processed;
      } else {
        throw Error(ErrorCode::BadParams, "stage must be raw or processed");
      }
    }
    if (!fs::exists(path)) throw Error(ErrorCode::NotFound, path.string());
    return dataset::read_file(path);
  }

  Sample patch_sample(const std::string& id, const PatchRequest& req) {
    return writer_.submit([&] { return do_patch(id, req); }).get();
  }

  ReprocessResult reprocess_sample(const std::string& id, const ReprocessRequest& req) {
    const imaging::PreprocessParams params = req.params();
    return writer_.submit([&] { return do_reprocess(id, params); }).get();
  }

  /// Runs the named engine on the processed stage (raw scan when there is
  /// none) and aligns its output against the current ground truth.
  RecognizeResult recognize_sample(const std::string& id, const std::string& engine) const {
    auto it = opt_.engines.find(engine);
    if (it == opt_.engines.end()) throw Error(ErrorCode::NotFound, "engine " + engine);
    Sample s;
    fs::path image;
    {
      std::shared_lock lk(mu_);
      s = require(id);
      image = s.processed.empty() ? reg_.image_path(s) : reg_.root / s.processed;
    }
    if (s.gt.empty()) throw Error(ErrorCode::EmptyReference, id + " has no ground truth");
    std::string hyp;
    {
      engine_slots_.acquire();
      struct Release {
        std::counting_semaphore<>& sem;
        ~Release() { sem.release(); }
      } release{engine_slots_};
      try {
        hyp = engines::recognize_file(it->second, image);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::EmptyLine) throw;
      }
    }
    RecognizeResult r;
    r.engine = engine;
    r.hypothesis = hyp;
    r.reference = s.gt;
    r.alignment = metrics::align_chars(s.gt, hyp);
    r.cer = metrics::EditCounts::from(r.alignment).rate();
    return r;
  }

  /// Contents of reports/<run>.json.
  nlohmann::json report(const std::string& run) const {
    const bool safe = !run.empty() && run.find_first_not_of(
        "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789_-.") == std::string::npos &&
        run.find("..") == std::string::npos;
    if (!safe) throw Error(ErrorCode::NotFound, "report " + run);
    const fs::path file = reg_.root / std::string(kReportsDir) / (run + ".json");
    if (!fs::exists(file)) throw Error(ErrorCode::NotFound, "report " + run);
    return nlohmann::json::parse(dataset::read_file(file));
  }

 private:
  const Sample& require(const std::string& id) const {
    const Sample* s = reg_.find(id);
    if (!s) throw Error(ErrorCode::NotFound, "sample " + id);
    return *s;
  }

  // Writer thread only from here on; readers never see half-applied state.
  void commit(const Sample& next) {
    dataset::Registry staged;
    staged.root = reg_.root;
    {
      std::shared_lock lk(mu_);
      staged.samples = reg_.samples;
    }
    staged.samples.at(next.id) = next;
    dataset::save_manifest(staged);
    std::unique_lock lk(mu_);
    reg_.samples.at(next.id) = next;
  }

  Sample do_patch(const std::string& id, const PatchRequest& req) {
    Sample next;
    {
      std::shared_lock lk(mu_);
      next = require(id);
    }
    if (req.expected_revision != next.revision) {
      throw Error(ErrorCode::RevisionConflict, id + " is at revision " + std::to_string(next.revision) +
                                                   ", request expected " +
                                                   std::to_string(req.expected_revision));
    }
    if (req.ground_truth) {
      textnorm::GroundTruth gt = [&] {
        try {
          return textnorm::normalize_text(*req.ground_truth);
        } catch (const Error& e) {
          throw Error(ErrorCode::ValidationFailed, e.what());
        }
      }();
      auto violations = textnorm::validate_charset(gt, opt_.charset);
      if (!violations.empty() && !req.force) throw ValidationFailure(std::move(violations));
      next.gt = gt.text();
    }
    if (req.status) next.status = *req.status;
    if (next.status == Status::Clean && next.gt.empty()) {
      throw Error(ErrorCode::ValidationFailed, "a clean sample needs ground truth");
    }
    ++next.revision;
    if (req.ground_truth) dataset::write_ground_truth_file(reg_.gt_path(next), next.gt);
    commit(next);
    return next;
  }

  ReprocessResult do_reprocess(const std::string& id, const imaging::PreprocessParams& params) {
    Sample next;
    {
      std::shared_lock lk(mu_);
      next = require(id);
    }
    const fs::path raw = reg_.image_path(next);
    if (!fs::exists(raw)) throw Error(ErrorCode::NotFound, raw.string());
    const imaging::PreprocessResult pre = imaging::preprocess(png::read(raw), params);
    const fs::path out = reg_.processed_path(next);
    fs::create_directories(out.parent_path());
    const std::vector<std::uint8_t> bytes = png::encode(pre.image);
    dataset::write_file_atomic(out, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
    next.processed = fs::relative(out, reg_.root).generic_string();
    ++next.revision;
    commit(next);
    return {next, pre.image.width(), pre.image.height(), pre.low_contrast};
  }

  dataset::Registry reg_;
  ServiceOptions opt_;
  mutable std::shared_mutex mu_;
  mutable std::counting_semaphore<> engine_slots_;
  SerialExecutor writer_;  // last: drained before the registry goes away
};

}  // namespace ocrwb::service
