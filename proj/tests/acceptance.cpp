/**********************************************************************
 * File:        acceptance.cpp
 * Description: Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any failure.
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

#include <algorithm>
#include <barrier>
#include <chrono>
#include <functional>
#include <iostream>
#include <map>
#include <thread>

#include "ocrwb/ocrwb.hpp"
#include "ocrwb/review_http.hpp"
#include "test_util.hpp"

using namespace ocrwb;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Recursion over prefixes, memoized per pair.
std::size_t brute_edit_distance(const std::u32string& a, std::size_t i, const std::u32string& b, std::size_t j,
                                std::map<std::pair<std::size_t, std::size_t>, std::size_t>& memo) {
  if (i == 0) return j;
  if (j == 0) return i;
  if (auto it = memo.find({i, j}); it != memo.end()) return it->second;
  const std::size_t r = std::min({brute_edit_distance(a, i - 1, b, j - 1, memo) + (a[i - 1] != b[j - 1]),
                                  brute_edit_distance(a, i - 1, b, j, memo) + 1,
                                  brute_edit_distance(a, i, b, j - 1, memo) + 1});
  return memo[{i, j}] = r;
}

std::u32string random_string(SplitMix64& rng, std::size_t alphabet, std::size_t max_len) {
  std::u32string s(rng.below(max_len + 1), U'a');
  for (auto& c : s) c = U'a' + static_cast<char32_t>(rng.below(alphabet));
  return s;
}

Outcome ac1() {
  const auto t0 = std::chrono::steady_clock::now();
  SplitMix64 rng(1001);
  const int pairs = 5000;
  for (int n = 0; n < pairs; ++n) {
    const std::size_t alphabet = 1 + rng.below(8);
    const auto ref = random_string(rng, alphabet, 12), hyp = random_string(rng, alphabet, 12);
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> memo;
    const std::size_t want = brute_edit_distance(ref, ref.size(), hyp, hyp.size(), memo);
    const auto a = metrics::align(ref, hyp);
    if (a.substitutions + a.deletions + a.insertions != want) {
      return {false, "mismatch at pair " + std::to_string(n)};
    }
  }
  const double secs = seconds_since(t0);
  return {secs < 10, std::to_string(pairs) + " pairs, " + metrics::fixed(secs, 2) + " s"};
}

Outcome ac2() {
  SplitMix64 rng(1002);
  std::size_t pixels = 0, boundary = 0;
  for (int n = 0; n < 100; ++n) {
    const int w = 1 + static_cast<int>(rng.below(64)), h = 1 + static_cast<int>(rng.below(64));
    Raster img = testing::random_raster(rng, w, h);
    const int t = static_cast<int>(rng.below(256));
    // Plant boundary pixels.
    for (int k = 0; k < 4; ++k) img.at(static_cast<int>(rng.below(w)), static_cast<int>(rng.below(h))) = t;
    const Raster out = imaging::threshold(img, t);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const int want = img.at(x, y) > t ? 1 : 0;
        if (out.at(x, y) != want) return {false, "pixel mismatch in image " + std::to_string(n)};
        boundary += img.at(x, y) == t;
        ++pixels;
      }
    }
  }
  return {true, std::to_string(pixels) + " pixels, " + std::to_string(boundary) + " at f = T"};
}

Raster blur_oracle(const Raster& img, int k) {
  Raster out(img.width(), img.height(), 1, 0);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      long sum = 0;
      for (int dy = 0; dy < k; ++dy) {
        for (int dx = 0; dx < k; ++dx) {
          sum += img.at(std::clamp(x - k / 2 + dx, 0, img.width() - 1), std::clamp(y - k / 2 + dy, 0, img.height() - 1));
        }
      }
      const long area = static_cast<long>(k) * k;
      out.at(x, y) = static_cast<std::uint8_t>((2 * sum + area) / (2 * area));
    }
  }
  return out;
}

Outcome ac3() {
  SplitMix64 rng(1003);
  int images = 0;
  for (int n = 0; n < 500; ++n) {
    const Raster img = testing::random_raster(rng, 8, 8);
    for (int k = 1; k <= 4; ++k) {
      if (imaging::box_blur(img, k) != blur_oracle(img, k)) {
        return {false, "image " + std::to_string(n) + " k=" + std::to_string(k)};
      }
    }
    ++images;
  }
  return {true, std::to_string(images) + " images x k in {1,2,3,4}"};
}

Outcome ac4() {
  const dataset::Registry reg = testing::clean_registry(624);
  const std::vector<std::pair<double, std::size_t>> cases = {{0.9, 561}, {0.8, 499}, {0.7, 436}};
  std::string detail;
  for (const auto& [ratio, want] : cases) {
    const auto a = dataset::split(reg, {ratio, 2024});
    std::size_t train = 0;
    for (const auto& [id, side] : a) train += side == dataset::Split::Train;
    if (train != want || a.size() - train != 624 - want) return {false, "wrong sizes at " + metrics::fixed(ratio, 1)};
    if (a != dataset::split(reg, {ratio, 2024})) return {false, "not deterministic"};
    if (a == dataset::split(reg, {ratio, 2025})) return {false, "seed has no effect"};
    detail += (detail.empty() ? "" : ", ") + std::to_string(train) + "/" + std::to_string(a.size() - train);
  }
  return {true, detail};
}

Outcome ac5() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto atlas = synth::default_atlas();
  const auto model = engines::train_from_atlas(atlas);
  const auto corpus = synth::make_corpus(200, 7, atlas);
  bool pass = true;
  std::string detail;
  for (double p : {0.05, 0.20}) {
    metrics::EditCounts oracle, engine;
    auto add = [](metrics::EditCounts& c, const metrics::Alignment& a) {
      c.substitutions += a.substitutions;
      c.deletions += a.deletions;
      c.insertions += a.insertions;
      c.ref_length += a.ref_length;
    };
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      const auto d = synth::degrade(corpus[i], {0, 1, p, 1000 + i}, atlas);
      const std::string ref = corpus[i].text.text();
      add(oracle, metrics::align_chars(ref, d.text.text()));
      add(engine, metrics::align_chars(ref, engines::recognize_reference(model, d.image).text));
    }
    const double target = 100 * p;
    pass = pass && std::abs(oracle.rate() - target) <= 2 && std::abs(engine.rate() - target) <= 2;
    detail += "p=" + metrics::fixed(p, 2) + " oracle " + metrics::fixed(oracle.rate()) + "% reference " +
              metrics::fixed(engine.rate()) + "%; ";
  }
  const double secs = seconds_since(t0);
  return {pass && secs < 60, detail + metrics::fixed(secs, 1) + " s"};
}

Outcome ac6() {
  const auto atlas = synth::default_atlas();
  const auto model = engines::train_from_atlas(atlas);
  const auto corpus = synth::make_corpus(200, 11, atlas);
  imaging::PreprocessParams pp;
  pp.blur_k = 3;
  pp.threshold = 127;
  pp.invert = true;
  pp.normalize = true;
  auto hyp = [&](const Raster& img) {
    try {
      return engines::recognize_reference(model, img).text;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::EmptyLine) throw;
      return std::string();
    }
  };
  std::vector<metrics::SampleScore> with, without;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto d = synth::degrade(corpus[i], {0.02, 1, 0, 5000 + i}, atlas);
    const std::string ref = corpus[i].text.text(), id = std::to_string(i);
    with.push_back(metrics::score_sample(id, ref, hyp(imaging::preprocess(d.image, pp).image)));
    without.push_back(metrics::score_sample(id, ref, hyp(d.image)));
  }
  const double a = metrics::aggregate("pre", "synth", with).macro_cer;
  const double b = metrics::aggregate("raw", "synth", without).macro_cer;
  return {a <= 5 && b > a, "macro CER " + metrics::fixed(a) + "% with preprocessing, " + metrics::fixed(b) + "% without"};
}

int worst_offset(const std::vector<formkit::SlotCrop>& crops, const formkit::TemplateDescriptor& t,
                 const std::function<void(double, double, double&, double&)>& map_px) {
  const double s = 300 / 25.4;
  int worst = 0;
  for (std::size_t k = 0; k < crops.size(); ++k) {
    const auto& slot = t.slots[k];
    double lo_x = 1e18, lo_y = 1e18, hi_x = -1e18, hi_y = -1e18;
    for (double fx : {0.02, 0.98}) {
      for (double fy : {0.02, 0.98}) {
        double px, py;
        map_px((slot.x_mm + fx * slot.w_mm) * s, (slot.y_mm + fy * slot.h_mm) * s, px, py);
        lo_x = std::min(lo_x, px), hi_x = std::max(hi_x, px), lo_y = std::min(lo_y, py), hi_y = std::max(hi_y, py);
      }
    }
    const Rect& b = crops[k].bounds;
    worst = std::max({worst, static_cast<int>(std::abs(b.x - std::lround(lo_x))),
                      static_cast<int>(std::abs(b.y - std::lround(lo_y))),
                      static_cast<int>(std::abs(b.right() - std::lround(hi_x))),
                      static_cast<int>(std::abs(b.bottom() - std::lround(hi_y)))});
  }
  return worst;
}

Outcome ac7() {
  const auto atlas = synth::default_atlas();
  std::vector<std::string> sentences;
  for (const auto& l : synth::make_corpus(20, 3, atlas)) sentences.push_back(l.text.text());
  const auto form = formkit::render_template(sentences);
  const auto& tpl = form.descriptor;

  const auto crops = formkit::extract_boxes(form.page, tpl, formkit::register_scan(form.page, tpl));
  const int w0 = worst_offset(crops, tpl, [](double x, double y, double& ox, double& oy) { ox = x, oy = y; });

  const double cx = form.page.width() / 2.0, cy = form.page.height() / 2.0, th = 0.5 * M_PI / 180;
  const auto fwd = imaging::Affine::translation(40, 25).compose(imaging::Affine::rotation_about(0.5, cx, cy));
  const Raster scan = imaging::warp_affine(form.page, fwd, form.page.width(), form.page.height(), 255);
  const auto moved = formkit::extract_boxes(scan, tpl, formkit::register_scan(scan, tpl));
  const int w1 = worst_offset(moved, tpl, [&](double x, double y, double& ox, double& oy) {
    ox = cx + std::cos(th) * (x - cx) - std::sin(th) * (y - cy) + 40;
    oy = cy + std::sin(th) * (x - cx) + std::cos(th) * (y - cy) + 25;
  });
  const bool pass = crops.size() == 20 && moved.size() == 20 && w0 <= 2 && w1 <= 3;
  return {pass, std::to_string(crops.size()) + " slots, worst " + std::to_string(w0) + " px aligned, " +
                    std::to_string(w1) + " px translated+rotated"};
}

Outcome ac8() {
  const std::string dir = OCRWB_FIXTURES;
  const auto t5 = nlohmann::json::parse(dataset::read_file(dir + "/table5_counts.json"));
  std::vector<metrics::EvalReport> runs;
  for (const auto& r : t5.at("runs")) runs.push_back(metrics::report_from_counts(r));
  const std::string table5 = metrics::render_table(runs);
  const bool ok5 = table5 ==
                   "syr 55.71% 122.78%\n"
                   "esyr 19.80% 64.41%\n"
                   "esyr_lesstrain 18.82% 62.83%\n"
                   "esyr_short 19.71% 65.42%\n";

  const auto t4 = nlohmann::json::parse(dataset::read_file(dir + "/table4_counts.json"));
  std::vector<metrics::TrainingRow> rows;
  for (const auto& r : t4.at("rows")) {
    rows.push_back({r.at("name"), r.at("split"), metrics::report_from_counts(r.at("train")),
                    metrics::report_from_counts(r.at("eval"))});
  }
  const bool ok4 = metrics::render_training_table(rows) ==
                   "esyr 90/10 1.610% 9.864%\n"
                   "esyr_lesstrain 80/20 1.402% 8.963%\n"
                   "esyr_short 70/30 1.097% 10.498%\n";
  return {ok5 && ok4, std::string("test-set rows ") + (ok5 ? "match" : "differ") + ", training rows " +
                          (ok4 ? "match" : "differ")};
}

Outcome ac9() {
  testing::TempDir src, out;
  testing::write_synth_dataset(src.path(), 40, 9);
  const auto reg = dataset::ingest(src.path());
  const auto cfg = engines::EngineConfig::preset("esyr");
  const auto res = dataset::export_training_layout(reg, dataset::split(reg, {0.9, 1}), cfg, out.path());

  std::filesystem::copy(res.ground_truth_dir, out / "plain");
  std::filesystem::remove(out / "plain" / "manifest.jsonl");
  const auto back = dataset::ingest(out / "plain");
  bool same = back.samples.size() == reg.samples.size();
  for (const auto& [id, s] : reg.samples) {
    const auto* b = back.find(id);
    same = same && b && b->gt == s.gt;
  }
  const std::string conf = dataset::read_file(res.config_file);
  bool lines = true;
  for (const char* want : {"LEARNING_RATE 0.0001\n", "MAX_ITERATIONS 10000\n", "START_MODEL syr\n", "LANG_TYPE RTL\n"}) {
    lines = lines && conf.find(want) != std::string::npos;
  }
  return {same && lines, std::to_string(back.samples.size()) + " samples recovered" +
                             (lines ? ", config lines exact" : ", config lines differ")};
}

Outcome ac10() {
  testing::TempDir dir;
  const auto ids = testing::write_synth_dataset(dir.path(), 20, 12);
  auto svc = service::ReviewService::open(dir.path());
  // Persist a manifest so GETs can be checked against it.
  service::PatchRequest seed;
  seed.expected_revision = 1;
  seed.status = dataset::Status::Clean;
  svc->patch_sample(ids[19], seed);

  service::ReviewServer server(*svc);
  const int port = server.bind();
  std::jthread loop([&] { server.run(); });
  server.wait_until_ready();
  struct Stop {
    service::ReviewServer& s;
    ~Stop() { s.stop(); }
  } stop{server};

  int ok = 0, conflict = 0;
  for (int round = 0; round < 10; ++round) {
    std::barrier sync(2);
    std::array<int, 2> status{};
    {
      std::vector<std::jthread> racers;
      for (int k = 0; k < 2; ++k) {
        racers.emplace_back([&, k] {
          httplib::Client c("127.0.0.1", port);
          const std::string body =
              nlohmann::json{{"expected_revision", 1}, {"ground_truth", k ? "ܐ" : "ܒ"}}.dump();
          sync.arrive_and_wait();
          auto r = c.Patch("/samples/" + ids[round], body, "application/json");
          status[k] = r ? r->status : -1;
        });
      }
    }
    ok += std::count(status.begin(), status.end(), 200);
    conflict += std::count(status.begin(), status.end(), 409);
  }
  const bool race = ok == 10 && conflict == 10;

  httplib::Client c("127.0.0.1", port);
  auto bad = c.Patch("/samples/" + ids[10], R"({"expected_revision":1,"ground_truth":"ܐA"})", "application/json");
  bool gate = bad && bad->status == 422;
  if (gate) {
    const auto j = nlohmann::json::parse(bad->body);
    gate = j.at("violations").size() == 1 && j["violations"][0].at("position") == 1;
  }

  const std::string before = dataset::read_file(dir / "manifest.jsonl");
  const std::vector<std::string> paths = {"/samples", "/samples/" + ids[0], "/samples/" + ids[0] + "/image",
                                         "/healthz", "/samples/zz", "/reports/none"};
  for (const auto& path : paths) c.Get(path);
  const bool pure = dataset::read_file(dir / "manifest.jsonl") == before;
  return {race && gate && pure, std::to_string(ok) + "x200/" + std::to_string(conflict) + "x409 over 10 races, 422 " +
                                    (gate ? "with position" : "missing") + ", GETs " +
                                    (pure ? "mutation-free" : "mutated state")};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"AC1 metrics oracle equivalence", ac1},
      {"AC2 threshold exactness", ac2},
      {"AC3 box blur oracle", ac3},
      {"AC4 split determinism and sizes", ac4},
      {"AC5 corruption-rate recovery", ac5},
      {"AC6 end-to-end pipeline", ac6},
      {"AC7 form closure", ac7},
      {"AC8 report fixtures", ac8},
      {"AC9 dataset round trip", ac9},
      {"AC10 review service contract", ac10},
  };
  int failures = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << name << ": " << o.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
