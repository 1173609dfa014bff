/**********************************************************************
 * File:        ocrwb.cpp
 * Description: Command-line front end for the workbench.
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

#include <csignal>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ocrwb/ocrwb.hpp"
#include "ocrwb/review_http.hpp"

namespace fs = std::filesystem;
using namespace ocrwb;

namespace {

std::vector<std::string> read_lines(const fs::path& p) {
  std::istringstream in(dataset::read_file(p));
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!textnorm::canonicalize(line).empty()) out.push_back(line);
  }
  return out;
}

void write_text(const fs::path& p, const std::string& s) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  dataset::write_file_atomic(p, s);
}

int cmd_preprocess(const fs::path& in, const fs::path& out, const imaging::PreprocessParams& params) {
  const auto r = imaging::preprocess(png::read(in), params);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  png::write(out, r.image);
  std::cout << out.string() << " " << r.image.width() << "x" << r.image.height() << "\n";
  if (r.low_contrast) std::cerr << "warning: low contrast after thresholding\n";
  return 0;
}

int cmd_template(const fs::path& sentences, const fs::path& out, const std::string& id) {
  formkit::LayoutParams lp;
  lp.template_id = id;
  const auto t = formkit::render_template(read_lines(sentences), lp);
  fs::create_directories(out);
  png::write(out / "page.png", t.page);
  write_text(out / "template.json", formkit::to_json(t.descriptor).dump(2) + "\n");
  std::cout << t.descriptor.slots.size() << " slots\n";
  return 0;
}

int cmd_extract(const fs::path& scan_path, const fs::path& tpl_path, const fs::path& out, bool no_fiducials,
                double dpi, char batch, int author, int first_seq) {
  const Raster scan = png::read(scan_path);
  const auto tpl = formkit::template_from_json(nlohmann::json::parse(dataset::read_file(tpl_path)));
  const auto reg = no_fiducials ? formkit::registration_from_dpi(dpi) : formkit::register_scan(scan, tpl);
  const auto crops = formkit::extract_boxes(scan, tpl, reg);
  fs::create_directories(out);
  for (std::size_t i = 0; i < crops.size(); ++i) {
    const std::string id = dataset::format_id(batch, author, first_seq + static_cast<int>(i));
    png::write(out / (id + ".png"), crops[i].image);
    dataset::write_ground_truth_file(out / (id + std::string(dataset::kGtExtension)), tpl.slots[i].prompt_text);
    if (crops[i].empty) std::cerr << "warning: " << id << " looks empty\n";
  }
  std::cout << crops.size() << " crops, dpi " << metrics::fixed(reg.dpi, 1) << ", residual "
            << metrics::fixed(reg.residual_px, 2) << " px\n";
  return 0;
}

int cmd_ingest(const fs::path& dir) {
  const auto reg = dataset::ingest(dir);
  dataset::save_manifest(reg);
  std::cout << reg.samples.size() << " samples\n";
  return 0;
}

int cmd_split(const fs::path& root, const dataset::SplitSpec& spec) {
  auto reg = dataset::load(root);
  const auto a = dataset::split(reg, spec);
  dataset::apply_assignment(reg, a);
  dataset::save_manifest(reg);
  std::size_t train = 0;
  for (const auto& [id, s] : a) train += s == dataset::Split::Train;
  std::cout << "train " << train << " eval " << a.size() - train << "\n";
  return 0;
}

int cmd_stats(const fs::path& root, const std::string& volunteers) {
  const auto reg = dataset::load(root);
  std::vector<dataset::VolunteerRecord> vol;
  if (!volunteers.empty()) vol = dataset::parse_volunteers_csv(dataset::read_file(volunteers));
  std::cout << dataset::to_json(dataset::stats(reg, vol)).dump(2) << "\n";
  return 0;
}

int cmd_export(const fs::path& root, const fs::path& config, const fs::path& out) {
  const auto cfg = engines::parse_config(dataset::read_file(config));
  const auto reg = dataset::load(root);
  dataset::Assignment a;
  for (const auto& [id, s] : reg.samples) {
    if (s.split == dataset::Split::Train || s.split == dataset::Split::Eval) a[id] = s.split;
  }
  const auto res = dataset::export_training_layout(reg, a, cfg, out);
  std::cout << "train " << res.train_ids.size() << " eval " << res.eval_ids.size() << " -> "
            << res.ground_truth_dir.string() << "\n";
  return 0;
}

int cmd_eval(const fs::path& ref_dir, const fs::path& hyp_dir, bool words, bool micro, const std::string& name,
             const std::string& json_out) {
  std::vector<metrics::SampleScore> scores;
  std::vector<fs::path> refs;
  for (const auto& e : fs::directory_iterator(ref_dir)) {
    const std::string f = e.path().filename().string();
    if (f.ends_with(dataset::kGtExtension)) refs.push_back(e.path());
  }
  std::sort(refs.begin(), refs.end());
  for (const auto& r : refs) {
    const std::string f = r.filename().string();
    const std::string id = f.substr(0, f.size() - dataset::kGtExtension.size());
    const fs::path h1 = hyp_dir / f, h2 = hyp_dir / (id + ".txt");
    const fs::path hyp = fs::exists(h1) ? h1 : h2;
    const std::string hyp_text = fs::exists(hyp) ? dataset::read_ground_truth_file(hyp) : std::string();
    const auto gt = textnorm::normalize_text(dataset::read_ground_truth_file(r));
    auto score = metrics::score_sample(id, gt.text(), hyp_text);
    if (!words) score.words.reset();
    scores.push_back(std::move(score));
  }
  const auto rep = metrics::aggregate(name, ref_dir.filename().string(), scores);
  std::cout << metrics::to_tsv({rep}, micro ? metrics::Headline::Micro : metrics::Headline::Macro);
  if (!json_out.empty()) write_text(json_out, metrics::to_json(rep).dump(2) + "\n");
  return 0;
}

int cmd_synth(std::size_t count, std::uint64_t seed, const fs::path& out, double salt_pepper, double corrupt) {
  const auto atlas = synth::default_atlas();
  const auto lines = synth::make_corpus(count, seed, atlas);
  fs::create_directories(out);
  std::string boxes;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const int author = static_cast<int>((i % 1980) / 20) + 1;
    const int seq = static_cast<int>(i % 20) + 1;
    const char batch = i < 1980 ? 'a' : 'b';
    const std::string id = dataset::format_id(batch, author, seq);
    synth::RenderedLine line = lines[i];
    if (salt_pepper > 0 || corrupt > 0) {
      line = synth::degrade(line, {salt_pepper, 1, corrupt, seed ^ (0x9E3779B97F4A7C15ull * (i + 1))}, atlas);
    }
    png::write(out / (id + ".png"), line.image);
    dataset::write_ground_truth_file(out / (id + std::string(dataset::kGtExtension)), lines[i].text.text());
    nlohmann::json gb = nlohmann::json::array();
    for (const auto& b : line.glyph_boxes) {
      gb.push_back({{"codepoint", utf8::codepoint_label(b.codepoint)},
                    {"x", b.rect.x}, {"y", b.rect.y}, {"w", b.rect.w}, {"h", b.rect.h}});
    }
    boxes += nlohmann::json{{"id", id}, {"text", line.text.text()}, {"boxes", std::move(gb)}}.dump() + "\n";
  }
  write_text(out / "boxes.jsonl", boxes);
  std::cout << lines.size() << " lines\n";
  return 0;
}

int cmd_recognize(const fs::path& image, const std::string& command, double timeout) {
  const auto h = command.empty()
                     ? engines::EngineHandle::reference(
                           "reference", std::make_shared<const engines::ReferenceModel>(
                                            engines::train_from_atlas(synth::default_atlas())))
                     : engines::EngineHandle::external("external", command, timeout);
  std::cout << engines::recognize_file(h, image) << "\n";
  return 0;
}

service::ReviewServer* g_server = nullptr;

int cmd_serve(const fs::path& root, const std::string& host, int port, const std::string& ui) {
  auto svc = service::ReviewService::open(root);
  service::ReviewServer server(*svc, ui);
  const int bound = server.bind(host, port);
  g_server = &server;
  std::signal(SIGINT, [](int) {
    if (g_server) g_server->stop();
  });
  std::signal(SIGTERM, [](int) {
    if (g_server) g_server->stop();
  });
  std::cout << "listening on http://" << host << ":" << bound << std::endl;
  server.run();
  g_server = nullptr;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Syriac handwriting OCR workbench"};
  app.require_subcommand(1);
  int rc = 0;

  auto* pre = app.add_subcommand("preprocess", "Grayscale, blur, threshold and normalize a line image");
  std::string pre_in, pre_out;
  imaging::PreprocessParams pp;
  bool pp_normalize = false;
  pre->add_option("input", pre_in, "Input PNG")->required()->check(CLI::ExistingFile);
  pre->add_option("output", pre_out, "Output PNG")->required();
  pre->add_option("--blur-k", pp.blur_k, "Box filter size")->check(CLI::Range(1, 64));
  pre->add_option("--threshold", pp.threshold, "Threshold T")->check(CLI::Range(0, 255));
  pre->add_flag("--invert", pp.invert, "Write ink as 255 on 0");
  pre->add_flag("--normalize", pp_normalize, "Fit onto the 1200x110 canvas");
  pre->callback([&] {
    pp.normalize = pp_normalize;
    rc = cmd_preprocess(pre_in, pre_out, pp);
  });

  auto* tpl = app.add_subcommand("template", "Render a collection form and its descriptor");
  std::string tpl_sent, tpl_out, tpl_id = "form";
  tpl->add_option("--sentences", tpl_sent, "One sentence per line")->required()->check(CLI::ExistingFile);
  tpl->add_option("--out", tpl_out, "Output directory")->required();
  tpl->add_option("--id", tpl_id, "Template id");
  tpl->callback([&] { rc = cmd_template(tpl_sent, tpl_out, tpl_id); });

  auto* ext = app.add_subcommand("extract", "Register a scanned form and crop its slots");
  std::string ext_scan, ext_tpl, ext_out, ext_batch = "a";
  bool ext_nofid = false;
  double ext_dpi = 300;
  int ext_author = 1, ext_seq = 1;
  ext->add_option("--scan", ext_scan, "Scanned page PNG")->required()->check(CLI::ExistingFile);
  ext->add_option("--template", ext_tpl, "template.json")->required()->check(CLI::ExistingFile);
  ext->add_option("--out", ext_out, "Output directory")->required();
  ext->add_flag("--no-fiducials", ext_nofid, "Use a fixed scale instead of fiducials");
  ext->add_option("--dpi", ext_dpi, "Scan resolution for --no-fiducials");
  ext->add_option("--batch", ext_batch, "Batch letter for output ids")->check(CLI::IsMember({"a", "b"}));
  ext->add_option("--author", ext_author, "Author number for output ids")->check(CLI::Range(0, 99));
  ext->add_option("--first-seq", ext_seq, "Sequence number of the first slot")->check(CLI::Range(0, 99));
  ext->callback([&] {
    rc = cmd_extract(ext_scan, ext_tpl, ext_out, ext_nofid, ext_dpi, ext_batch[0], ext_author, ext_seq);
  });

  auto* ing = app.add_subcommand("ingest", "Pair images with ground truth and write the manifest");
  std::string ing_dir;
  ing->add_option("--dir", ing_dir, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  ing->callback([&] { rc = cmd_ingest(ing_dir); });

  auto* spl = app.add_subcommand("split", "Assign clean samples to train and eval");
  std::string spl_root = ".";
  dataset::SplitSpec spec;
  spl->add_option("--root", spl_root, "Dataset directory")->check(CLI::ExistingDirectory);
  spl->add_option("--ratio", spec.ratio_train, "Train fraction");
  spl->add_option("--seed", spec.seed, "Shuffle seed");
  spl->add_flag("--by-author", spec.by_author, "Keep each writer on one side");
  spl->callback([&] { rc = cmd_split(spl_root, spec); });

  auto* sta = app.add_subcommand("stats", "Corpus statistics");
  std::string sta_root = ".", sta_vol;
  sta->add_option("--root", sta_root, "Dataset directory")->check(CLI::ExistingDirectory);
  sta->add_option("--volunteers", sta_vol, "volunteers.csv")->check(CLI::ExistingFile);
  sta->callback([&] { rc = cmd_stats(sta_root, sta_vol); });

  auto* exp = app.add_subcommand("export-training", "Write the trainer's input layout");
  std::string exp_root = ".", exp_cfg, exp_out;
  exp->add_option("--root", exp_root, "Dataset directory")->check(CLI::ExistingDirectory);
  exp->add_option("--config", exp_cfg, "KEY VALUE config file")->required()->check(CLI::ExistingFile);
  exp->add_option("--out", exp_out, "Output directory")->required();
  exp->callback([&] { rc = cmd_export(exp_root, exp_cfg, exp_out); });

  auto* ev = app.add_subcommand("eval", "Score hypotheses against ground truth");
  std::string ev_ref, ev_hyp, ev_name = "engine", ev_json;
  bool ev_words = false, ev_micro = false;
  ev->add_option("--ref-dir", ev_ref, "Directory of <id>.gt.txt")->required()->check(CLI::ExistingDirectory);
  ev->add_option("--hyp-dir", ev_hyp, "Directory of <id>.gt.txt or <id>.txt")->required()->check(CLI::ExistingDirectory);
  ev->add_flag("--words", ev_words, "Also report WER");
  ev->add_flag("--micro", ev_micro, "Pooled rates instead of per-sample means");
  ev->add_option("--name", ev_name, "Row name");
  ev->add_option("--json", ev_json, "Write the full report as JSON");
  ev->callback([&] { rc = cmd_eval(ev_ref, ev_hyp, ev_words, ev_micro, ev_name, ev_json); });

  auto* syn = app.add_subcommand("synth", "Render a synthetic line corpus");
  std::size_t syn_count = 20;
  std::uint64_t syn_seed = 0;
  std::string syn_out;
  double syn_sp = 0, syn_cc = 0;
  syn->add_option("--count", syn_count, "Number of lines")->check(CLI::Range(1, 3960));
  syn->add_option("--seed", syn_seed, "Seed");
  syn->add_option("--out", syn_out, "Output directory")->required();
  syn->add_option("--salt-pepper", syn_sp, "Pixel flip probability")->check(CLI::Range(0.0, 1.0));
  syn->add_option("--char-corrupt", syn_cc, "Glyph substitution probability")->check(CLI::Range(0.0, 1.0));
  syn->callback([&] { rc = cmd_synth(syn_count, syn_seed, syn_out, syn_sp, syn_cc); });

  auto* rec = app.add_subcommand("recognize", "Run an engine on one line image");
  std::string rec_img, rec_cmd;
  double rec_timeout = 60;
  rec->add_option("image", rec_img, "Line image")->required()->check(CLI::ExistingFile);
  rec->add_option("--command", rec_cmd, "External command with {image}; reference engine if omitted");
  rec->add_option("--timeout", rec_timeout, "Seconds");
  rec->callback([&] { rc = cmd_recognize(rec_img, rec_cmd, rec_timeout); });

  auto* srv = app.add_subcommand("serve", "Run the review service");
  std::string srv_root = ".", srv_host = "127.0.0.1", srv_ui;
  int srv_port = 8080;
  srv->add_option("--root", srv_root, "Dataset directory")->check(CLI::ExistingDirectory);
  srv->add_option("--port", srv_port, "Port (0 picks one)")->check(CLI::Range(0, 65535));
  srv->add_option("--host", srv_host, "Bind address");
  srv->add_option("--ui", srv_ui, "Static UI directory served under /ui")->check(CLI::ExistingDirectory);
  srv->callback([&] { rc = cmd_serve(srv_root, srv_host, srv_port, srv_ui); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return rc;
}
