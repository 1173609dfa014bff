/**********************************************************************
 * File:        review_http.hpp
 * Description: JSON-over-HTTP binding of the review service.
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

#include <charconv>
#include <string>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "ocrwb/review_service.hpp"

namespace ocrwb::service {

inline int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotFound:
      return 404;
    case ErrorCode::RevisionConflict:
      return 409;
    case ErrorCode::ValidationFailed:
    case ErrorCode::EmptyReference:
    case ErrorCode::InvalidUtf8:
      return 422;
    case ErrorCode::EngineFailure:
    case ErrorCode::EngineTimeout:
      return 502;
    case ErrorCode::BadParams:
    case ErrorCode::InvalidArgument:
      return 400;
    default:
      return 500;
  }
}

inline nlohmann::json error_body(const Error& e) {
  nlohmann::json j{{"error", std::string(to_string(e.code()))}, {"detail", e.detail()}};
  if (const auto* v = dynamic_cast<const ValidationFailure*>(&e)) {
    nlohmann::json list = nlohmann::json::array();
    for (const auto& x : v->violations()) {
      list.push_back({{"position", x.position}, {"codepoint", utf8::codepoint_label(x.codepoint)}});
    }
    j["violations"] = std::move(list);
  }
  return j;
}

namespace detail {

inline void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json; charset=utf-8");
}

/// Runs `fn`, turning library errors into their mapped status.
template <typename Fn>
void guarded(httplib::Response& res, Fn fn) {
  try {
    fn();
  } catch (const Error& e) {
    send_json(res, http_status(e.code()), error_body(e));
  } catch (const nlohmann::json::exception& e) {
    send_json(res, 400, {{"error", "BadParams"}, {"detail", e.what()}});
  } catch (const std::exception& e) {
    send_json(res, 500, {{"error", "Internal"}, {"detail", e.what()}});
  }
}

inline nlohmann::json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return nullptr;
  return nlohmann::json::parse(req.body);
}

inline SampleFilter filter_from_query(const httplib::Request& req) {
  SampleFilter f;
  if (req.has_param("split") && !req.get_param_value("split").empty()) {
    f.split = dataset::parse_split(req.get_param_value("split"));
    if (!f.split) throw Error(ErrorCode::BadParams, "unknown split");
  }
  if (req.has_param("status") && !req.get_param_value("status").empty()) {
    f.status = dataset::parse_status(req.get_param_value("status"));
    if (!f.status) throw Error(ErrorCode::BadParams, "unknown status");
  }
  if (req.has_param("author") && !req.get_param_value("author").empty()) {
    const std::string a = req.get_param_value("author");
    int v = 0;
    auto r = std::from_chars(a.data(), a.data() + a.size(), v);
    if (r.ec != std::errc() || r.ptr != a.data() + a.size()) throw Error(ErrorCode::BadParams, "author must be a number");
    f.author = v;
  }
  return f;
}

inline std::size_t page_from_query(const httplib::Request& req) {
  if (!req.has_param("page")) return 1;
  const std::string p = req.get_param_value("page");
  std::size_t v = 0;
  auto r = std::from_chars(p.data(), p.data() + p.size(), v);
  if (r.ec != std::errc() || r.ptr != p.data() + p.size() || v == 0) {
    throw Error(ErrorCode::BadParams, "page must be a positive integer");
  }
  return v;
}

}  // namespace detail

/// Registers every endpoint on `svr`. `svc` must outlive the server.
inline void mount_routes(httplib::Server& svr, ReviewService& svc) {
  using detail::guarded;
  using detail::send_json;

  svr.Get("/healthz", [&](const httplib::Request&, httplib::Response& res) {
    send_json(res, 200, {{"status", "ok"}, {"engines", svc.engine_names()}});
  });

  svr.Get("/samples", [&](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const SamplePage page = svc.list_samples(detail::filter_from_query(req), detail::page_from_query(req));
      nlohmann::json items = nlohmann::json::array();
      for (const auto& s : page.items) items.push_back(sample_view(s));
      send_json(res, 200, {{"items", std::move(items)},
                           {"page", page.page},
                           {"page_count", page.page_count},
                           {"page_size", page.page_size},
                           {"total", page.total}});
    });
  });

  svr.Get(R"(/samples/([^/]+))", [&](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { send_json(res, 200, sample_view(svc.get_sample(req.matches[1]))); });
  });

  svr.Get(R"(/samples/([^/]+)/image)", [&](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const std::string stage = req.has_param("stage") ? req.get_param_value("stage") : "raw";
      res.status = 200;
      res.set_content(svc.image_bytes(req.matches[1], stage), "image/png");
    });
  });

  svr.Patch(R"(/samples/([^/]+))", [&](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const PatchRequest patch = patch_from_json(detail::parse_body(req));
      send_json(res, 200, sample_view(svc.patch_sample(req.matches[1], patch)));
    });
  });

  svr.Post(R"(/samples/([^/]+)/reprocess)", [&](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const ReprocessResult r = svc.reprocess_sample(req.matches[1], reprocess_from_json(detail::parse_body(req)));
      send_json(res, 200, {{"sample", sample_view(r.sample)},
                           {"processed_url", "/samples/" + r.sample.id + "/image?stage=processed"},
                           {"width", r.width},
                           {"height", r.height},
                           {"low_contrast", r.low_contrast}});
    });
  });

  svr.Post(R"(/samples/([^/]+)/recognize)", [&](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const nlohmann::json body = detail::parse_body(req);
      std::string engine = "reference";
      if (req.has_param("engine")) engine = req.get_param_value("engine");
      if (body.is_object() && body.contains("engine")) engine = body["engine"].get<std::string>();
      send_json(res, 200, to_json(svc.recognize_sample(req.matches[1], engine)));
    });
  });

  svr.Get(R"(/reports/([^/]+))", [&](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { send_json(res, 200, svc.report(req.matches[1])); });
  });
}

/// Owns the HTTP server; binds loopback unless told otherwise.
class ReviewServer {
 public:
  explicit ReviewServer(ReviewService& svc, const std::string& ui_dir = {}) {
    mount_routes(svr_, svc);
    if (!ui_dir.empty() && !svr_.set_mount_point("/ui", ui_dir)) {
      throw Error(ErrorCode::NotFound, "ui directory " + ui_dir);
    }
  }

  /// Binds to `port` (0 picks a free one) and returns the bound port.
  int bind(const std::string& host = "127.0.0.1", int port = 0) {
    const int bound = port == 0 ? svr_.bind_to_any_port(host) : (svr_.bind_to_port(host, port) ? port : -1);
    if (bound < 0) throw Error(ErrorCode::IoFailure, "cannot bind " + host + ":" + std::to_string(port));
    return bound;
  }

  /// Blocks until stop().
  void run() { svr_.listen_after_bind(); }
  void stop() { svr_.stop(); }
  void wait_until_ready() const { svr_.wait_until_ready(); }

 private:
  httplib::Server svr_;
};

}  // namespace ocrwb::service
