/**********************************************************************
 * File:        engine_config.hpp
 * Description: Fine-tuning configuration handed to the external trainer,
 *              stored as plain "KEY VALUE" lines.
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
#include <sstream>
#include <string>
#include <string_view>

#include "ocrwb/error.hpp"

namespace ocrwb::engines {

struct EngineConfig {
  std::string name = "esyr";
  double learning_rate = 0.0001;
  int max_iterations = 10000;
  std::string start_model = "syr";
  std::string lang_type = "RTL";
  double ratio_train = 0.9;

  /// The three dataset copies: 90/10, 80/20 and 70/30.
  static EngineConfig preset(std::string_view name) {
    EngineConfig cfg;
    cfg.name = std::string(name);
    if (name == "esyr") {
      cfg.ratio_train = 0.9;
    } else if (name == "esyr_lesstrain") {
      cfg.ratio_train = 0.8;
    } else if (name == "esyr_short") {
      cfg.ratio_train = 0.7;
    } else {
      throw Error(ErrorCode::InvalidArgument, "unknown preset " + cfg.name);
    }
    return cfg;
  }

  void validate() const {
    if (name.empty()) throw Error(ErrorCode::InvalidArgument, "engine config name is empty");
    if (!(ratio_train > 0 && ratio_train < 1)) {
      throw Error(ErrorCode::InvalidArgument, "RATIO_TRAIN must lie in (0, 1)");
    }
    if (learning_rate <= 0 || max_iterations <= 0) {
      throw Error(ErrorCode::InvalidArgument, "LEARNING_RATE and MAX_ITERATIONS must be positive");
    }
  }
};

/// Shortest fixed-notation rendering that round-trips ("0.0001", "0.9").
inline std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed);
  return std::string(buf, res.ptr);
}

inline std::string to_text(const EngineConfig& cfg) {
  std::string out;
  out += "MODEL_NAME " + cfg.name + "\n";
  out += "LEARNING_RATE " + format_number(cfg.learning_rate) + "\n";
  out += "MAX_ITERATIONS " + std::to_string(cfg.max_iterations) + "\n";
  out += "START_MODEL " + cfg.start_model + "\n";
  out += "LANG_TYPE " + cfg.lang_type + "\n";
  out += "RATIO_TRAIN " + format_number(cfg.ratio_train) + "\n";
  return out;
}

/// Reads "KEY VALUE" lines; blank lines and '#' comments are skipped,
/// unknown keys rejected, missing keys keep their defaults.
inline EngineConfig parse_config(std::string_view text) {
  EngineConfig cfg;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  auto number = [&](const std::string& v, auto& out) {
    auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
      throw Error(ErrorCode::InvalidArgument, "line " + std::to_string(lineno) + ": bad number " + v);
    }
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string key, value, extra;
    if (!(ls >> key) || key[0] == '#') continue;
    if (!(ls >> value) || (ls >> extra)) {
      throw Error(ErrorCode::InvalidArgument, "line " + std::to_string(lineno) + ": expected KEY VALUE");
    }
    if (key == "MODEL_NAME") {
      cfg.name = value;
    } else if (key == "LEARNING_RATE") {
      number(value, cfg.learning_rate);
    } else if (key == "MAX_ITERATIONS") {
      number(value, cfg.max_iterations);
    } else if (key == "START_MODEL") {
      cfg.start_model = value;
    } else if (key == "LANG_TYPE") {
      cfg.lang_type = value;
    } else if (key == "RATIO_TRAIN") {
      number(value, cfg.ratio_train);
    } else {
      throw Error(ErrorCode::InvalidArgument, "unknown key " + key);
    }
  }
  cfg.validate();
  return cfg;
}

}  // namespace ocrwb::engines
