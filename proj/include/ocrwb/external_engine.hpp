/**********************************************************************
 * File:        external_engine.hpp
 * Description: Uniform engine handle: a shell-command adapter for external
 *              OCR engines and the built-in reference recognizer.
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

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <cerrno>
#include <filesystem>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "ocrwb/engine_config.hpp"
#include "ocrwb/png_io.hpp"
#include "ocrwb/reference_engine.hpp"

namespace ocrwb::engines {

inline constexpr std::string_view kImagePlaceholder = "{image}";

enum class EngineKind { External, Reference };

struct EngineHandle {
  EngineKind kind = EngineKind::External;
  std::string name;
  std::string command_template;  // external only, one {image} placeholder
  double timeout_seconds = 60;
  std::shared_ptr<const ReferenceModel> model;  // reference only

  static EngineHandle external(std::string name, std::string command, double timeout = 60) {
    EngineHandle h{EngineKind::External, std::move(name), std::move(command), timeout, nullptr};
    h.validate();
    return h;
  }

  static EngineHandle reference(std::string name, std::shared_ptr<const ReferenceModel> model) {
    EngineHandle h{EngineKind::Reference, std::move(name), {}, 0, std::move(model)};
    h.validate();
    return h;
  }

  void validate() const {
    if (kind == EngineKind::Reference) {
      if (!model) throw Error(ErrorCode::InvalidArgument, "reference engine without a model");
      return;
    }
    std::size_t count = 0;
    for (auto pos = command_template.find(kImagePlaceholder); pos != std::string::npos;
         pos = command_template.find(kImagePlaceholder, pos + 1)) {
      ++count;
    }
    if (count != 1) {
      throw Error(ErrorCode::InvalidArgument,
                  "command template needs exactly one {image} placeholder: " + command_template);
    }
    if (timeout_seconds <= 0) throw Error(ErrorCode::InvalidArgument, "timeout must be positive");
  }
};

inline std::string shell_quote(std::string_view s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out.push_back(c);
    }
  }
  out.push_back('\'');
  return out;
}

inline std::string expand_command(const EngineHandle& h, const std::filesystem::path& image) {
  std::string cmd = h.command_template;
  const auto pos = cmd.find(kImagePlaceholder);
  cmd.replace(pos, kImagePlaceholder.size(), shell_quote(image.string()));
  return cmd;
}

struct ProcessResult {
  int exit_code = 0;
  bool timed_out = false;
  std::string out;
  std::string err;
};

/// Runs `/bin/sh -c command` in its own process group, capturing stdout and
/// stderr. On timeout the whole group is killed.
inline ProcessResult run_shell(const std::string& command, double timeout_seconds) {
  int out_pipe[2], err_pipe[2];
  if (pipe2(out_pipe, O_CLOEXEC) != 0 || pipe2(err_pipe, O_CLOEXEC) != 0) {
    throw Error(ErrorCode::EngineFailure, "pipe() failed");
  }
  const pid_t pid = fork();
  if (pid < 0) throw Error(ErrorCode::EngineFailure, "fork() failed");
  if (pid == 0) {
    setpgid(0, 0);
    dup2(out_pipe[1], STDOUT_FILENO);
    dup2(err_pipe[1], STDERR_FILENO);
    const int devnull = open("/dev/null", O_RDONLY);
    if (devnull >= 0) dup2(devnull, STDIN_FILENO);
    execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  setpgid(pid, pid);
  close(out_pipe[1]);
  close(err_pipe[1]);

  ProcessResult result;
  const auto deadline = std::chrono::steady_clock::now() +
                        std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                            std::chrono::duration<double>(timeout_seconds));
  pollfd fds[2] = {{out_pipe[0], POLLIN, 0}, {err_pipe[0], POLLIN, 0}};
  int open_fds = 2;
  char buf[4096];
  while (open_fds > 0) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) {
      result.timed_out = true;
      break;
    }
    const int rc = poll(fds, 2, static_cast<int>(left.count()));
    if (rc < 0 && errno == EINTR) continue;
    if (rc <= 0) continue;
    for (int i = 0; i < 2; ++i) {
      if (fds[i].fd < 0 || !(fds[i].revents & (POLLIN | POLLHUP | POLLERR))) continue;
      const ssize_t n = read(fds[i].fd, buf, sizeof buf);
      if (n > 0) {
        (i == 0 ? result.out : result.err).append(buf, static_cast<std::size_t>(n));
      } else if (n == 0 || errno != EINTR) {
        close(fds[i].fd);
        fds[i].fd = -1;
        --open_fds;
      }
    }
  }
  for (auto& p : fds) {
    if (p.fd >= 0) close(p.fd);
  }

  int status = 0;
  if (result.timed_out) {
    kill(-pid, SIGKILL);
    waitpid(pid, &status, 0);
    return result;
  }
  // Pipes closed; give the child the rest of the budget to exit.
  for (;;) {
    const pid_t w = waitpid(pid, &status, WNOHANG);
    if (w == pid) break;
    if (std::chrono::steady_clock::now() >= deadline) {
      result.timed_out = true;
      kill(-pid, SIGKILL);
      waitpid(pid, &status, 0);
      return result;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
  }
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
  return result;
}

/// Spawns the engine on one line image and returns its canonicalized stdout.
inline std::string run_external(const EngineHandle& h, const std::filesystem::path& image) {
  if (h.kind != EngineKind::External) throw Error(ErrorCode::InvalidArgument, "not an external engine");
  h.validate();
  if (!std::filesystem::exists(image)) throw Error(ErrorCode::NotFound, image.string());
  const ProcessResult r = run_shell(expand_command(h, image), h.timeout_seconds);
  if (r.timed_out) {
    throw Error(ErrorCode::EngineTimeout, h.name + " exceeded " + format_number(h.timeout_seconds) + " s");
  }
  if (r.exit_code != 0) {
    throw Error(ErrorCode::EngineFailure,
                h.name + " exited with " + std::to_string(r.exit_code) + ": " + r.err);
  }
  if (!utf8::is_valid(r.out)) throw Error(ErrorCode::InvalidUtf8, h.name + " produced invalid UTF-8");
  return textnorm::canonicalize(r.out);
}

/// Recognizes one image file with either kind of engine.
inline std::string recognize_file(const EngineHandle& h, const std::filesystem::path& image) {
  if (h.kind == EngineKind::External) return run_external(h, image);
  return recognize_reference(*h.model, png::read(image)).text;
}

inline std::string recognize_raster(const EngineHandle& h, const Raster& img,
                                    const std::filesystem::path& scratch_dir) {
  if (h.kind == EngineKind::Reference) return recognize_reference(*h.model, img).text;
  static std::atomic<unsigned> counter{0};
  std::filesystem::create_directories(scratch_dir);
  const auto path = scratch_dir / ("line-" + std::to_string(getpid()) + "-" +
                                   std::to_string(counter.fetch_add(1)) + ".png");
  png::write(path, img);
  struct Cleanup {
    std::filesystem::path p;
    ~Cleanup() {
      std::error_code ec;
      std::filesystem::remove(p, ec);
    }
  } cleanup{path};
  return run_external(h, path);
}

struct BatchOutcome {
  bool ok = false;
  std::string text;
  ErrorCode code = ErrorCode::EngineFailure;
  std::string message;
};

/// Runs the engine over many images with at most `parallelism` in flight.
/// Outcomes are index-aligned with `images`.
inline std::vector<BatchOutcome> run_batch(const EngineHandle& h,
                                           const std::vector<std::filesystem::path>& images,
                                           unsigned parallelism = 4) {
  std::vector<BatchOutcome> out(images.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < images.size(); i = next.fetch_add(1)) {
      try {
        out[i].text = recognize_file(h, images[i]);
        out[i].ok = true;
      } catch (const Error& e) {
        out[i].code = e.code();
        out[i].message = e.what();
      }
    }
  };
  std::vector<std::jthread> pool;
  const unsigned n = std::max(1u, std::min<unsigned>(parallelism, static_cast<unsigned>(images.size())));
  for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
  return out;
}

}  // namespace ocrwb::engines
