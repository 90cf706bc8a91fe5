#pragma once

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vidshield/defense.hpp"
#include "vidshield/error.hpp"
#include "vidshield/frame.hpp"
#include "vidshield/png_io.hpp"

namespace vidshield {

inline constexpr const char* kDenoiserTimeoutEnv = "VIDSHIELD_DENOISER_TIMEOUT_MS";
inline constexpr std::chrono::milliseconds kDefaultDenoiserTimeout{30000};

struct ProcessResult {
  int exit_code = -1;  // -1 when terminated by a signal
  std::vector<std::uint8_t> out;
  std::string err;
};

namespace detail {

class Fd {
 public:
  Fd() = default;
  explicit Fd(int fd) : fd_(fd) {}
  Fd(Fd&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
  Fd& operator=(Fd&& o) noexcept {
    reset();
    fd_ = std::exchange(o.fd_, -1);
    return *this;
  }
  ~Fd() { reset(); }

  int get() const noexcept { return fd_; }
  explicit operator bool() const noexcept { return fd_ >= 0; }
  void reset() noexcept {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

 private:
  int fd_ = -1;
};

inline std::pair<Fd, Fd> make_pipe() {
  int fds[2];
  if (::pipe2(fds, O_CLOEXEC) != 0) fail(Errc::denoiser_process, std::string("pipe: ") + std::strerror(errno));
  return {Fd(fds[0]), Fd(fds[1])};
}

// Blocks SIGPIPE on this thread for its lifetime and swallows any SIGPIPE
// raised by writes into a closed pipe.
class SigpipeGuard {
 public:
  SigpipeGuard() {
    sigemptyset(&set_);
    sigaddset(&set_, SIGPIPE);
    pthread_sigmask(SIG_BLOCK, &set_, &old_);
  }
  ~SigpipeGuard() {
    const timespec zero{0, 0};
    while (sigtimedwait(&set_, nullptr, &zero) > 0) {
    }
    pthread_sigmask(SIG_SETMASK, &old_, nullptr);
  }
  SigpipeGuard(const SigpipeGuard&) = delete;
  SigpipeGuard& operator=(const SigpipeGuard&) = delete;

 private:
  sigset_t set_{};
  sigset_t old_{};
};

}  // namespace detail

// Runs `command` through /bin/sh, feeding `input` on stdin and collecting
// stdout/stderr. The whole process group is killed when the deadline passes.
inline ProcessResult run_process(const std::string& command, std::span<const std::uint8_t> input,
                                 std::chrono::milliseconds timeout) {
  auto [in_read, in_write] = detail::make_pipe();
  auto [out_read, out_write] = detail::make_pipe();
  auto [err_read, err_write] = detail::make_pipe();
  detail::SigpipeGuard guard;

  const pid_t pid = ::fork();
  if (pid < 0) fail(Errc::denoiser_process, std::string("fork: ") + std::strerror(errno));
  if (pid == 0) {
    ::setpgid(0, 0);
    ::dup2(in_read.get(), STDIN_FILENO);
    ::dup2(out_write.get(), STDOUT_FILENO);
    ::dup2(err_write.get(), STDERR_FILENO);
    sigset_t none;
    sigemptyset(&none);
    ::sigprocmask(SIG_SETMASK, &none, nullptr);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  in_read.reset();
  out_write.reset();
  err_write.reset();
  for (const auto* fd : {&in_write, &out_read, &err_read}) ::fcntl(fd->get(), F_SETFL, O_NONBLOCK);

  ProcessResult result;
  std::size_t written = 0;
  if (input.empty()) in_write.reset();
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  bool timed_out = false;

  while (out_read || err_read) {
    const auto remaining =
        std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (remaining.count() <= 0) {
      timed_out = true;
      break;
    }
    pollfd fds[3];
    nfds_t count = 0;
    if (in_write) fds[count++] = {in_write.get(), POLLOUT, 0};
    if (out_read) fds[count++] = {out_read.get(), POLLIN, 0};
    if (err_read) fds[count++] = {err_read.get(), POLLIN, 0};
    const int ready = ::poll(fds, count, static_cast<int>(remaining.count()));
    if (ready < 0 && errno != EINTR) fail(Errc::denoiser_process, std::string("poll: ") + std::strerror(errno));
    if (ready <= 0) continue;

    for (nfds_t k = 0; k < count; ++k) {
      if (fds[k].revents == 0) continue;
      if (in_write && fds[k].fd == in_write.get()) {
        const ssize_t n = ::write(in_write.get(), input.data() + written, input.size() - written);
        if (n > 0) written += static_cast<std::size_t>(n);
        if ((n < 0 && errno != EAGAIN && errno != EINTR) || written == input.size()) in_write.reset();
        continue;
      }
      std::uint8_t buf[65536];
      const ssize_t n = ::read(fds[k].fd, buf, sizeof buf);
      if (n > 0) {
        if (out_read && fds[k].fd == out_read.get()) {
          result.out.insert(result.out.end(), buf, buf + n);
        } else {
          result.err.append(reinterpret_cast<const char*>(buf), static_cast<std::size_t>(n));
        }
      } else if (n == 0 || (errno != EAGAIN && errno != EINTR)) {
        (out_read && fds[k].fd == out_read.get() ? out_read : err_read).reset();
      }
    }
  }

  if (timed_out) ::kill(-pid, SIGKILL);
  int status = 0;
  while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  if (timed_out) {
    fail(Errc::denoiser_timeout, "denoiser '" + command + "' exceeded " + std::to_string(timeout.count()) + " ms");
  }
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

inline std::chrono::milliseconds denoiser_timeout_from_env() {
  const char* raw = std::getenv(kDenoiserTimeoutEnv);
  if (raw == nullptr || *raw == '\0') return kDefaultDenoiserTimeout;
  char* end = nullptr;
  const long long value = std::strtoll(raw, &end, 10);
  if (end == raw || *end != '\0' || value <= 0) {
    fail(Errc::invalid_argument, std::string(kDenoiserTimeoutEnv) + " must be a positive integer, got '" + raw + "'");
  }
  return std::chrono::milliseconds(value);
}

// Adapter over an external program: one PNG frame in on stdin, one PNG
// frame of identical geometry out on stdout, per call. Calls through one
// instance are serialized.
class ExternalDenoiser {
 public:
  explicit ExternalDenoiser(std::string command, std::chrono::milliseconds timeout = denoiser_timeout_from_env())
      : command_(std::move(command)), timeout_(timeout), mutex_(std::make_shared<std::mutex>()) {
    if (command_.empty()) fail(Errc::invalid_argument, "external denoiser command is empty");
  }

  Frame operator()(const Frame& frame) const {
    std::lock_guard lock(*mutex_);
    const auto result = run_process(command_, encode_png(frame), timeout_);
    if (result.exit_code != 0) {
      fail(Errc::denoiser_process,
           "denoiser '" + command_ + "' exited with status " + std::to_string(result.exit_code) +
               (result.err.empty() ? "" : ": " + result.err));
    }
    Frame out = [&] {
      try {
        return decode_png(result.out, "denoiser output");
      } catch (const Error& e) {
        fail(Errc::denoiser_contract, std::string("denoiser produced an unreadable PNG: ") + e.what());
      }
    }();
    if (!out.same_geometry(frame)) {
      fail(Errc::denoiser_contract, "denoiser returned " + std::to_string(out.width()) + "x" +
                                        std::to_string(out.height()) + "x" + std::to_string(out.channels()) +
                                        " for a " + std::to_string(frame.width()) + "x" +
                                        std::to_string(frame.height()) + "x" + std::to_string(frame.channels()) +
                                        " frame");
    }
    return out;
  }

  const std::string& command() const noexcept { return command_; }

 private:
  std::string command_;
  std::chrono::milliseconds timeout_;
  std::shared_ptr<std::mutex> mutex_;
};

inline SpatialDenoiser make_external_denoiser(std::string command) {
  return ExternalDenoiser(std::move(command));
}

}  // namespace vidshield
