#include <gtest/gtest.h>

#include <chrono>
#include <cstdlib>
#include <random>

#include "test_support.hpp"
#include "vidshield/external_denoiser.hpp"

using namespace vidshield;
using namespace std::chrono_literals;
using testing_support::random_frame;

TEST(RunProcess, CollectsStdoutStderrAndStatus) {
  const std::vector<std::uint8_t> input = {'a', 'b', 'c'};
  const auto r = run_process("cat; echo oops >&2; exit 5", input, 5000ms);
  EXPECT_EQ(r.exit_code, 5);
  EXPECT_EQ(std::string(r.out.begin(), r.out.end()), "abc");
  EXPECT_EQ(r.err, "oops\n");
}

TEST(RunProcess, LargeInputDoesNotDeadlock) {
  std::vector<std::uint8_t> input(4 << 20);
  for (std::size_t k = 0; k < input.size(); ++k) input[k] = static_cast<std::uint8_t>(k * 31);
  const auto r = run_process("cat", input, 20000ms);
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_EQ(r.out, input);
}

TEST(RunProcess, ChildIgnoringStdinIsFine) {
  std::vector<std::uint8_t> input(1 << 20, 7);
  const auto r = run_process("echo done", input, 5000ms);
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_EQ(std::string(r.out.begin(), r.out.end()), "done\n");
}

TEST(ExternalDenoiser, CatIsIdentity) {
  std::mt19937_64 rng(1);
  const Frame f = random_frame(31, 17, 3, rng);
  ExternalDenoiser d("cat", 10000ms);
  EXPECT_EQ(d(f), f);
  const VideoClip clip({f, random_frame(31, 17, 3, rng)});
  const auto out = spatial_defend(clip, d);
  EXPECT_EQ(out[0], clip[0]);
  EXPECT_EQ(out[1], clip[1]);
}

TEST(ExternalDenoiser, WrongDimensionsViolateContract) {
  testing_support::TempDir dir("extden");
  const auto fixed = dir.path() / "fixed.png";
  write_file_bytes(fixed, encode_png(Frame(4, 4, 1, 9)));
  ExternalDenoiser d("cat >/dev/null; cat '" + fixed.string() + "'", 10000ms);
  EXPECT_ERRC(d(Frame(8, 8, 1)), Errc::denoiser_contract);
  EXPECT_EQ(d(Frame(4, 4, 1)), Frame(4, 4, 1, 9));
}

TEST(ExternalDenoiser, GarbageOutputViolatesContract) {
  ExternalDenoiser d("cat >/dev/null; echo not-a-png", 10000ms);
  EXPECT_ERRC(d(Frame(8, 8, 1)), Errc::denoiser_contract);
}

TEST(ExternalDenoiser, NonzeroExitCarriesStderr) {
  ExternalDenoiser d("cat >/dev/null; echo model missing >&2; exit 3", 10000ms);
  try {
    d(Frame(8, 8, 1));
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::denoiser_process);
    EXPECT_NE(std::string(e.what()).find("status 3"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("model missing"), std::string::npos);
  }
}

TEST(ExternalDenoiser, TimeoutKillsTheProcessGroup) {
  ExternalDenoiser d("sleep 30", 300ms);
  const auto start = std::chrono::steady_clock::now();
  EXPECT_ERRC(d(Frame(8, 8, 1)), Errc::denoiser_timeout);
  EXPECT_LT(std::chrono::steady_clock::now() - start, 10s);
}

TEST(ExternalDenoiser, EmptyCommandRejected) {
  EXPECT_ERRC(ExternalDenoiser("", 100ms), Errc::invalid_argument);
}

TEST(ExternalDenoiser, TimeoutFromEnvironment) {
  ::unsetenv(kDenoiserTimeoutEnv);
  EXPECT_EQ(denoiser_timeout_from_env(), kDefaultDenoiserTimeout);
  ::setenv(kDenoiserTimeoutEnv, "1500", 1);
  EXPECT_EQ(denoiser_timeout_from_env(), 1500ms);
  for (const char* bad : {"abc", "-5", "0", "12ms"}) {
    ::setenv(kDenoiserTimeoutEnv, bad, 1);
    EXPECT_ERRC(denoiser_timeout_from_env(), Errc::invalid_argument);
  }
  ::unsetenv(kDenoiserTimeoutEnv);
}
