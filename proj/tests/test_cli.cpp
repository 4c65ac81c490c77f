#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "pagan/harness/config.hpp"

namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = -1;
  std::string out;
};

Outcome run_cli(const std::string& args) {
  const std::string cmd = std::string(PAGAN_CLI_PATH) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  Outcome o;
  if (!pipe) return o;
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) o.out.append(buf.data(), n);
  const int status = pclose(pipe);
  o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return o;
}

fs::path write_config(const std::string& name, const std::string& body) {
  const fs::path p = fs::temp_directory_path() / (name + ".cfg");
  std::ofstream(p) << body;
  return p;
}

const char* kTiny =
    "name = cli_tiny\n"
    "dataset.train_size = 64\n"
    "dataset.test_size = 32\n"
    "generator.layers = dense:8,relu,dense:2\n"
    "discriminator.layers = dense:8,lrelu,dense:1\n"
    "optimizer.batch_size = 8\n"
    "scheduler.kid_samples = 16\n"
    "scheduler.eval_interval = 10\n"
    "train.iterations = 20\n";

TEST(Cli, VerifyChecksum) {
  const auto o = run_cli("verify checksum");
  EXPECT_EQ(o.code, 0);
  EXPECT_EQ(o.out.rfind("PASS", 0), 0u);
}

TEST(Cli, VerifyUnknownSelector) { EXPECT_EQ(run_cli("verify lemma9").code, 2); }

TEST(Cli, RunAndEmit) {
  const auto cfg = write_config("cli_tiny", kTiny);
  const fs::path out = fs::temp_directory_path() / "pagan_cli_run";
  fs::remove_all(out);
  EXPECT_EQ(run_cli("run " + cfg.string() + " --out " + out.string()).code, 0);
  const auto emitted = run_cli("emit " + out.string());
  EXPECT_EQ(emitted.code, 0);
  EXPECT_EQ(emitted.out.rfind("iteration,level,d_loss,g_loss,kid,frechet,lr_d,event\n", 0), 0u);
  EXPECT_EQ(std::count(emitted.out.begin(), emitted.out.end(), '\n'), 3);
  fs::remove_all(out);
}

TEST(Cli, OutputRootEnvironment) {
  const auto cfg = write_config("cli_tiny_env", kTiny);
  const fs::path root = fs::temp_directory_path() / "pagan_cli_root";
  fs::remove_all(root);
  const std::string cmd = "PAGAN_OUTPUT_ROOT=" + root.string() + " " + PAGAN_CLI_PATH + " run " + cfg.string() +
                          " >/dev/null 2>&1";
  EXPECT_EQ(std::system(cmd.c_str()), 0);
  EXPECT_TRUE(fs::exists(root / "cli_tiny" / "metrics.csv"));
  fs::remove_all(root);
}

TEST(Cli, MultiSeed) {
  const auto cfg = write_config("cli_tiny_multi", kTiny);
  const fs::path out = fs::temp_directory_path() / "pagan_cli_multi";
  fs::remove_all(out);
  EXPECT_EQ(run_cli("run " + cfg.string() + " --seeds 2 --threads 1 --out " + out.string()).code, 0);
  EXPECT_TRUE(fs::exists(out / "seed_1" / "metrics.csv"));
  fs::remove_all(out);
}

TEST(Cli, ConfigErrors) {
  const auto bad = write_config("cli_bad", "train.iterations = many\n");
  EXPECT_EQ(run_cli("run " + bad.string()).code, 2);
  const auto unknown = write_config("cli_unknown", "train.speed = 3\n");
  EXPECT_EQ(run_cli("run " + unknown.string()).code, 2);
  EXPECT_EQ(run_cli("run /nonexistent/file.cfg").code, 2);
  EXPECT_EQ(run_cli("").code, 2);
}

TEST(Cli, EmitMissingRun) { EXPECT_EQ(run_cli("emit /nonexistent/run").code, 1); }

TEST(Cli, ShippedConfigsParse) {
  for (const auto& entry : fs::directory_iterator(PAGAN_CONFIG_DIR)) {
    if (entry.path().extension() != ".cfg") continue;
    EXPECT_NO_THROW(pagan::harness::load_config(entry.path()).validate()) << entry.path();
  }
}

}  // namespace
