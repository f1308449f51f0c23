#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "odesyn/cli.hpp"

using odesyn::cli_main;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& tag) {
  fs::path p = fs::temp_directory_path() / ("odesyn_cli_" + tag);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool same_tree(const fs::path& a, const fs::path& b) {
  std::vector<std::string> names_a, names_b;
  for (const auto& e : fs::directory_iterator(a)) names_a.push_back(e.path().filename());
  for (const auto& e : fs::directory_iterator(b)) names_b.push_back(e.path().filename());
  std::sort(names_a.begin(), names_a.end());
  std::sort(names_b.begin(), names_b.end());
  if (names_a != names_b) return false;
  for (const auto& n : names_a)
    if (fs::is_regular_file(a / n) && slurp(a / n) != slurp(b / n)) return false;
  return true;
}

}  // namespace

TEST_CASE("make-data: same seed twice produces identical files") {
  auto d1 = fresh_dir("md1"), d2 = fresh_dir("md2");
  CHECK(cli_main({"make-data", "--kind", "sine", "--count", "6", "--seq-length", "32",
                  "--seed", "7", "--out", d1.string()}) == 0);
  CHECK(cli_main({"make-data", "--kind", "sine", "--count", "6", "--seq-length", "32",
                  "--seed", "7", "--out", d2.string()}) == 0);
  CHECK(same_tree(d1, d2));
}

TEST_CASE("make-data: default sine windows hold 240 samples") {
  auto d = fresh_dir("md240");
  CHECK(cli_main({"make-data", "--kind", "sine", "--count", "2", "--seed", "3", "--out",
                  d.string()}) == 0);
  std::ifstream f(d / "window_0000.csv");
  REQUIRE(f);
  std::string line;
  int rows = -1;  // skip the header
  while (std::getline(f, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 240);
}

TEST_CASE("make-data: dyn-ecg dataset comes out windowed and normalized") {
  auto d = fresh_dir("mdecg");
  CHECK(cli_main({"make-data", "--kind", "dyn-ecg", "--count", "3", "--seq-length", "240",
                  "--seed", "3", "--out", d.string()}) == 0);
  int windows = 0;
  for (const auto& e : fs::directory_iterator(d))
    windows += e.path().filename().string().starts_with("window_");
  CHECK(windows == 3);
}

TEST_CASE("make-data: zero count is a usage error (exit 2)") {
  auto d = fresh_dir("md0");
  CHECK(cli_main({"make-data", "--kind", "sine", "--count", "0", "--out", d.string()}) == 2);
  CHECK(cli_main({"make-data", "--kind", "what", "--count", "2", "--out", d.string()}) == 2);
}

TEST_CASE("train --dry-run resolves the documented defaults per model") {
  auto d = fresh_dir("dry1");
  CHECK(cli_main({"train", "--model", "ode-rnn", "--dry-run", "--out", d.string()}) == 0);
  const std::string cfg = slurp(d / "resolved.config");
  CHECK(cfg.find("learning_rate=0.0001\n") != std::string::npos);
  CHECK(cfg.find("batch_size=50") != std::string::npos);
  CHECK(cfg.find("datasize=100") != std::string::npos);
  CHECK(cfg.find("epochs=100") != std::string::npos);
  CHECK(cfg.find("seq_length=240") != std::string::npos);
  CHECK(cfg.find("hidden_dim=50") != std::string::npos);

  auto d2 = fresh_dir("dry2");
  CHECK(cli_main({"train", "--model", "ode-gan", "--dry-run", "--out", d2.string()}) == 0);
  const std::string cfg2 = slurp(d2 / "resolved.config");
  CHECK(cfg2.find("learning_rate=5.0000000000000002e-05") != std::string::npos);
  CHECK(cfg2.find("batch_size=64") != std::string::npos);
  CHECK(cfg2.find("datasize=1000") != std::string::npos);
  CHECK(cfg2.find("epochs=30") != std::string::npos);
  CHECK(cfg2.find("iterations=1000") != std::string::npos);
}

TEST_CASE("unknown model or config key exits with 2") {
  auto d = fresh_dir("bad");
  CHECK(cli_main({"train", "--model", "nope", "--dry-run", "--out", d.string()}) == 2);
  fs::create_directories(d);
  {
    std::ofstream cfg(d / "weird.config");
    cfg << "modell=ode-rnn\n";
  }
  CHECK(cli_main({"train", "--config", (d / "weird.config").string(), "--dry-run"}) == 2);
}

TEST_CASE("tiny train run is reproducible bit-for-bit and replays from its config") {
  auto out1 = fresh_dir("train1"), out2 = fresh_dir("train2"), out3 = fresh_dir("train3");
  std::vector<std::string> base{"train",        "--model",    "ode-rnn",  "--data",
                                "sine",         "--datasize", "8",        "--seq-length",
                                "24",           "--hidden-dim", "6",      "--epochs",
                                "3",            "--batch-size", "4",      "--ode-steps",
                                "1",            "--seed",     "99"};
  auto with_out = [&](const fs::path& o) {
    auto v = base;
    v.push_back("--out");
    v.push_back(o.string());
    return v;
  };
  REQUIRE(cli_main(with_out(out1)) == 0);
  REQUIRE(cli_main(with_out(out2)) == 0);
  CHECK(slurp(out1 / "loss.csv") == slurp(out2 / "loss.csv"));
  CHECK(slurp(out1 / "checkpoint.json") == slurp(out2 / "checkpoint.json"));

  // replay purely from the resolved config
  REQUIRE(cli_main({"train", "--config", (out1 / "resolved.config").string(), "--out",
                    out3.string()}) == 0);
  CHECK(slurp(out1 / "loss.csv") == slurp(out3 / "loss.csv"));
}

TEST_CASE("generate: count contract, determinism, corrupted checkpoint") {
  auto train_out = fresh_dir("gtrain");
  REQUIRE(cli_main({"train", "--model", "ode-rnn", "--data", "sine", "--datasize", "6",
                    "--seq-length", "16", "--hidden-dim", "4", "--epochs", "1",
                    "--batch-size", "3", "--ode-steps", "1", "--out",
                    train_out.string()}) == 0);
  auto g1 = fresh_dir("gen1"), g2 = fresh_dir("gen2");
  REQUIRE(cli_main({"generate", "--checkpoint", (train_out / "checkpoint.json").string(),
                    "--count", "5", "--seed", "4", "--out", g1.string()}) == 0);
  int windows = 0;
  for (const auto& e : fs::directory_iterator(g1))
    windows += e.path().filename().string().starts_with("window_");
  CHECK(windows == 5);
  CHECK(fs::exists(g1 / "manifest.csv"));

  REQUIRE(cli_main({"generate", "--checkpoint", (train_out / "checkpoint.json").string(),
                    "--count", "5", "--seed", "4", "--out", g2.string()}) == 0);
  CHECK(same_tree(g1, g2));

  auto bad = fresh_dir("badckpt");
  fs::create_directories(bad);
  {
    std::ofstream f(bad / "checkpoint.json");
    f << "{\"format\": \"odesyn-checkpoint\", \"version\": 1, \"model\": \"ode-rnn\"";
  }
  CHECK(cli_main({"generate", "--checkpoint", (bad / "checkpoint.json").string(), "--out",
                  (bad / "out").string()}) == 2);
  CHECK(cli_main({"generate", "--checkpoint", (bad / "missing.json").string(), "--out",
                  (bad / "out").string()}) == 2);
}

TEST_CASE("evaluate: identical sets give ~zero mmd and a complete report") {
  auto data = fresh_dir("edata");
  REQUIRE(cli_main({"make-data", "--kind", "sine", "--count", "5", "--seq-length", "24",
                    "--seed", "11", "--out", data.string()}) == 0);
  auto rep = fresh_dir("ereport");
  CHECK(cli_main({"evaluate", "--real", data.string(), "--generated", data.string(), "--out",
                  rep.string()}) == 0);
  const std::string metrics = slurp(rep / "metrics.csv");
  CHECK(metrics.find("mmd_rbf,") != std::string::npos);
  CHECK(metrics.find("rmse_to_nearest,0\n") != std::string::npos);
  CHECK(cli_main({"evaluate", "--real", (data / "nope").string(), "--generated",
                  data.string(), "--out", rep.string()}) == 2);
}

TEST_CASE("missing subcommand or bad flag exits nonzero") {
  CHECK(cli_main({}) != 0);
  CHECK(cli_main({"train", "--no-such-flag"}) == 2);
}
