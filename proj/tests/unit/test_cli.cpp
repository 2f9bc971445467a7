#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "wavecor/cli.hpp"
#include "wavecor/config_io.hpp"
#include "wavecor/report.hpp"
#include "wavecor/volume_io.hpp"

using namespace wavecor;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path fresh_dir(const std::string& tag) {
  const fs::path p = fs::temp_directory_path() / ("wavecor_cli_" + tag + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("usage errors exit with 2") {
  CHECK(cli({}).code == kExitUsage);
  CHECK(cli({"bogus"}).code == kExitUsage);
  CHECK(cli({"--help"}).code == kExitOk);
  CHECK(cli({"wavelet-check"}).code == kExitOk);
  const Run odd = cli({"wavelet-check", "--dims", "15"});
  CHECK(odd.code == kExitUsage);
  CHECK(odd.err.find("15") != std::string::npos);
  const fs::path dir = fresh_dir("usage");
  CHECK(cli({"phantom-gen", "--n", "0", "--out", (dir / "d").string()}).code == kExitUsage);
  CHECK(cli({"phantom-gen", "--n", "10", "--dims", "40", "--out", (dir / "d").string()}).code == kExitUsage);
  CHECK(cli({"eval", "--pred", "/nonexistent", "--truth", "/nonexistent"}).code == kExitUsage);
  fs::remove_all(dir);
}

TEST_CASE("pipeline through the command line") {
  const fs::path dir = fresh_dir("pipeline");
  const std::string data = (dir / "data").string(), run = (dir / "run").string();
  const Run gen = cli({"phantom-gen", "--n", "10", "--dims", "32", "--seed", "3", "--out", data});
  REQUIRE(gen.code == kExitOk);
  CHECK(gen.out.find("seed: 3") != std::string::npos);
  CHECK(fs::exists(data + "/manifest.json"));
  CHECK(fs::exists(data + "/case_000_image.svol"));

  // Flags win over the config file.
  const std::string cfg = (dir / "train.json").string();
  write_json_file(cfg, Json::parse(R"({"optim": {"epochs": 5}, "network": {"base_width": 4, "scales": 2},
                                      "patch": {"size": 16, "overlap": 4}})"));
  const Run tr = cli({"train", "--data", data + "/manifest.json", "--out", run, "--config", cfg, "--epochs", "1"});
  REQUIRE(tr.code == kExitOk);
  CHECK(tr.out.find("config:") != std::string::npos);
  const std::string history = read_text_file(run + "/history.csv");
  CHECK(history.rfind("epoch,lr,train_loss,val_dsc\n", 0) == 0);
  CHECK(std::count(history.begin(), history.end(), '\n') == 2);
  const Json meta = read_json_file(run + "/run_metadata.json");
  CHECK(meta["config"]["network"]["base_width"] == 4);

  const std::string pred = (dir / "pred.svol").string();
  const std::string image = data + "/case_009_image.svol", myo = data + "/case_009_myo.svol";
  CHECK(cli({"predict", "--checkpoint", run + "/checkpoint.ckpt", "--volume", image, "--out", pred}).code ==
        kExitUsage);
  REQUIRE(cli({"predict", "--checkpoint", run + "/checkpoint.ckpt", "--volume", image, "--prior", myo, "--out",
               pred})
              .code == kExitOk);
  CHECK(read_volume(pred).dtype == DType::kUInt8);
  CHECK(fs::exists(pred + ".meta.json"));

  const std::string truth = data + "/case_009_vessel.svol";
  const Run self = cli({"eval", "--pred", truth, "--truth", truth});
  REQUIRE(self.code == kExitOk);
  CHECK(self.out.find("\"DSC\": 1.0") != std::string::npos);
  const std::string metrics = (dir / "m.json").string();
  CHECK(cli({"eval", "--pred", pred, "--truth", truth, "--out", metrics}).code == kExitOk);
  CHECK(read_json_file(metrics).contains("DSC"));

  // A corrupted volume is a runtime failure, not a usage error.
  std::string bytes = read_text_file(truth);
  bytes[3] = 'X';
  write_text_file((dir / "bad.svol").string(), bytes);
  CHECK(cli({"eval", "--pred", (dir / "bad.svol").string(), "--truth", truth}).code == kExitFailure);
  fs::remove_all(dir);
}

TEST_CASE("thread count from the environment") {
  ::setenv("WAVECOR_THREADS", "3", 1);
  CHECK(threads_from_env(1) == 3);
  ::unsetenv("WAVECOR_THREADS");
  CHECK(threads_from_env(2) == 2);
}
