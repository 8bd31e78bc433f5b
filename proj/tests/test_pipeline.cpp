#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "frfnet/errors.hpp"
#include "frfnet/pipeline.hpp"

using namespace frfnet;
namespace fs = std::filesystem;

namespace {

const fs::path kRoot = fs::temp_directory_path() / "frfnet_pipeline_test";

std::string tiny_config(const std::string& extra = "") {
  return std::string("panel_config = ") + FRFNET_CONFIG_DIR + "/panel_default.cfg\n" +
         "master_seed = 77\n"
         "n_bins = 128\n"
         "n_records = 3\n"
         "crack_lengths = 6 18\n"
         "hole_fractions = 0.3\n"
         "added_masses = 0.03\n"
         "healthy_replicates = 6\n"
         "hidden_units = 8\n"
         "localize_epochs = 20\n"
         "severity_epochs = 20\n"
         "lambda_grid = 1e-3\n"
         "restarts = 2\n"
         "sweep_lengths = 0 6 12 18\n" +
         extra;
}

fs::path write_config(const std::string& name, const std::string& text) {
  fs::create_directories(kRoot);
  const fs::path p = kRoot / name;
  std::ofstream(p) << text;
  return p;
}

int cli(const std::string& args) {
  const std::string cmd = std::string(FRFNET_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST(RunConfig, ParsesAndValidates) {
  const RunConfig c = parse_run_config(tiny_config(), "<t>", ".");
  EXPECT_EQ(c.master_seed, 77u);
  EXPECT_EQ(c.simulation.grid.n_bins, 128);
  EXPECT_EQ(c.grid.crack_lengths, (std::vector<double>{6, 18}));
  EXPECT_EQ(c.localize.max_epochs, 20);
  EXPECT_THROW(parse_run_config("n_bins = 128\n", "<t>", "."), ConfigError);
  EXPECT_THROW(parse_run_config(tiny_config("bogus = 1\n"), "<t>", "."), ConfigError);
  EXPECT_THROW(parse_run_config(tiny_config("split = 0.5 0.5\n"), "<t>", "."), ConfigError);
  EXPECT_THROW(parse_run_config("master_seed = 1\npanel_config = /no/such/file.cfg\n", "<t>", "."), ConfigError);
  EXPECT_THROW(load_run_config((kRoot / "absent.cfg").string()), ConfigError);
}

TEST(RunConfig, ShippedDefaultMatchesBuiltIn) {
  const RunConfig shipped = load_run_config(std::string(FRFNET_CONFIG_DIR) + "/run_default.cfg");
  EXPECT_EQ(shipped.to_json(), default_run_config().to_json());
}

TEST(Pipeline, ReproduceIsByteIdentical) {
  const std::string text = tiny_config();
  RunConfig a = parse_run_config(text, "<t>", ".");
  RunConfig b = a;
  a.output_dir = (kRoot / "rep_a").string();
  b.output_dir = (kRoot / "rep_b").string();
  fs::remove_all(a.output_dir);
  fs::remove_all(b.output_dir);
  const auto sa = cmd_reproduce(a, RunLog(Artifacts{a.output_dir}.log(), nullptr));
  cmd_reproduce(b, RunLog(Artifacts{b.output_dir}.log(), nullptr));
  EXPECT_EQ(sa.fingerprint_length, 100);
  EXPECT_EQ(sa.sweep_predictions.size(), 4u);
  EXPECT_EQ(sa.localize_restart_mse.size(), 2u);
  for (const auto& entry : fs::directory_iterator(a.output_dir)) {
    const std::string name = entry.path().filename().string();
    if (name == "run.log") continue;
    EXPECT_EQ(slurp(entry.path()), slurp(fs::path(b.output_dir) / name)) << name;
  }
  EXPECT_TRUE(fs::exists(fs::path(a.output_dir) / "run.log"));

  std::istringstream csv(slurp(fs::path(a.output_dir) / "records.csv"));
  std::string header;
  std::getline(csv, header);
  EXPECT_EQ(header.rfind("scenario_id,kind,true_rivets,score_0,", 0), 0u);
  EXPECT_NE(header.find("score_33,severity_true,severity_pred"), std::string::npos);
}

TEST(Cli, CommandsAndExitCodes) {
  const fs::path out = kRoot / "cli_run";
  fs::remove_all(out);
  const fs::path cfg = write_config("cli.cfg", tiny_config("output_dir = " + out.string() + "\n"));
  const std::string c = "--config " + cfg.string();

  EXPECT_EQ(cli(""), 2);
  EXPECT_EQ(cli("simulate"), 2);
  EXPECT_EQ(cli("simulate --config " + (kRoot / "nope.cfg").string()), 2);
  EXPECT_EQ(cli("simulate --config " + write_config("noseed.cfg", "n_bins = 64\n").string()), 2);
  EXPECT_EQ(cli("evaluate " + c), 3);  // nothing trained yet

  EXPECT_EQ(cli("simulate " + c), 0);
  EXPECT_TRUE(fs::exists(out / "dataset.frfd"));
  EXPECT_EQ(cli("fit-pca " + c), 0);
  EXPECT_TRUE(fs::exists(out / "fingerprints.frfd"));
  EXPECT_EQ(cli("train " + c + " --task bogus"), 2);
  EXPECT_EQ(cli("train " + c + " --task localize"), 0);
  EXPECT_TRUE(fs::exists(out / "history_localize.csv"));
  EXPECT_EQ(cli("train " + c), 0);
  EXPECT_EQ(cli("evaluate " + c), 0);
  EXPECT_TRUE(fs::exists(out / "evaluation.json"));
  EXPECT_EQ(cli("evaluate " + c + " --threshold 1.5"), 2);

  const std::string model = (out / "model_localize.frfd").string();
  const std::string data = (out / "dataset.frfd").string();
  EXPECT_EQ(cli("infer --model " + model + " --frf " + data + " --scenario 0"), 0);
  EXPECT_EQ(cli("infer --model " + model + " --frf " + data), 2);
  EXPECT_EQ(cli("infer --model " + model + " --frf " + (out / "missing.frfd").string()), 3);

  // same model copied next to bases from a different seed: basis mismatch
  const fs::path other = kRoot / "cli_other";
  fs::remove_all(other);
  EXPECT_EQ(cli("simulate " + c + " --seed 5 --out " + other.string()), 0);
  EXPECT_EQ(cli("fit-pca " + c + " --seed 5 --out " + other.string()), 0);
  fs::copy_file(model, other / "model_localize.frfd");
  EXPECT_EQ(cli("infer --model " + (other / "model_localize.frfd").string() + " --frf " + data + " --scenario 0"), 4);

  // corrupt container
  std::string bytes = slurp(out / "fingerprints.frfd");
  bytes[bytes.size() - 5] ^= 0x10;
  std::ofstream(out / "fingerprints.frfd", std::ios::binary) << bytes;
  EXPECT_EQ(cli("train " + c + " --task localize"), 3);
}

TEST(Cli, InferReportOnHealthyScenario) {
  const fs::path out = kRoot / "rep_a";
  ASSERT_TRUE(fs::exists(out / "model_localize.frfd")) << "depends on Pipeline.ReproduceIsByteIdentical";
  const auto r = cmd_infer((out / "model_localize.frfd").string(), (out / "dataset.frfd").string(), 0.5, 0);
  ASSERT_TRUE(r.location.has_value());
  EXPECT_EQ(r.location->scores.size(), 34);
  const std::string text = format_inference(r);
  EXPECT_NE(text.find("flagged"), std::string::npos);
}
