// Behaviour of the system trained by the acceptance run on fresh probes.

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>

#include "frfnet/pipeline.hpp"
#include "frfnet/seeds.hpp"

using namespace frfnet;
namespace fs = std::filesystem;

namespace {

class TrainedSystem : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    if (!fs::exists(fs::path(FRFNET_RUN_DIR) / "model_severity_crack.frfd")) return;
    const std::string dir = FRFNET_RUN_DIR;
    config_ = load_run_config(std::string(FRFNET_CONFIG_DIR) + "/run_default.cfg");
    bases_ = BasisPair{basis_from_container(read_container(dir + "/basis_accel.frfd")),
                       basis_from_container(read_container(dir + "/basis_strain.frfd"))};
    localize_ = model_from_container(read_container(dir + "/model_localize.frfd"));
    crack_ = model_from_container(read_container(dir + "/model_severity_crack.frfd"));
    data_ = fingerprints_from_container(read_container(dir + "/fingerprints.frfd"));
    ready_ = true;
  }

  void SetUp() override {
    if (!ready_) GTEST_SKIP() << "no trained system in " << FRFNET_RUN_DIR;
  }

  static FeatureVector probe(const DamageScenario& scenario, std::uint64_t counter) {
    ScenarioRecord rec;
    rec.scenario = scenario;
    rec.seed = derive_seed(config_.master_seed, SeedStage::probe, counter);
    return project(synthesize_frf(build_panel(config_.panel), rec, config_.simulation), bases_.accel, bases_.strain);
  }

  static inline bool ready_ = false;
  static inline RunConfig config_;
  static inline BasisPair bases_;
  static inline TaskModel localize_, crack_;
  static inline Dataset data_;
};

TEST_F(TrainedSystem, HealthyTestScenariosFlagNoRivet) {
  const auto rows = data_.rows(Split::test, DamageKind::healthy);
  ASSERT_FALSE(rows.empty());
  for (int row : rows) EXPECT_TRUE(localize(data_.feature(row), localize_).flagged().empty()) << "row " << row;
}

TEST_F(TrainedSystem, UnseenCrackLengthEstimatedWithin35Percent) {
  for (std::uint64_t k = 0; k < 5; ++k) {
    const auto f = probe(DamageScenario::single(DamageKind::crack, 7, 10.88), 100 + k);
    EXPECT_NEAR(estimate_severity(f, crack_, DamageKind::crack).value, 10.88, 0.35 * 10.88);
    EXPECT_EQ(localize(f, localize_).ranked[0], 7);
  }
}

TEST_F(TrainedSystem, TwoRivetCrackRanksBothRivetsFirst) {
  const auto f = probe(DamageScenario{DamageKind::crack, {7, 8}, {10.88, 10.88}}, 200);
  const auto v = localize(f, localize_);
  const std::vector<int> top{v.ranked[0], v.ranked[1]};
  EXPECT_TRUE(std::is_permutation(top.begin(), top.end(), std::vector<int>{7, 8}.begin()));
}

TEST_F(TrainedSystem, HealthyCrackSeverityBelowSmallestTrainedLength) {
  for (int row : data_.rows(Split::test, DamageKind::healthy))
    EXPECT_LT(estimate_severity(data_.feature(row), crack_, DamageKind::crack).raw, 2.25) << "row " << row;
}

TEST_F(TrainedSystem, InferOnHealthyDatasetScenarioFlagsNothing) {
  const int row = data_.rows(Split::test, DamageKind::healthy).front();
  const auto r = cmd_infer(std::string(FRFNET_RUN_DIR) + "/model_localize.frfd",
                           std::string(FRFNET_RUN_DIR) + "/dataset.frfd", 0.5, row);
  ASSERT_TRUE(r.location.has_value());
  EXPECT_TRUE(r.location->flagged().empty());
}

}  // namespace
