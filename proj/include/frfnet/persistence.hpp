#pragma once

// Container schemas for every pipeline artifact.
//
//   frf_matrix    shape [channels, bins]            complex128
//   frf_dataset   shape [scenarios, channels, bins] complex128
//   pca_basis     shape [channels, 1 + n_keep, features] float64
//                 (per channel: mean row, then one row per component)
//   fingerprints  shape [scenarios, fingerprint length] float64
//   mlp_model     shape [parameters] float64
//                 (per layer: weights row-major, then bias; then input
//                 mean and input scale)

#include <string>
#include <vector>

#include "frfnet/container.hpp"
#include "frfnet/damage_id.hpp"

namespace frfnet {

inline constexpr int kSchemaVersion = 1;

nlohmann::json to_json(const DamageScenario& scenario);
DamageScenario scenario_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ScenarioRecord& record);
ScenarioRecord record_from_json(const nlohmann::json& j);

Container to_container(const FrfMatrix& frf);
FrfMatrix frf_from_container(const Container& c);

/// All measured FRFs of a run with their scenario records. `run` is stored
/// verbatim under metadata.run.
Container dataset_container(const std::vector<ScenarioRecord>& records, const std::vector<FrfMatrix>& frfs,
                            const nlohmann::json& run = nlohmann::json::object());
void dataset_from_container(const Container& c, std::vector<ScenarioRecord>& records, std::vector<FrfMatrix>& frfs);

Container to_container(const PcaBasis& basis);
/// Rebuilds the basis and checks that its content hash equals the stored id.
PcaBasis basis_from_container(const Container& c);

Container to_container(const Dataset& data);
Dataset fingerprints_from_container(const Container& c);

Container to_container(const TaskModel& model);
TaskModel model_from_container(const Container& c);

}  // namespace frfnet
