#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "neurotrack/apps.hpp"
#include "neurotrack/core.hpp"
#include "neurotrack/stimulus.hpp"
#include "neurotrack/synth_eeg.hpp"
#include "neurotrack/task.hpp"
#include "neurotrack/trca.hpp"
#include "neurotrack/velocity.hpp"

namespace neurotrack::io {

using json = nlohmann::json;

// ----------------------------------------------------------------------------
// JSON documents
// ----------------------------------------------------------------------------

json to_json(const FilterBankSpec& spec);
FilterBankSpec filter_bank_from_json(const json& j);

/// Missing keys keep their defaults; unknown keys are rejected.
json to_json(const SessionConfig& config);
SessionConfig config_from_json(const json& j);

/// Applies "dotted.key=value" overrides; the value is parsed as JSON when
/// it parses, otherwise taken as a string. Result is validated.
SessionConfig apply_overrides(const SessionConfig& config, const std::vector<std::string>& overrides);

SessionConfig load_config(const std::filesystem::path& path);

json to_json(const SyntheticSubject& subject);
SyntheticSubject subject_from_json(const json& j);

json to_json(const Vec2& v);
Vec2 vec2_from_json(const json& j);

json to_json(const TargetSpec& target);
TargetSpec target_from_json(const json& j);

/// One line of the trial log.
json to_json(const TrialRecord& record);
TrialRecord trial_from_json(const json& j);

json to_json(const stats::Summary& s);
json to_json(const MetricsReport& report);

/// Long format: subject,task,metric,value.
std::string metrics_csv(const std::vector<MetricsReport>& reports);

json to_json(const VelocityWeight& weight);
VelocityWeight velocity_weight_from_json(const json& j);

json to_json(const WnBank& bank);
json to_json(const JitterReport& report);
json to_json(const SnakeState& state);
json to_json(const PaintingState& state);

/// Filter norms, template shape and regression residual of a training run.
json training_summary(const TrainingResult& training);

// ----------------------------------------------------------------------------
// Files
// ----------------------------------------------------------------------------

/// Writes through a temporary file in the same directory and renames it
/// into place, so readers never see a partial file.
void atomic_write(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

std::string trial_log(const std::vector<TrialRecord>& records);
std::vector<TrialRecord> read_trial_log(const std::filesystem::path& path);

/// Versioned binary model: "NTMODEL\0", u32 version, u32 dims, then
/// little-endian f64 filters, templates and both velocity weights.
inline constexpr std::uint32_t kModelVersion = 1;
std::string encode_model(const TrainedModels& models);
TrainedModels decode_model(const std::string& bytes);
/// JSON metadata written beside the blob.
json model_metadata(const TrainedModels& models, const SessionConfig& config);

/// Origin of one recorded epoch in a session file.
struct EpochLabel {
    TaskKind task = TaskKind::stage1;
    int trial = 0;
    TargetSpec target;
    Vec2 cursor_px = Vec2::Zero();
};

/// Binary session file: "NTEEG001", u32 version, u32 channels, f64 rate,
/// u32 epoch length, u32 epoch count, then little-endian f32 samples,
/// channel-major within each epoch. Labels go to a JSON sidecar.
inline constexpr std::uint32_t kSessionVersion = 1;
std::string encode_session(const std::vector<EegEpoch>& epochs);
std::vector<EegEpoch> decode_session(const std::string& bytes);
json session_sidecar(const std::vector<EpochLabel>& labels, const SessionConfig& config);
std::vector<EpochLabel> labels_from_sidecar(const json& j);

}  // namespace neurotrack::io
