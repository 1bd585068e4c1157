#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "neurotrack/core.hpp"
#include "neurotrack/dsp.hpp"
#include "neurotrack/stats.hpp"
#include "neurotrack/stimulus.hpp"
#include "neurotrack/synth_eeg.hpp"
#include "neurotrack/trca.hpp"
#include "neurotrack/velocity.hpp"

namespace neurotrack {

enum class TaskKind { stage1, stage2, fixed, random, jitter };
/// open_loop marks training presentations, which never move the cursor.
enum class Outcome { hit, timeout, open_loop };

std::string to_string(TaskKind task);
std::string to_string(Outcome outcome);
TaskKind task_from_string(const std::string& s);
Outcome outcome_from_string(const std::string& s);

struct StepRecord {
    RhoVector rho;
    VelocityVector velocity;
    Vec2 cursor_px = Vec2::Zero();  // at the end of the step, or at the hit frame
    bool capped = false;
};

struct TrialRecord {
    int subject = 0;
    TaskKind task = TaskKind::fixed;
    int trial = 0;
    TargetSpec target;
    Vec2 start_px = Vec2::Zero();
    std::vector<StepRecord> steps;
    Outcome outcome = Outcome::timeout;
    double time_to_target_s = 0.0;  // the timeout for unsuccessful trials
    Vec2 end_px = Vec2::Zero();
    std::vector<Vec2> post_hit_path;  // one position per frame after the first hit
    std::vector<Vec2> path;           // one position per frame (jitter inspection)
};

struct TrainedModels {
    TrcaModel trca;
    VelocityWeight initial;
    VelocityWeight corrected;
};

struct TrainingResult {
    TrainedModels models;
    RegressionSet regression;
    std::vector<TargetSpec> stage1_labels;
    std::vector<TargetSpec> stage2_labels;  // one per regression row
    std::vector<EegEpoch> stage1_epochs;    // raw; only kept on request
    std::vector<EegEpoch> stage2_epochs;
    stats::Summary projection_length;       // |project(rho)| over Stage II
};

/// A synthetic subject looking at one session's stimulus: code bank, forward
/// model and designed filters, built once.
class Simulator {
public:
    Simulator(SessionConfig config, SyntheticSubject subject);

    const SessionConfig& config() const { return config_; }
    const SyntheticSubject& subject() const { return forward_.subject(); }
    const WnBank& bank() const { return forward_.bank(); }
    const StimulusLayout& layout() const { return layout_; }
    const dsp::FilterBank& filter_bank() const { return filters_; }

    VisualFieldWeights weights_for(const Vec2& gaze, const Vec2& cursor) const;
    /// One raw step epoch at the processing rate.
    EegEpoch observe(const Vec2& gaze, const Vec2& cursor, std::uint64_t stream) const;
    /// Epoch recorded while the cursor (and the stimulus around it) moves
    /// along `cursor_path`, one position per display frame.
    EegEpoch observe(const Vec2& gaze, std::span<const Vec2> cursor_path, std::uint64_t stream) const;
    EegEpoch preprocess(const EegEpoch& raw) const { return filters_.preprocess(raw); }

    /// Noise stream for (task, trial, step) under the session seed.
    std::uint64_t stream(TaskKind task, int trial, int step) const;

private:
    SessionConfig config_;
    StimulusLayout layout_;
    ForwardModel forward_;
    dsp::FilterBank filters_;
};

struct TrainingOptions {
    int repetitions = 6;
    bool keep_epochs = false;
};

/// Stage I (8 targets x reps) trains TRCA; Stage II (32 targets x reps) is
/// scored with it and regressed into the corrected velocity weight. No
/// cursor feedback in either stage.
TrainingResult run_training(const Simulator& sim, const TrainingOptions& options = {});

struct StepOutcome {
    RhoVector rho;
    VelocityVector velocity;
    bool capped = false;
};

/// Step s decodes the epoch recorded during [s, s+1) steps and moves the
/// cursor during the following step, so times count from the first epoch.
struct TrialOptions {
    int max_steps = 14;
    double timeout_s = 15.0;
    bool stop_on_hit = true;
    /// Frames recorded after the first hit (stop_on_hit trials only).
    int post_hit_frames = 0;
    bool record_path = false;
};

/// Decode loop shared by the batch tasks, the interactive session and the apps.
class ClosedLoop {
public:
    ClosedLoop(const Simulator& sim, const TrainedModels& models, bool use_corrected = true);

    const Simulator& simulator() const { return *sim_; }
    const VelocityWeight& weight() const { return *weight_; }

    /// Preprocess, correlate, apply the velocity weight and the w_s/2 speed cap.
    StepOutcome decode_epoch(const EegEpoch& raw) const;
    StepOutcome decode(const Vec2& gaze, const Vec2& cursor, std::uint64_t stream) const;
    StepOutcome decode(const Vec2& gaze, std::span<const Vec2> cursor_path, std::uint64_t stream) const;
    /// Rho only (for classification and the snake game).
    RhoVector score(const Vec2& gaze, const Vec2& cursor, std::uint64_t stream) const;

    TrialRecord run_trial(TaskKind task, int trial, const TargetSpec& target, const Vec2& start,
                          const TrialOptions& options) const;

private:
    const Simulator* sim_;
    const TrainedModels* models_;
    const VelocityWeight* weight_;
};

/// Per-frame cursor integration with compensated accumulation. One step of
/// frames moves the cursor by exactly the decoded velocity.
class CursorIntegrator {
public:
    explicit CursorIntegrator(const Vec2& start = Vec2::Zero());
    void add(const Vec2& displacement);
    Vec2 position() const;

private:
    double sx_, cx_ = 0.0, sy_, cy_ = 0.0;
};

/// 3 blocks x the 32 Stage II positions, shuffled within each block; the
/// cursor restarts at the center every trial.
std::vector<TrialRecord> run_fixed_task(const Simulator& sim, const TrainedModels& models,
                                        int subject_index = 0, bool use_corrected = true);

/// 12 chained trials to uniform random targets kept `random_target_margin_px`
/// from the screen edges.
std::vector<TrialRecord> run_random_task(const Simulator& sim, const TrainedModels& models,
                                         int subject_index = 0);

struct JitterReport {
    double radius_filtered_px = 0.0;
    double radius_raw_px = 0.0;
    std::vector<double> time_s;                // per frame
    std::vector<double> within_filtered;       // proportion of runs
    std::vector<double> within_raw;
    std::vector<TrialRecord> records;          // 9 targets x 3 reps, per-frame paths
    double proportion_at(double t_s, bool raw) const;
};

/// The cursor starts on each of 9 targets (3x3 grid at +-w_s/4) and is held
/// there by gaze for 10 s; reports the share of positions inside circles of
/// diag(1.9, 2.35) cm and diag(3.28, 3.78) cm diameter over time.
JitterReport run_jitter_inspection(const Simulator& sim, const TrainedModels& models, int subject_index = 0,
                                   int repetitions = 3, double duration_s = 10.0);

// ----------------------------------------------------------------------------
// Metrics
// ----------------------------------------------------------------------------

/// log2((D + S) / S) / T, S the target diameter.
double fitts_itr(double distance_px, double size_px, double time_s);

struct VelocityErrors {
    std::optional<double> angular_deg;  // missing for a zero decoded velocity
    double vector = 0.0;                // |I - v| / |I|
};

VelocityErrors velocity_errors(const Vec2& decoded, const Vec2& intended);
/// First-step errors of a closed-loop trial; the intended velocity is
/// target - start per step.
VelocityErrors velocity_errors(const TrialRecord& record);

/// Fraction of hit trials whose cursor stays on the target for `dt_s`
/// after the first hit (continuous hold, so the curve never increases).
double post_hit_hold_rate(const std::vector<TrialRecord>& records, double dt_s, double refresh_rate_hz);

struct HoldPoint {
    double dt_s = 0.0;
    double rate = 0.0;
};

struct MetricsReport {
    int subject = 0;
    TaskKind task = TaskKind::fixed;
    int n_trials = 0;
    int n_hits = 0;
    double success_rate = 0.0;
    double fitts_itr_bps = 0.0;  // mean of per-trial ITR over hits
    stats::Summary fitts_itr;
    stats::Summary time_to_target;
    stats::Summary time_to_target_inner;
    stats::Summary time_to_target_outer;
    stats::Summary angular_error_deg;
    int angular_missing = 0;
    stats::Summary vector_error;
    int degenerate_first_steps = 0;
    std::optional<stats::Summary> projection_length;
    std::vector<HoldPoint> post_hit_hold_rate;
};

/// Aggregates one subject's trials of one task. Timeouts count against the
/// success rate only; ITR and time-to-target use hits alone. Velocity errors
/// are reported for the fixed task.
MetricsReport compute_metrics(const std::vector<TrialRecord>& records, const SessionConfig& config,
                              std::optional<stats::Summary> projection_length = std::nullopt);

/// One batch task on a trained session: the shared entry point of the CLI
/// and the service, so both emit identical logs for identical seeds.
struct TaskRun {
    std::vector<TrialRecord> records;
    MetricsReport metrics;
    std::optional<JitterReport> jitter;
};

TaskRun run_task(const Simulator& sim, const TrainingResult& training, TaskKind task, int subject_index = 0);

}  // namespace neurotrack
