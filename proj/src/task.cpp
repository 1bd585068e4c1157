#include "neurotrack/task.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "neurotrack/numeric.hpp"
#include "neurotrack/random.hpp"

namespace neurotrack {

std::string to_string(TaskKind task) {
    switch (task) {
        case TaskKind::stage1: return "stage1";
        case TaskKind::stage2: return "stage2";
        case TaskKind::fixed: return "fixed";
        case TaskKind::random: return "random";
        case TaskKind::jitter: return "jitter";
    }
    return "unknown";
}

std::string to_string(Outcome outcome) {
    switch (outcome) {
        case Outcome::hit: return "hit";
        case Outcome::timeout: return "timeout";
        case Outcome::open_loop: return "open_loop";
    }
    return "unknown";
}

TaskKind task_from_string(const std::string& s) {
    for (auto t : {TaskKind::stage1, TaskKind::stage2, TaskKind::fixed, TaskKind::random, TaskKind::jitter})
        if (to_string(t) == s) return t;
    throw InvalidArgument("unknown task: " + s);
}

Outcome outcome_from_string(const std::string& s) {
    for (auto o : {Outcome::hit, Outcome::timeout, Outcome::open_loop})
        if (to_string(o) == s) return o;
    throw InvalidArgument("unknown outcome: " + s);
}

// ----------------------------------------------------------------------------
// Simulator
// ----------------------------------------------------------------------------

namespace {

SessionConfig validated(SessionConfig config) {
    config.validate();
    return config;
}

WnBank bank_for(const SessionConfig& config) {
    return generate_wn_bank(config.n_regions, config.frames_per_step(), config.rng_seed);
}

}  // namespace

Simulator::Simulator(SessionConfig config, SyntheticSubject subject)
    : config_(validated(std::move(config))),
      layout_(make_layout(config_.n_regions)),
      forward_(std::move(subject), bank_for(config_), config_.processing_rate_hz, config_.step_seconds),
      filters_(config_.filter_bank) {
    forward_.subject().validate(config_.n_regions);
}

VisualFieldWeights Simulator::weights_for(const Vec2& gaze, const Vec2& cursor) const {
    return visual_field_weights(gaze, cursor, layout_.translated_to(cursor), subject().attention_sigma_px, {},
                                subject().attention_aspect);
}

EegEpoch Simulator::observe(const Vec2& gaze, const Vec2& cursor, std::uint64_t stream) const {
    return forward_.simulate(weights_for(gaze, cursor), config_.step_seconds, stream);
}

EegEpoch Simulator::observe(const Vec2& gaze, std::span<const Vec2> cursor_path, std::uint64_t stream) const {
    // attention is re-evaluated a few times per step; finer sampling changes
    // the correlations negligibly
    constexpr std::size_t kSegments = 6;
    if (cursor_path.empty()) throw InvalidArgument("observe: empty cursor path");
    const std::size_t n = cursor_path.size();
    std::vector<VisualFieldWeights> segments;
    for (std::size_t k = 0; k < kSegments; ++k) {
        const std::size_t i = std::min((2 * k + 1) * n / (2 * kSegments), n - 1);
        segments.push_back(weights_for(gaze, cursor_path[i]));
    }
    return forward_.simulate(segments, config_.step_seconds, stream);
}

std::uint64_t Simulator::stream(TaskKind task, int trial, int step) const {
    return derive_seed(config_.rng_seed, {static_cast<std::uint64_t>(task) + 1, static_cast<std::uint64_t>(trial),
                                          static_cast<std::uint64_t>(step)});
}

// ----------------------------------------------------------------------------
// Training
// ----------------------------------------------------------------------------

TrainingResult run_training(const Simulator& sim, const TrainingOptions& options) {
    if (options.repetitions < 2) throw InvalidArgument("training needs at least 2 repetitions");
    const auto& config = sim.config();
    TrainingResult out;

    const auto targets1 = stage1_targets(config);
    std::vector<std::vector<EegEpoch>> trials(targets1.size());
    int trial = 0;
    for (int rep = 0; rep < options.repetitions; ++rep) {
        for (std::size_t i = 0; i < targets1.size(); ++i, ++trial) {
            auto raw = sim.observe(targets1[i].position_px, Vec2::Zero(), sim.stream(TaskKind::stage1, trial, 0));
            trials[i].push_back(sim.preprocess(raw));
            out.stage1_labels.push_back(targets1[i]);
            if (options.keep_epochs) out.stage1_epochs.push_back(std::move(raw));
        }
    }
    out.models.trca = train_trca(trials, sim.filter_bank());
    out.models.initial = initial_velocity_weight(config);

    const auto targets2 = stage2_targets(config);
    std::vector<double> lengths;
    trial = 0;
    for (int rep = 0; rep < options.repetitions; ++rep) {
        for (const auto& target : targets2) {
            auto raw = sim.observe(target.position_px, Vec2::Zero(), sim.stream(TaskKind::stage2, trial++, 0));
            const RhoVector rho = correlate(out.models.trca, sim.preprocess(raw), sim.filter_bank());
            out.regression.append(rho, target.position_px);
            lengths.push_back(project(rho, sim.layout()).norm());
            out.stage2_labels.push_back(target);
            if (options.keep_epochs) out.stage2_epochs.push_back(std::move(raw));
        }
    }
    out.models.corrected = train_velocity_weight(out.regression, config.relu_before_corrected);
    out.projection_length = stats::summarize(lengths);
    return out;
}

// ----------------------------------------------------------------------------
// Closed loop
// ----------------------------------------------------------------------------

CursorIntegrator::CursorIntegrator(const Vec2& start) : sx_(start.x()), sy_(start.y()) {}

void CursorIntegrator::add(const Vec2& d) {
    auto step = [](double& s, double& c, double x) {
        const double t = s + x;
        if (std::abs(s) >= std::abs(x)) {
            c += (s - t) + x;
        } else {
            c += (x - t) + s;
        }
        s = t;
    };
    step(sx_, cx_, d.x());
    step(sy_, cy_, d.y());
}

Vec2 CursorIntegrator::position() const { return {sx_ + cx_, sy_ + cy_}; }

ClosedLoop::ClosedLoop(const Simulator& sim, const TrainedModels& models, bool use_corrected)
    : sim_(&sim), models_(&models), weight_(use_corrected ? &models.corrected : &models.initial) {
    if (weight_->n_regions() != sim.config().n_regions || models.trca.n_regions() != sim.config().n_regions)
        throw InvalidArgument("models do not match the session region count");
}

StepOutcome ClosedLoop::decode_epoch(const EegEpoch& raw) const {
    StepOutcome out;
    out.rho = correlate(models_->trca, sim_->preprocess(raw), sim_->filter_bank());
    const auto v = decode_velocity(out.rho, *weight_, sim_->config().relu_before_corrected);
    out.velocity = cap_velocity(v, sim_->config().screen_width_px / 2.0, &out.capped);
    return out;
}

StepOutcome ClosedLoop::decode(const Vec2& gaze, const Vec2& cursor, std::uint64_t stream) const {
    return decode_epoch(sim_->observe(gaze, cursor, stream));
}

StepOutcome ClosedLoop::decode(const Vec2& gaze, std::span<const Vec2> cursor_path, std::uint64_t stream) const {
    return decode_epoch(sim_->observe(gaze, cursor_path, stream));
}

RhoVector ClosedLoop::score(const Vec2& gaze, const Vec2& cursor, std::uint64_t stream) const {
    return correlate(models_->trca, sim_->preprocess(sim_->observe(gaze, cursor, stream)), sim_->filter_bank());
}

namespace {

Vec2 noisy_gaze(const Vec2& target, double sigma, std::uint64_t stream) {
    if (sigma <= 0.0) return target;
    Rng rng(derive_seed(stream, {0x6a2e}));
    const double gx = rng.normal();
    const double gy = rng.normal();
    return target + sigma * Vec2(gx, gy);
}

}  // namespace

TrialRecord ClosedLoop::run_trial(TaskKind task, int trial, const TargetSpec& target, const Vec2& start,
                                  const TrialOptions& options) const {
    const auto& config = sim_->config();
    const int frames = config.frames_per_step();
    TrialRecord rec;
    rec.task = task;
    rec.trial = trial;
    rec.target = target;
    rec.start_px = start;
    rec.outcome = Outcome::timeout;
    rec.time_to_target_s = options.timeout_s;

    CursorIntegrator cursor(start);
    // the epoch decoded at step s is recorded while step s-1 moves the cursor
    std::vector<Vec2> moving{start};
    std::vector<Vec2> next;
    bool hit = false;
    for (int s = 0;; ++s) {
        if (!hit && s >= options.max_steps) break;
        if (hit && static_cast<int>(rec.post_hit_path.size()) >= options.post_hit_frames) break;

        const std::uint64_t stream = sim_->stream(task, trial, s);
        const Vec2 gaze = noisy_gaze(target.position_px, config.gaze_noise_px, stream);
        const StepOutcome step = decode(gaze, moving, stream);
        const auto profile = decay_profile(step.velocity, frames);
        next.clear();

        for (int f = 0; f < frames; ++f) {
            cursor.add(profile[f]);
            const Vec2 p = cursor.position();
            next.push_back(p);
            if (options.record_path) rec.path.push_back(p);
            if (hit) {
                if (static_cast<int>(rec.post_hit_path.size()) >= options.post_hit_frames) break;
                rec.post_hit_path.push_back(p);
            } else if (options.stop_on_hit && hit_test(p, target)) {
                hit = true;
                rec.outcome = Outcome::hit;
                rec.time_to_target_s = (s + 1) * config.step_seconds + (f + 1) / config.refresh_rate_hz;
                rec.end_px = p;
                rec.steps.push_back({step.rho, step.velocity, p, step.capped});
            }
        }
        if (!hit) rec.steps.push_back({step.rho, step.velocity, cursor.position(), step.capped});
        moving.swap(next);
    }
    if (rec.outcome != Outcome::hit) rec.end_px = cursor.position();
    return rec;
}

// ----------------------------------------------------------------------------
// Tasks
// ----------------------------------------------------------------------------

namespace {

TrialOptions trial_options(const SessionConfig& config) {
    TrialOptions o;
    o.max_steps = config.max_steps();
    o.timeout_s = config.trial_timeout_seconds;
    o.post_hit_frames = static_cast<int>(std::lround(config.post_hit_seconds * config.refresh_rate_hz));
    return o;
}

template <class T>
void shuffle(std::vector<T>& xs, Rng& rng) {
    for (std::size_t i = xs.size(); i > 1; --i) std::swap(xs[i - 1], xs[rng.below(i)]);
}

}  // namespace

std::vector<TrialRecord> run_fixed_task(const Simulator& sim, const TrainedModels& models, int subject_index,
                                        bool use_corrected) {
    constexpr int kBlocks = 3;
    const ClosedLoop loop(sim, models, use_corrected);
    const auto positions = stage2_targets(sim.config());
    const auto options = trial_options(sim.config());
    std::vector<TrialRecord> out;
    int trial = 0;
    for (int b = 0; b < kBlocks; ++b) {
        auto block = positions;
        Rng rng(derive_seed(sim.config().rng_seed, {0xf1ed, static_cast<std::uint64_t>(b)}));
        shuffle(block, rng);
        for (const auto& target : block) {
            auto rec = loop.run_trial(TaskKind::fixed, trial++, target, Vec2::Zero(), options);
            rec.subject = subject_index;
            out.push_back(std::move(rec));
        }
    }
    return out;
}

std::vector<TrialRecord> run_random_task(const Simulator& sim, const TrainedModels& models, int subject_index) {
    constexpr int kTrials = 12;
    const auto& config = sim.config();
    const ClosedLoop loop(sim, models, true);
    const auto options = trial_options(config);
    Rng rng(derive_seed(config.rng_seed, {0x7a4d}));
    const double hx = config.screen_width_px / 2.0 - config.random_target_margin_px;
    const double hy = config.screen_height_px / 2.0 - config.random_target_margin_px;

    std::vector<TrialRecord> out;
    Vec2 start = Vec2::Zero();
    for (int t = 0; t < kTrials; ++t) {
        TargetSpec target;
        target.radius_px = config.target_radius_px;
        do {
            const double x = rng.uniform(-hx, hx);
            const double y = rng.uniform(-hy, hy);
            target.position_px = {x, y};
        } while (hit_test(start, target));
        auto rec = loop.run_trial(TaskKind::random, t, target, start, options);
        rec.subject = subject_index;
        start = rec.end_px;
        out.push_back(std::move(rec));
    }
    return out;
}

double JitterReport::proportion_at(double t_s, bool raw) const {
    if (time_s.empty()) throw InvalidArgument("empty jitter report");
    const auto it = std::lower_bound(time_s.begin(), time_s.end(), t_s - 1e-9);
    const std::size_t k = it == time_s.end() ? time_s.size() - 1 : static_cast<std::size_t>(it - time_s.begin());
    return raw ? within_raw[k] : within_filtered[k];
}

JitterReport run_jitter_inspection(const Simulator& sim, const TrainedModels& models, int subject_index,
                                   int repetitions, double duration_s) {
    const auto& config = sim.config();
    const ClosedLoop loop(sim, models, true);
    JitterReport report;
    report.radius_filtered_px = std::hypot(1.9, 2.35) * config.px_per_cm / 2.0;
    report.radius_raw_px = std::hypot(3.28, 3.78) * config.px_per_cm / 2.0;

    TrialOptions options;
    options.max_steps = static_cast<int>(std::lround(duration_s / config.step_seconds));
    options.stop_on_hit = false;
    options.record_path = true;

    const double q = config.screen_width_px / 4.0;
    int trial = 0;
    for (int rep = 0; rep < repetitions; ++rep) {
        for (int iy = 1; iy >= -1; --iy) {
            for (int ix = -1; ix <= 1; ++ix) {
                TargetSpec target;
                target.position_px = {ix * q, iy * q};
                target.radius_px = config.target_radius_px;
                auto rec = loop.run_trial(TaskKind::jitter, trial++, target, target.position_px, options);
                rec.subject = subject_index;
                rec.outcome = Outcome::open_loop;
                rec.time_to_target_s = 0.0;
                report.records.push_back(std::move(rec));
            }
        }
    }

    const std::size_t n_frames = report.records.front().path.size();
    for (std::size_t k = 0; k < n_frames; ++k) {
        int in_f = 0, in_r = 0;
        for (const auto& rec : report.records) {
            const double d = (rec.path[k] - rec.target.position_px).norm();
            in_f += d <= report.radius_filtered_px;
            in_r += d <= report.radius_raw_px;
        }
        const double n = static_cast<double>(report.records.size());
        report.time_s.push_back((k + 1) / config.refresh_rate_hz);
        report.within_filtered.push_back(in_f / n);
        report.within_raw.push_back(in_r / n);
    }
    return report;
}

// ----------------------------------------------------------------------------
// Metrics
// ----------------------------------------------------------------------------

double fitts_itr(double distance_px, double size_px, double time_s) {
    if (!(size_px > 0.0)) throw InvalidArgument("fitts_itr: size must be positive");
    if (!(time_s > 0.0)) throw InvalidArgument("fitts_itr: time must be positive");
    if (distance_px < 0.0) throw InvalidArgument("fitts_itr: distance must be non-negative");
    return std::log2((distance_px + size_px) / size_px) / time_s;
}

VelocityErrors velocity_errors(const Vec2& decoded, const Vec2& intended) {
    const double in = intended.norm();
    if (in == 0.0) throw InvalidArgument("velocity_errors: zero intended velocity");
    VelocityErrors e;
    e.vector = (intended - decoded).norm() / in;
    const double dn = decoded.norm();
    if (dn > 0.0) {
        const double c = std::clamp(decoded.dot(intended) / (dn * in), -1.0, 1.0);
        // atan2 keeps precision near 0 and 180 degrees
        const double s = std::abs(decoded.x() * intended.y() - decoded.y() * intended.x()) / (dn * in);
        e.angular_deg = std::atan2(s, c) * 180.0 / std::numbers::pi;
    }
    return e;
}

VelocityErrors velocity_errors(const TrialRecord& record) {
    if (record.steps.empty()) throw InvalidArgument("velocity_errors: trial has no steps");
    return velocity_errors(record.steps.front().velocity.v, record.target.position_px - record.start_px);
}

double post_hit_hold_rate(const std::vector<TrialRecord>& records, double dt_s, double refresh_rate_hz) {
    if (dt_s < 0.0) throw InvalidArgument("post_hit_hold_rate: negative dt");
    const auto k = static_cast<std::size_t>(std::lround(dt_s * refresh_rate_hz));
    int hits = 0, held = 0;
    for (const auto& rec : records) {
        if (rec.outcome != Outcome::hit) continue;
        ++hits;
        if (rec.post_hit_path.size() < k)
            throw InvalidArgument("post_hit_hold_rate: trial " + std::to_string(rec.trial) +
                                  " was not simulated past the requested interval");
        bool stays = true;
        for (std::size_t j = 0; j < k && stays; ++j) stays = hit_test(rec.post_hit_path[j], rec.target);
        held += stays;
    }
    if (hits == 0) throw InvalidArgument("post_hit_hold_rate: no hit trials");
    return static_cast<double>(held) / hits;
}

MetricsReport compute_metrics(const std::vector<TrialRecord>& records, const SessionConfig& config,
                              std::optional<stats::Summary> projection_length) {
    MetricsReport m;
    if (records.empty()) throw InvalidArgument("compute_metrics: no trials");
    m.subject = records.front().subject;
    m.task = records.front().task;
    m.n_trials = static_cast<int>(records.size());
    m.projection_length = projection_length;

    std::vector<double> itr, ttt, ttt_in, ttt_out, ang, vec;
    for (const auto& rec : records) {
        if (rec.outcome == Outcome::hit) {
            ++m.n_hits;
            const double d = (rec.target.position_px - rec.start_px).norm();
            itr.push_back(fitts_itr(d, 2.0 * rec.target.radius_px, rec.time_to_target_s));
            ttt.push_back(rec.time_to_target_s);
            if (rec.target.ring == Ring::inner) ttt_in.push_back(rec.time_to_target_s);
            if (rec.target.ring == Ring::outer) ttt_out.push_back(rec.time_to_target_s);
        }
        if (rec.task == TaskKind::fixed && !rec.steps.empty()) {
            const auto& rho = rec.steps.front().rho.rho;
            if (std::all_of(rho.begin(), rho.end(), [](double r) { return r == 0.0; })) {
                ++m.degenerate_first_steps;
                continue;
            }
            const auto e = velocity_errors(rec);
            vec.push_back(e.vector);
            if (e.angular_deg) {
                ang.push_back(*e.angular_deg);
            } else {
                ++m.angular_missing;
            }
        }
    }
    m.success_rate = static_cast<double>(m.n_hits) / m.n_trials;
    m.fitts_itr = stats::summarize(itr);
    m.fitts_itr_bps = m.fitts_itr.mean;
    m.time_to_target = stats::summarize(ttt);
    m.time_to_target_inner = stats::summarize(ttt_in);
    m.time_to_target_outer = stats::summarize(ttt_out);
    m.angular_error_deg = stats::summarize(ang);
    m.vector_error = stats::summarize(vec);

    if (m.n_hits > 0) {
        const int points = static_cast<int>(std::lround(config.post_hit_seconds * 10.0));
        try {
            for (int i = 0; i <= points; ++i) {
                const double dt = i / 10.0;
                m.post_hit_hold_rate.push_back({dt, post_hit_hold_rate(records, dt, config.refresh_rate_hz)});
            }
        } catch (const InvalidArgument&) {
            // trials were not extended past the hit; no curve
            m.post_hit_hold_rate.clear();
        }
    }
    return m;
}

TaskRun run_task(const Simulator& sim, const TrainingResult& training, TaskKind task, int subject_index) {
    TaskRun run;
    switch (task) {
        case TaskKind::fixed:
            run.records = run_fixed_task(sim, training.models, subject_index);
            break;
        case TaskKind::random:
            run.records = run_random_task(sim, training.models, subject_index);
            break;
        case TaskKind::jitter:
            run.jitter = run_jitter_inspection(sim, training.models, subject_index);
            run.records = run.jitter->records;
            break;
        default:
            throw InvalidArgument("run_task: " + to_string(task) + " is not a closed-loop task");
    }
    run.metrics = compute_metrics(run.records, sim.config(), training.projection_length);
    run.metrics.subject = subject_index;
    run.metrics.task = task;
    return run;
}

}  // namespace neurotrack
