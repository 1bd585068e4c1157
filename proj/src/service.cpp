#include "neurotrack/service.hpp"

#include <cmath>
#include <iomanip>
#include <regex>
#include <sstream>

#include "neurotrack/io.hpp"
#include "neurotrack/random.hpp"
#include "neurotrack/velocity.hpp"

namespace neurotrack::service {

std::string to_string(Phase phase) {
    switch (phase) {
        case Phase::idle: return "idle";
        case Phase::training: return "training";
        case Phase::fixed: return "fixed";
        case Phase::random: return "random";
        case Phase::jitter: return "jitter";
        case Phase::tracking: return "tracking";
        case Phase::painting: return "painting";
        case Phase::snake: return "snake";
    }
    return "unknown";
}

SubjectChoice subject_from_request(const json& j) {
    SubjectChoice c;
    if (j.is_null() || (j.is_string() && j.get<std::string>() == "default")) {
        c.subject = default_subject();
        c.description = "default";
        return c;
    }
    if (!j.is_object()) throw HttpError(422, "subject must be \"default\" or an object");
    try {
        if (j.contains("explicit")) {
            c.subject = io::subject_from_json(j["explicit"]);
            c.index = j.value("index", 0);
        } else if (j.contains("cohort_seed")) {
            const auto seed = j.at("cohort_seed").get<std::uint64_t>();
            const int size = j.value("cohort_size", 1);
            c.index = j.value("index", 0);
            if (c.index < 0 || c.index >= size) throw HttpError(422, "subject index outside the cohort");
            c.subject = make_cohort(size, seed).at(static_cast<std::size_t>(c.index));
        } else {
            throw HttpError(422, "subject needs cohort_seed or explicit");
        }
    } catch (const json::exception& e) {
        throw HttpError(422, std::string("subject: ") + e.what());
    } catch (const InvalidArgument& e) {
        throw HttpError(422, e.what());
    }
    c.description = j;
    return c;
}

// ----------------------------------------------------------------------------
// Worker
// ----------------------------------------------------------------------------

Worker::Worker() : thread_([this] { run(); }) {}

Worker::~Worker() {
    {
        std::lock_guard lock(mu_);
        stopping_ = true;
    }
    cv_.notify_one();
    thread_.join();
}

void Worker::run() {
    for (;;) {
        std::function<void()> job;
        {
            std::unique_lock lock(mu_);
            cv_.wait(lock, [this] { return stopping_ || !jobs_.empty(); });
            if (jobs_.empty()) return;
            job = std::move(jobs_.front());
            jobs_.pop_front();
        }
        job();
    }
}

// ----------------------------------------------------------------------------
// Session
// ----------------------------------------------------------------------------

Session::Session(std::string id, SessionConfig config, SubjectChoice subject)
    : id_(std::move(id)), config_(std::move(config)), subject_(std::move(subject)) {
    try {
        sim_ = std::make_shared<const Simulator>(config_, subject_.subject);
    } catch (const InvalidArgument& e) {
        throw HttpError(422, e.what());
    }
}

void Session::claim(Phase from, Phase to) {
    Phase expected = from;
    if (!phase_.compare_exchange_strong(expected, to)) {
        throw HttpError(409, "session is busy (" + to_string(expected) + ")");
    }
}

namespace {

/// Restores the idle phase when a job leaves, also on errors.
struct PhaseGuard {
    std::atomic<Phase>& phase;
    ~PhaseGuard() { phase.store(Phase::idle); }
};

}  // namespace

json Session::train() {
    claim(Phase::idle, Phase::training);
    PhaseGuard guard{phase_};
    auto sim = sim_;
    auto result = worker_.submit([sim] { return std::make_shared<const TrainingResult>(run_training(*sim)); }).get();
    std::lock_guard lock(mu_);
    training_ = result;
    return io::training_summary(*result);
}

json Session::run_task(TaskKind task) {
    if (task != TaskKind::fixed && task != TaskKind::random && task != TaskKind::jitter) {
        throw HttpError(422, "unknown task " + to_string(task));
    }
    std::shared_ptr<const TrainingResult> training;
    {
        std::lock_guard lock(mu_);
        training = training_;
    }
    if (!training) throw HttpError(409, "session is not trained");
    const Phase phase = task == TaskKind::fixed ? Phase::fixed : task == TaskKind::random ? Phase::random : Phase::jitter;
    claim(Phase::idle, phase);
    PhaseGuard guard{phase_};
    auto sim = sim_;
    const int index = subject_.index;
    TaskRun run = worker_.submit([sim, training, task, index] { return neurotrack::run_task(*sim, *training, task, index); }).get();
    std::lock_guard lock(mu_);
    records_.insert(records_.end(), run.records.begin(), run.records.end());
    metrics_.push_back(run.metrics);
    if (run.jitter) jitter_ = run.jitter;
    json out = {{"task", to_string(task)}, {"n_trials", run.records.size()}, {"metrics", io::to_json(run.metrics)}};
    if (run.jitter) out["jitter"] = io::to_json(*run.jitter);
    return out;
}

json Session::state() const {
    std::lock_guard lock(mu_);
    json metrics = json::array();
    for (const auto& m : metrics_) metrics.push_back(io::to_json(m));
    return {{"id", id_},
            {"phase", to_string(phase_.load())},
            {"trained", training_ != nullptr},
            {"subject", subject_.description},
            {"subject_index", subject_.index},
            {"config", io::to_json(config_)},
            {"n_records", records_.size()},
            {"metrics", metrics},
            {"has_painting", painting_.has_value()}};
}

std::string Session::export_item(const std::string& what, std::string& content_type) const {
    std::lock_guard lock(mu_);
    content_type = "application/json";
    auto need_training = [this] {
        if (!training_) throw HttpError(409, "session is not trained");
    };
    if (what == "trials") {
        content_type = "application/x-ndjson";
        return io::trial_log(records_);
    }
    if (what == "metrics") {
        json a = json::array();
        for (const auto& m : metrics_) a.push_back(io::to_json(m));
        return a.dump(2) + "\n";
    }
    if (what == "metrics_csv") {
        content_type = "text/csv";
        return io::metrics_csv(metrics_);
    }
    if (what == "config") return io::to_json(config_).dump(2) + "\n";
    if (what == "wn_bank") return io::to_json(sim_->bank()).dump() + "\n";
    if (what == "model") {
        need_training();
        content_type = "application/octet-stream";
        return io::encode_model(training_->models);
    }
    if (what == "model_meta") {
        need_training();
        return io::model_metadata(training_->models, config_).dump(2) + "\n";
    }
    if (what == "velocity_weight") {
        need_training();
        return json{{"initial", io::to_json(training_->models.initial)},
                    {"corrected", io::to_json(training_->models.corrected)}}
                   .dump(2) +
               "\n";
    }
    if (what == "jitter") {
        if (!jitter_) throw HttpError(409, "no jitter inspection has run");
        return io::to_json(*jitter_).dump() + "\n";
    }
    if (what == "painting_svg") {
        if (!painting_) throw HttpError(409, "no painting recorded");
        content_type = "image/svg+xml";
        return painting_svg(*painting_);
    }
    throw HttpError(404, "unknown export '" + what + "'");
}

std::unique_ptr<InteractiveLoop> Session::open_stream() {
    std::shared_ptr<const TrainingResult> training;
    {
        std::lock_guard lock(mu_);
        training = training_;
    }
    if (!training) throw HttpError(409, "session is not trained");
    claim(Phase::idle, Phase::tracking);
    return std::make_unique<InteractiveLoop>(sim_, training, [this](Phase p) { set_interactive_phase(p); });
}

void Session::set_interactive_phase(Phase phase) { phase_.store(phase); }

void Session::record_painting(const PaintingState& painting) {
    std::lock_guard lock(mu_);
    if (!painting.strokes.empty()) painting_ = painting;
}

// ----------------------------------------------------------------------------
// Session manager
// ----------------------------------------------------------------------------

std::shared_ptr<Session> SessionManager::create(SessionConfig config, SubjectChoice subject) {
    std::lock_guard lock(mu_);
    std::ostringstream id;
    id << 's' << std::setw(4) << std::setfill('0') << next_++;
    auto s = std::make_shared<Session>(id.str(), std::move(config), std::move(subject));
    sessions_[s->id()] = s;
    return s;
}

std::shared_ptr<Session> SessionManager::find(const std::string& id) const {
    std::lock_guard lock(mu_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw HttpError(404, "unknown session '" + id + "'");
    return it->second;
}

std::vector<std::string> SessionManager::ids() const {
    std::lock_guard lock(mu_);
    std::vector<std::string> out;
    for (const auto& [id, s] : sessions_) out.push_back(id);
    return out;
}

// ----------------------------------------------------------------------------
// HTTP routing
// ----------------------------------------------------------------------------

namespace {

Response json_response(int status, const json& body) { return {status, body.dump(2) + "\n", "application/json"}; }

json parse_body(const std::string& body) {
    if (body.empty()) return json::object();
    json j = json::parse(body, nullptr, false);
    if (j.is_discarded()) throw HttpError(400, "request body is not valid JSON");
    return j;
}

}  // namespace

Response ApiHandler::handle(const std::string& method, const std::string& target, const std::string& body) {
    static const std::regex kSession(R"(^/sessions/([A-Za-z0-9_-]+)(/.*)?$)");
    const std::string path = target.substr(0, target.find('?'));
    try {
        if (path == "/sessions") {
            if (method == "GET") return json_response(200, {{"sessions", sessions_.ids()}});
            if (method != "POST") throw HttpError(405, "method not allowed");
            const json req = parse_body(body);
            SessionConfig config;
            try {
                config = req.contains("config") ? io::config_from_json(req["config"]) : SessionConfig{};
            } catch (const InvalidArgument& e) {
                throw HttpError(422, e.what());
            }
            auto s = sessions_.create(config, subject_from_request(req.value("subject", json())));
            return json_response(201, {{"id", s->id()}, {"state", s->state()}});
        }
        std::smatch m;
        if (!std::regex_match(path, m, kSession)) throw HttpError(404, "no route for " + path);
        auto session = sessions_.find(m[1].str());
        const std::string rest = m[2].matched ? m[2].str() : "";
        if (rest == "/train") {
            if (method != "POST") throw HttpError(405, "method not allowed");
            return json_response(200, session->train());
        }
        if (rest == "/tasks") {
            if (method != "POST") throw HttpError(405, "method not allowed");
            const json req = parse_body(body);
            if (!req.contains("task") || !req["task"].is_string()) throw HttpError(422, "missing task");
            TaskKind task;
            try {
                task = task_from_string(req["task"].get<std::string>());
            } catch (const InvalidArgument& e) {
                throw HttpError(422, e.what());
            }
            return json_response(200, session->run_task(task));
        }
        if (rest == "/state" || rest.empty()) {
            if (method != "GET") throw HttpError(405, "method not allowed");
            return json_response(200, session->state());
        }
        if (rest.rfind("/export/", 0) == 0) {
            if (method != "GET") throw HttpError(405, "method not allowed");
            Response r;
            r.body = session->export_item(rest.substr(8), r.content_type);
            return r;
        }
        throw HttpError(404, "no route for " + path);
    } catch (const HttpError& e) {
        return json_response(e.status(), {{"error", e.what()}});
    } catch (const InvalidArgument& e) {
        return json_response(422, {{"error", e.what()}});
    } catch (const std::exception& e) {
        return json_response(500, {{"error", e.what()}});
    }
}

// ----------------------------------------------------------------------------
// Interactive loop
// ----------------------------------------------------------------------------

InteractiveLoop::InteractiveLoop(std::shared_ptr<const Simulator> sim, std::shared_ptr<const TrainingResult> training,
                                 std::function<void(Phase)> on_mode)
    : sim_(std::move(sim)),
      training_(std::move(training)),
      loop_(*sim_, training_->models, true),
      on_mode_(std::move(on_mode)),
      moving_{Vec2::Zero()} {
    const auto& c = sim_->config();
    painting_.width_px = c.screen_width_px;
    painting_.height_px = c.screen_height_px;
    snake_ = new_snake(c.snake_cols, c.snake_rows, derive_seed(c.rng_seed, {0x5a4e}));
}

namespace {

json error_frame(const std::string& message) { return {{"type", "error"}, {"message", message}}; }

bool finite_number(const json& j) { return j.is_number() && std::isfinite(j.get<double>()); }

}  // namespace

std::vector<json> InteractiveLoop::on_message(const std::string& text, double now_s) {
    const json msg = json::parse(text, nullptr, false);
    if (msg.is_discarded() || !msg.is_object()) return {error_frame("malformed message")};
    const std::string type = msg.value("type", "");
    if (type == "gaze") {
        if (!msg.contains("x") || !msg.contains("y") || !finite_number(msg["x"]) || !finite_number(msg["y"])) {
            return {error_frame("gaze needs numeric x and y")};
        }
        gaze_ = Vec2(msg["x"].get<double>(), msg["y"].get<double>());
        gaze_time_ = now_s;
        return {};
    }
    if (type == "brush") {
        if (!msg.contains("down") || !msg["down"].is_boolean()) return {error_frame("brush needs boolean down")};
        set_brush(painting_, msg["down"].get<bool>());
        return {};
    }
    if (type != "command") return {error_frame("unknown message type '" + type + "'")};

    const std::string name = msg.value("name", "");
    if (name == "mode") {
        const std::string mode = msg.value("mode", "");
        if (mode == "tracking") {
            mode_ = Phase::tracking;
        } else if (mode == "painting") {
            mode_ = Phase::painting;
        } else if (mode == "snake") {
            mode_ = Phase::snake;
        } else {
            return {error_frame("unknown mode '" + mode + "'")};
        }
        if (on_mode_) on_mode_(mode_);
        return {snapshot()};
    }
    if (name == "set_target") {
        if (!msg.contains("x") || !msg.contains("y") || !finite_number(msg["x"]) || !finite_number(msg["y"])) {
            return {error_frame("set_target needs numeric x and y")};
        }
        TargetSpec t;
        t.position_px = {msg["x"].get<double>(), msg["y"].get<double>()};
        t.radius_px = msg.contains("radius") && finite_number(msg["radius"]) ? msg["radius"].get<double>()
                                                                              : sim_->config().target_radius_px;
        target_ = t;
        return {};
    }
    if (name == "clear_target") {
        target_.reset();
        return {};
    }
    if (name == "reset_cursor") {
        cursor_ = CursorIntegrator();
        moving_ = {Vec2::Zero()};
        return {snapshot()};
    }
    if (name == "new_game") {
        const auto& c = sim_->config();
        snake_ = new_snake(c.snake_cols, c.snake_rows, derive_seed(c.rng_seed, {0x5a4e, snake_.food_seed}));
        return {snapshot()};
    }
    return {error_frame("unknown command '" + name + "'")};
}

std::vector<json> InteractiveLoop::step(double now_s) {
    const auto& config = sim_->config();
    const int frames = config.frames_per_step();
    std::vector<json> out;
    const int index = step_index_++;
    const bool stale = !gaze_ || now_s - gaze_time_ > kStaleGazeSeconds;
    if (stale) {
        moving_ = {cursor_.position()};
        out.push_back({{"type", "frame"},
                       {"cursor", io::to_json(cursor_.position())},
                       {"rho", json::array()},
                       {"velocity", json::array({0.0, 0.0})},
                       {"step_index", index},
                       {"frame", frames - 1},
                       {"held", true}});
        return out;
    }
    const std::uint64_t stream = derive_seed(config.rng_seed, {0x1a7e, static_cast<std::uint64_t>(index)});

    if (mode_ == Phase::snake) {
        const RhoVector rho = loop_.score(*gaze_, Vec2::Zero(), stream);
        out.push_back({{"type", "frame"},
                       {"cursor", io::to_json(cursor_.position())},
                       {"rho", rho.rho},
                       {"velocity", json::array({0.0, 0.0})},
                       {"step_index", index},
                       {"frame", frames - 1}});
        if (snake_.alive) snake_ = snake_step(snake_, rho, config.confidence_alpha);
        json s = io::to_json(snake_);
        s["type"] = "snake_state";
        s["step_index"] = index;
        out.push_back(s);
        return out;
    }

    const StepOutcome step = loop_.decode(*gaze_, moving_, stream);
    const auto profile = decay_profile(step.velocity, frames);
    const int stride = std::max(1, static_cast<int>(std::ceil(frames / (kMaxMessagesPerSecond * config.step_seconds))));
    std::vector<Vec2> next;
    json painted = json::array();
    for (int f = 0; f < frames; ++f) {
        cursor_.add(profile[f]);
        const Vec2 p = cursor_.position();
        next.push_back(p);
        if (mode_ == Phase::painting && painting_.brush_down) {
            paint_step(painting_, p);
            painted.push_back(io::to_json(p));
        }
        if (target_ && hit_test(p, *target_)) {
            out.push_back({{"type", "trial_event"},
                           {"event", "hit"},
                           {"trial", trial_++},
                           {"target", io::to_json(*target_)},
                           {"step_index", index},
                           {"frame", f},
                           {"time_s", (index + 1) * config.step_seconds + (f + 1) / config.refresh_rate_hz}});
            target_.reset();
        }
        if ((f + 1) % stride == 0 || f == frames - 1) {
            out.push_back({{"type", "frame"},
                           {"cursor", io::to_json(p)},
                           {"rho", step.rho.rho},
                           {"velocity", io::to_json(step.velocity.v)},
                           {"capped", step.capped},
                           {"step_index", index},
                           {"frame", f}});
        }
    }
    moving_.swap(next);
    if (mode_ == Phase::painting) {
        out.push_back({{"type", "paint_state"},
                       {"step_index", index},
                       {"brush_down", painting_.brush_down},
                       {"n_strokes", painting_.strokes.size()},
                       {"points", painted}});
    }
    return out;
}

json InteractiveLoop::snapshot() const {
    json s = {{"type", "state"},
              {"mode", to_string(mode_)},
              {"cursor", io::to_json(cursor_.position())},
              {"step_index", step_index_},
              {"target", target_ ? io::to_json(*target_) : json(nullptr)}};
    if (mode_ == Phase::snake) s["snake"] = io::to_json(snake_);
    if (mode_ == Phase::painting) s["painting"] = io::to_json(painting_);
    return s;
}

}  // namespace neurotrack::service
