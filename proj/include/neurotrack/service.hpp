#pragma once

#include <atomic>
#include <condition_variable>
#include <deque>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "neurotrack/apps.hpp"
#include "neurotrack/core.hpp"
#include "neurotrack/synth_eeg.hpp"
#include "neurotrack/task.hpp"

namespace neurotrack::service {

using json = nlohmann::json;

/// Error carrying the HTTP status the API maps it to.
class HttpError : public Error {
public:
    HttpError(int status, const std::string& message) : Error(message), status_(status) {}
    int status() const { return status_; }

private:
    int status_;
};

enum class Phase { idle, training, fixed, random, jitter, tracking, painting, snake };
std::string to_string(Phase phase);

/// Subject selection in a create-session request:
///   "default" | {"cohort_seed", "cohort_size", "index"} | {"explicit": {...subject...}}
struct SubjectChoice {
    SyntheticSubject subject;
    int index = 0;
    json description;
};
SubjectChoice subject_from_request(const json& j);

/// Runs posted jobs one at a time on a private thread.
class Worker {
public:
    Worker();
    ~Worker();
    Worker(const Worker&) = delete;
    Worker& operator=(const Worker&) = delete;

    template <class F>
    auto submit(F f) -> std::future<decltype(f())> {
        using R = decltype(f());
        auto task = std::make_shared<std::packaged_task<R()>>(std::move(f));
        auto future = task->get_future();
        {
            std::lock_guard lock(mu_);
            jobs_.push_back([task] { (*task)(); });
        }
        cv_.notify_one();
        return future;
    }

private:
    void run();

    std::mutex mu_;
    std::condition_variable cv_;
    std::deque<std::function<void()>> jobs_;
    bool stopping_ = false;
    std::thread thread_;
};

class InteractiveLoop;

/// One simulated user session. Batch work runs on the session's worker;
/// callers only exchange messages with it and receive copies of results.
class Session {
public:
    Session(std::string id, SessionConfig config, SubjectChoice subject);

    const std::string& id() const { return id_; }
    const SessionConfig& config() const { return config_; }
    Phase phase() const { return phase_.load(); }

    /// Stage I + II; returns the training summary.
    json train();
    /// Runs a batch task and returns its metrics.
    json run_task(TaskKind task);
    json state() const;
    /// Export payload; sets the content type.
    std::string export_item(const std::string& what, std::string& content_type) const;

    /// Interactive loop bound to this session's trained models.
    std::unique_ptr<InteractiveLoop> open_stream();
    void set_interactive_phase(Phase phase);
    void record_painting(const PaintingState& painting);

private:
    void claim(Phase from, Phase to);

    std::string id_;
    SessionConfig config_;
    SubjectChoice subject_;
    std::shared_ptr<const Simulator> sim_;
    std::atomic<Phase> phase_{Phase::idle};

    mutable std::mutex mu_;  // guards the results below
    std::shared_ptr<const TrainingResult> training_;
    std::vector<TrialRecord> records_;
    std::vector<MetricsReport> metrics_;
    std::optional<JitterReport> jitter_;
    std::optional<PaintingState> painting_;

    Worker worker_;
};

class SessionManager {
public:
    std::shared_ptr<Session> create(SessionConfig config, SubjectChoice subject);
    std::shared_ptr<Session> find(const std::string& id) const;
    std::vector<std::string> ids() const;

private:
    mutable std::mutex mu_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
    std::uint64_t next_ = 1;
};

struct Response {
    int status = 200;
    std::string body;
    std::string content_type = "application/json";
};

/// HTTP routing independent of the transport:
///   POST /sessions                      {config?, subject?}
///   POST /sessions/{id}/train
///   POST /sessions/{id}/tasks           {task: fixed|random|jitter}
///   GET  /sessions/{id}/state
///   GET  /sessions/{id}/export/{what}
///   GET  /sessions
class ApiHandler {
public:
    explicit ApiHandler(SessionManager& sessions) : sessions_(sessions) {}
    Response handle(const std::string& method, const std::string& target, const std::string& body);

private:
    SessionManager& sessions_;
};

/// Server side of the per-session stream. The transport feeds client
/// messages and calls step() once per step; everything it returns is sent
/// in order. Times are session seconds.
class InteractiveLoop {
public:
    static constexpr double kStaleGazeSeconds = 2.0;
    static constexpr int kMaxMessagesPerSecond = 30;

    InteractiveLoop(std::shared_ptr<const Simulator> sim, std::shared_ptr<const TrainingResult> training,
                    std::function<void(Phase)> on_mode = {});

    /// Handles one client message; returns immediate replies (errors).
    std::vector<json> on_message(const std::string& text, double now_s);
    /// Decodes one step with the latest gaze and returns the frame messages
    /// (coalesced to kMaxMessagesPerSecond) and state snapshots.
    std::vector<json> step(double now_s);

    Phase mode() const { return mode_; }
    Vec2 cursor() const { return cursor_.position(); }
    int step_index() const { return step_index_; }
    const PaintingState& painting() const { return painting_; }
    const SnakeState& snake() const { return snake_; }
    json snapshot() const;

private:
    std::shared_ptr<const Simulator> sim_;
    std::shared_ptr<const TrainingResult> training_;
    ClosedLoop loop_;
    std::function<void(Phase)> on_mode_;

    Phase mode_ = Phase::tracking;
    CursorIntegrator cursor_;
    std::vector<Vec2> moving_;
    std::optional<Vec2> gaze_;
    double gaze_time_ = 0.0;
    std::optional<TargetSpec> target_;
    PaintingState painting_;
    SnakeState snake_;
    int step_index_ = 0;
    int trial_ = 0;
};

}  // namespace neurotrack::service
