// neurotrack command line: batch simulation, training, offline decoding,
// reports and the session service.

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "neurotrack/io.hpp"
#include "neurotrack/server.hpp"
#include "neurotrack/task.hpp"

namespace fs = std::filesystem;
using namespace neurotrack;
using json = nlohmann::json;

namespace {

struct CommonOptions {
    std::string config_path;
    std::vector<std::string> overrides;
    std::uint64_t seed = 0;
    bool seed_given = false;
};

SessionConfig resolve_config(const CommonOptions& o) {
    SessionConfig c = o.config_path.empty() ? SessionConfig{} : io::load_config(o.config_path);
    if (o.seed_given) c.rng_seed = o.seed;
    c = io::apply_overrides(c, o.overrides);
    c.validate();
    return c;
}

void add_common(CLI::App* app, CommonOptions& o) {
    app->add_option("--config", o.config_path, "Session config JSON (defaults built in)")->check(CLI::ExistingFile);
    app->add_option("--set", o.overrides, "Config override key=value, dotted keys for nested fields (repeatable)");
    app->add_option_function<std::uint64_t>(
        "--seed",
        [&o](std::uint64_t s) {
            o.seed = s;
            o.seed_given = true;
        },
        "Session RNG seed; also seeds the synthetic cohort");
}

struct SubjectOptions {
    int subjects = 17;
    bool default_subject = false;
};

/// (index, subject) pairs for the requested cohort.
std::vector<SyntheticSubject> resolve_subjects(const SubjectOptions& s, const SessionConfig& config) {
    if (s.default_subject) return {default_subject()};
    return make_cohort(s.subjects, config.rng_seed);
}

void write(const fs::path& dir, const std::string& name, const std::string& content) {
    io::atomic_write(dir / name, content);
    std::cerr << "wrote " << (dir / name).string() << '\n';
}

// ---------------------------------------------------------------------------

struct SimulateOptions {
    CommonOptions common;
    SubjectOptions subjects;
    std::string task = "fixed";
    std::string out_dir = "out";
};

int cmd_simulate(const SimulateOptions& o) {
    const SessionConfig config = resolve_config(o.common);
    const TaskKind task = task_from_string(o.task);
    const auto cohort = resolve_subjects(o.subjects, config);
    std::vector<TrialRecord> records;
    std::vector<MetricsReport> metrics;
    std::string training_log;
    json jitter = json::array();
    for (std::size_t k = 0; k < cohort.size(); ++k) {
        const Simulator sim(config, cohort[k]);
        const TrainingResult training = run_training(sim);
        json summary = io::training_summary(training);
        summary["subject"] = k;
        training_log += summary.dump() + "\n";
        TaskRun run = run_task(sim, training, task, static_cast<int>(k));
        std::cerr << "subject " << k << ": " << run.metrics.n_hits << "/" << run.metrics.n_trials << " hits, ITR "
                  << run.metrics.fitts_itr_bps << " bps\n";
        records.insert(records.end(), run.records.begin(), run.records.end());
        metrics.push_back(run.metrics);
        if (run.jitter) jitter.push_back(io::to_json(*run.jitter));
    }
    const fs::path dir(o.out_dir);
    fs::create_directories(dir);
    json m = json::array();
    for (const auto& r : metrics) m.push_back(io::to_json(r));
    write(dir, "trials.jsonl", io::trial_log(records));
    write(dir, "metrics.json", m.dump(2) + "\n");
    write(dir, "metrics.csv", io::metrics_csv(metrics));
    write(dir, "training.jsonl", training_log);
    write(dir, "config.json", io::to_json(config).dump(2) + "\n");
    if (!jitter.empty()) write(dir, "jitter.json", jitter.dump() + "\n");
    return 0;
}

// ---------------------------------------------------------------------------

struct TrainOptions {
    CommonOptions common;
    bool default_subject = false;
    int cohort_size = 17;
    int index = 0;
    int repetitions = 6;
    std::string out_dir = "out";
    bool export_session = false;
};

int cmd_train(const TrainOptions& o) {
    const SessionConfig config = resolve_config(o.common);
    if (!o.default_subject && (o.index < 0 || o.index >= o.cohort_size)) {
        throw InvalidArgument("--index outside the cohort");
    }
    const SyntheticSubject subject =
        o.default_subject ? default_subject() : make_cohort(o.cohort_size, config.rng_seed)[o.index];
    const Simulator sim(config, subject);
    const TrainingResult training = run_training(sim, {o.repetitions, o.export_session});
    const fs::path dir(o.out_dir);
    fs::create_directories(dir);
    write(dir, "model.bin", io::encode_model(training.models));
    write(dir, "model.json", io::model_metadata(training.models, config).dump(2) + "\n");
    write(dir, "training.json", io::training_summary(training).dump(2) + "\n");
    write(dir, "config.json", io::to_json(config).dump(2) + "\n");
    if (o.export_session) {
        std::vector<EegEpoch> epochs;
        std::vector<io::EpochLabel> labels;
        auto add = [&](TaskKind kind, const std::vector<EegEpoch>& raw, const std::vector<TargetSpec>& targets) {
            for (std::size_t i = 0; i < raw.size(); ++i) {
                epochs.push_back(raw[i]);
                labels.push_back({kind, static_cast<int>(i), targets[i], Vec2::Zero()});
            }
        };
        add(TaskKind::stage1, training.stage1_epochs, training.stage1_labels);
        add(TaskKind::stage2, training.stage2_epochs, training.stage2_labels);
        write(dir, "session.bin", io::encode_session(epochs));
        write(dir, "session.json", io::session_sidecar(labels, config).dump(2) + "\n");
    }
    return 0;
}

// ---------------------------------------------------------------------------

struct DecodeOptions {
    std::string model;
    std::string session;
    std::string sidecar;
    std::string config_path;
    std::string out = "-";
    bool initial_weight = false;
};

int cmd_decode(const DecodeOptions& o) {
    SessionConfig config;
    if (!o.config_path.empty()) config = io::load_config(o.config_path);
    std::vector<io::EpochLabel> labels;
    if (!o.sidecar.empty()) {
        const json side = json::parse(io::read_file(o.sidecar));
        labels = io::labels_from_sidecar(side);
        if (o.config_path.empty() && side.contains("config")) config = io::config_from_json(side["config"]);
    }
    const TrainedModels models = io::decode_model(io::read_file(o.model));
    const auto epochs = io::decode_session(io::read_file(o.session));
    if (!labels.empty() && labels.size() != epochs.size()) {
        throw InvalidArgument("sidecar label count differs from the epoch count");
    }
    // The forward model is unused when decoding recorded epochs; the default
    // subject only satisfies the Simulator's construction.
    const Simulator sim(config, default_subject());
    const ClosedLoop loop(sim, models, !o.initial_weight);
    std::string out;
    for (std::size_t i = 0; i < epochs.size(); ++i) {
        const StepOutcome step = loop.decode_epoch(epochs[i]);
        json line = {{"epoch", i},
                     {"rho", step.rho.rho},
                     {"velocity", io::to_json(step.velocity.v)},
                     {"capped", step.capped}};
        if (!labels.empty()) {
            line["task"] = to_string(labels[i].task);
            line["trial"] = labels[i].trial;
            line["target"] = io::to_json(labels[i].target);
        }
        out += line.dump() + "\n";
    }
    if (o.out == "-") {
        std::cout << out;
    } else {
        io::atomic_write(o.out, out);
    }
    return 0;
}

// ---------------------------------------------------------------------------

struct ReportOptions {
    std::string trials;
    std::string config_path;
    std::string out_dir = "report";
};

int cmd_report(const ReportOptions& o) {
    const SessionConfig config = o.config_path.empty() ? SessionConfig{} : io::load_config(o.config_path);
    const auto records = io::read_trial_log(o.trials);
    std::map<std::pair<int, int>, std::vector<TrialRecord>> groups;
    for (const auto& r : records) {
        if (r.task == TaskKind::fixed || r.task == TaskKind::random) {
            groups[{r.subject, static_cast<int>(r.task)}].push_back(r);
        }
    }
    if (groups.empty()) throw InvalidArgument("no fixed or random task trials in " + o.trials);
    std::vector<MetricsReport> reports;
    json plot = json::array();
    std::ostringstream table;
    table << "subject,task,n_trials,n_hits,success_rate,fitts_itr_bps,itr_sd,time_to_target_s\n";
    std::cout << std::left << std::setw(8) << "subject" << std::setw(8) << "task" << std::setw(8) << "trials"
              << std::setw(10) << "success" << std::setw(12) << "ITR (bps)" << "TTT (s)\n";
    for (const auto& [key, group] : groups) {
        const MetricsReport m = compute_metrics(group, config);
        reports.push_back(m);
        table << m.subject << ',' << to_string(m.task) << ',' << m.n_trials << ',' << m.n_hits << ','
              << m.success_rate << ',' << m.fitts_itr_bps << ',' << m.fitts_itr.sd << ',' << m.time_to_target.mean
              << '\n';
        std::cout << std::setw(8) << m.subject << std::setw(8) << to_string(m.task) << std::setw(8) << m.n_trials
                  << std::setw(10) << std::fixed << std::setprecision(3) << m.success_rate << std::setw(12)
                  << m.fitts_itr_bps << m.time_to_target.mean << '\n';
        json itr = json::array();
        for (const auto& r : group) {
            if (r.outcome == Outcome::hit) {
                itr.push_back(fitts_itr((r.target.position_px - r.start_px).norm(), 2.0 * r.target.radius_px,
                                        r.time_to_target_s));
            }
        }
        plot.push_back({{"subject", m.subject}, {"task", to_string(m.task)}, {"itr_bps", itr}});
    }
    const fs::path dir(o.out_dir);
    fs::create_directories(dir);
    json m = json::array();
    for (const auto& r : reports) m.push_back(io::to_json(r));
    write(dir, "report.csv", table.str());
    write(dir, "metrics.json", m.dump(2) + "\n");
    write(dir, "metrics.csv", io::metrics_csv(reports));
    write(dir, "plot_data.json", plot.dump() + "\n");
    return 0;
}

// ---------------------------------------------------------------------------

struct ServeOptions {
    std::string address = "127.0.0.1";
    int port = 8080;
    bool port_given = false;
    int threads = 4;
    double time_scale = 1.0;
};

int cmd_serve(ServeOptions o) {
    if (!o.port_given) {
        if (const char* env = std::getenv("NEUROTRACK_PORT")) o.port = std::stoi(env);
    }
    if (o.port < 0 || o.port > 65535) throw InvalidArgument("port outside 0..65535");
    // Block the termination signals before any thread starts so sigwait sees them.
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    service::SessionManager sessions;
    service::Server server({o.address, static_cast<unsigned short>(o.port), o.threads, o.time_scale}, sessions);
    const unsigned short port = server.start();
    std::cout << "listening on http://" << o.address << ':' << port << std::endl;
    int sig = 0;
    sigwait(&signals, &sig);
    server.stop();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"neurotrack: simulated cVEP cursor control"};
    app.require_subcommand(1);

    SimulateOptions sim;
    auto* simulate = app.add_subcommand("simulate", "Train and run a batch task for a synthetic cohort");
    add_common(simulate, sim.common);
    simulate->add_option("--subjects", sim.subjects.subjects, "Cohort size")->check(CLI::PositiveNumber);
    simulate->add_flag("--default-subject", sim.subjects.default_subject,
                       "Use the calibrated default subject instead of a cohort");
    simulate->add_option("--task", sim.task, "fixed, random or jitter")
        ->check(CLI::IsMember({"fixed", "random", "jitter"}));
    simulate->add_option("--out-dir", sim.out_dir, "Output directory");

    TrainOptions tr;
    auto* train = app.add_subcommand("train", "Run Stage I and II training and write the model");
    add_common(train, tr.common);
    train->add_flag("--default-subject", tr.default_subject, "Use the calibrated default subject");
    train->add_option("--subjects", tr.cohort_size, "Cohort size the subject is drawn from")
        ->check(CLI::PositiveNumber);
    train->add_option("--index", tr.index, "Subject index within the cohort");
    train->add_option("--repetitions", tr.repetitions, "Presentations per training target")
        ->check(CLI::PositiveNumber);
    train->add_option("--out-dir", tr.out_dir, "Output directory");
    train->add_flag("--export-session", tr.export_session,
                    "Also write the raw training epochs as session.bin with a session.json sidecar");

    DecodeOptions dec;
    auto* decode = app.add_subcommand("decode", "Decode a binary session file into rho and velocity traces");
    decode->add_option("--model", dec.model, "model.bin from train")->required()->check(CLI::ExistingFile);
    decode->add_option("--session", dec.session, "Binary session file")->required()->check(CLI::ExistingFile);
    decode->add_option("--sidecar", dec.sidecar, "Session sidecar JSON with labels and config")
        ->check(CLI::ExistingFile);
    decode->add_option("--config", dec.config_path, "Config JSON (overrides the sidecar config)")
        ->check(CLI::ExistingFile);
    decode->add_option("--out", dec.out, "Output JSONL path, - for stdout");
    decode->add_flag("--initial-weight", dec.initial_weight, "Decode with the initial circular velocity weight");

    ReportOptions rep;
    auto* report = app.add_subcommand("report", "Aggregate a trial log into per-subject metrics");
    report->add_option("--trials", rep.trials, "trials.jsonl from simulate")->required()->check(CLI::ExistingFile);
    report->add_option("--config", rep.config_path, "Config JSON used for the run")->check(CLI::ExistingFile);
    report->add_option("--out-dir", rep.out_dir, "Output directory");

    ServeOptions srv;
    auto* serve = app.add_subcommand("serve", "Start the HTTP and WebSocket session service");
    serve->add_option("--address", srv.address, "Bind address");
    serve->add_option_function<int>(
        "--port",
        [&srv](int p) {
            srv.port = p;
            srv.port_given = true;
        },
        "Port (default 8080, or NEUROTRACK_PORT when set)");
    serve->add_option("--threads", srv.threads, "I/O threads")->check(CLI::PositiveNumber);
    serve->add_option("--time-scale", srv.time_scale, "Wall seconds per simulated second for streams")
        ->check(CLI::PositiveNumber);

    CLI11_PARSE(app, argc, argv);
    try {
        if (simulate->parsed()) return cmd_simulate(sim);
        if (train->parsed()) return cmd_train(tr);
        if (decode->parsed()) return cmd_decode(dec);
        if (report->parsed()) return cmd_report(rep);
        if (serve->parsed()) return cmd_serve(srv);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
