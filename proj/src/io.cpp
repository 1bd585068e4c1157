#include "neurotrack/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

namespace neurotrack::io {

namespace {

template <class T>
T get_or(const json& j, const char* key, T fallback) {
    auto it = j.find(key);
    return it == j.end() ? fallback : it->get<T>();
}

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& what) {
    if (!j.is_object()) throw InvalidArgument(what + ": expected a JSON object");
    for (const auto& item : j.items()) {
        if (!known.count(item.key())) throw InvalidArgument(what + ": unknown key '" + item.key() + "'");
    }
}

json pair_json(const std::pair<double, double>& p) { return json::array({p.first, p.second}); }

std::pair<double, double> pair_from(const json& j) {
    if (!j.is_array() || j.size() != 2) throw InvalidArgument("expected a [low, high] pair");
    return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace

// ----------------------------------------------------------------------------
// Config
// ----------------------------------------------------------------------------

json to_json(const FilterBankSpec& spec) {
    json edges = json::array();
    for (const auto& e : spec.band_edges_hz) edges.push_back(pair_json(e));
    return {{"n_subbands", spec.n_subbands},
            {"band_edges_hz", edges},
            {"notch_hz", spec.notch_hz},
            {"notch_q", spec.notch_q},
            {"bandpass_hz", pair_json(spec.bandpass_hz)},
            {"decimation_factor", spec.decimation_factor},
            {"processing_rate_hz", spec.processing_rate_hz},
            {"filter_order", spec.filter_order}};
}

FilterBankSpec filter_bank_from_json(const json& j) {
    reject_unknown(j,
                   {"n_subbands", "band_edges_hz", "notch_hz", "notch_q", "bandpass_hz", "decimation_factor",
                    "processing_rate_hz", "filter_order"},
                   "filter_bank");
    FilterBankSpec s;
    if (j.contains("band_edges_hz")) {
        s.band_edges_hz.clear();
        for (const auto& e : j["band_edges_hz"]) s.band_edges_hz.push_back(pair_from(e));
        s.n_subbands = static_cast<int>(s.band_edges_hz.size());
    }
    s.n_subbands = get_or(j, "n_subbands", s.n_subbands);
    s.notch_hz = get_or(j, "notch_hz", s.notch_hz);
    s.notch_q = get_or(j, "notch_q", s.notch_q);
    if (j.contains("bandpass_hz")) s.bandpass_hz = pair_from(j["bandpass_hz"]);
    s.decimation_factor = get_or(j, "decimation_factor", s.decimation_factor);
    s.processing_rate_hz = get_or(j, "processing_rate_hz", s.processing_rate_hz);
    s.filter_order = get_or(j, "filter_order", s.filter_order);
    return s;
}

json to_json(const SessionConfig& c) {
    return {{"screen_width_px", c.screen_width_px},
            {"screen_height_px", c.screen_height_px},
            {"n_regions", c.n_regions},
            {"target_radius_px", c.target_radius_px},
            {"cursor_radius_px", c.cursor_radius_px},
            {"step_seconds", c.step_seconds},
            {"trial_timeout_seconds", c.trial_timeout_seconds},
            {"acquisition_rate_hz", c.acquisition_rate_hz},
            {"processing_rate_hz", c.processing_rate_hz},
            {"refresh_rate_hz", c.refresh_rate_hz},
            {"px_per_cm", c.px_per_cm},
            {"rng_seed", c.rng_seed},
            {"gaze_noise_px", c.gaze_noise_px},
            {"confidence_alpha", c.confidence_alpha},
            {"post_hit_seconds", c.post_hit_seconds},
            {"random_target_margin_px", c.random_target_margin_px},
            {"snake_cols", c.snake_cols},
            {"snake_rows", c.snake_rows},
            {"relu_before_corrected", c.relu_before_corrected},
            {"filter_bank", to_json(c.filter_bank)}};
}

SessionConfig config_from_json(const json& j) {
    reject_unknown(j,
                   {"screen_width_px", "screen_height_px", "n_regions", "target_radius_px", "cursor_radius_px",
                    "step_seconds", "trial_timeout_seconds", "acquisition_rate_hz", "processing_rate_hz",
                    "refresh_rate_hz", "px_per_cm", "rng_seed", "gaze_noise_px", "confidence_alpha",
                    "post_hit_seconds", "random_target_margin_px", "snake_cols", "snake_rows",
                    "relu_before_corrected", "filter_bank"},
                   "config");
    SessionConfig c;
    try {
        c.screen_width_px = get_or(j, "screen_width_px", c.screen_width_px);
        c.screen_height_px = get_or(j, "screen_height_px", c.screen_height_px);
        c.n_regions = get_or(j, "n_regions", c.n_regions);
        c.target_radius_px = get_or(j, "target_radius_px", c.target_radius_px);
        c.cursor_radius_px = get_or(j, "cursor_radius_px", c.cursor_radius_px);
        c.step_seconds = get_or(j, "step_seconds", c.step_seconds);
        c.trial_timeout_seconds = get_or(j, "trial_timeout_seconds", c.trial_timeout_seconds);
        c.acquisition_rate_hz = get_or(j, "acquisition_rate_hz", c.acquisition_rate_hz);
        c.processing_rate_hz = get_or(j, "processing_rate_hz", c.processing_rate_hz);
        c.refresh_rate_hz = get_or(j, "refresh_rate_hz", c.refresh_rate_hz);
        c.px_per_cm = get_or(j, "px_per_cm", c.px_per_cm);
        c.rng_seed = get_or(j, "rng_seed", c.rng_seed);
        c.gaze_noise_px = get_or(j, "gaze_noise_px", c.gaze_noise_px);
        c.confidence_alpha = get_or(j, "confidence_alpha", c.confidence_alpha);
        c.post_hit_seconds = get_or(j, "post_hit_seconds", c.post_hit_seconds);
        c.random_target_margin_px = get_or(j, "random_target_margin_px", c.random_target_margin_px);
        c.snake_cols = get_or(j, "snake_cols", c.snake_cols);
        c.snake_rows = get_or(j, "snake_rows", c.snake_rows);
        c.relu_before_corrected = get_or(j, "relu_before_corrected", c.relu_before_corrected);
        if (j.contains("filter_bank")) c.filter_bank = filter_bank_from_json(j["filter_bank"]);
    } catch (const json::exception& e) {
        throw InvalidArgument(std::string("config: ") + e.what());
    }
    c.validate();
    return c;
}

SessionConfig apply_overrides(const SessionConfig& config, const std::vector<std::string>& overrides) {
    json j = to_json(config);
    for (const auto& o : overrides) {
        const auto eq = o.find('=');
        if (eq == std::string::npos || eq == 0) throw InvalidArgument("override must be key=value: " + o);
        const std::string key = o.substr(0, eq);
        const std::string text = o.substr(eq + 1);
        json* node = &j;
        std::stringstream parts(key);
        std::string part;
        while (std::getline(parts, part, '.')) {
            if (!node->is_object() || !node->contains(part)) {
                throw InvalidArgument("unknown config key: " + key);
            }
            node = &(*node)[part];
        }
        json value = json::parse(text, nullptr, false);
        if (value.is_discarded()) value = text;
        *node = value;
    }
    return config_from_json(j);
}

SessionConfig load_config(const std::filesystem::path& path) {
    const json j = json::parse(read_file(path), nullptr, false);
    if (j.is_discarded()) throw InvalidArgument("config: " + path.string() + " is not valid JSON");
    return config_from_json(j);
}

// ----------------------------------------------------------------------------
// Subject, geometry, records
// ----------------------------------------------------------------------------

json to_json(const SyntheticSubject& s) {
    std::vector<double> mixing(s.channel_mixing.data(), s.channel_mixing.data() + s.channel_mixing.size());
    return {{"vep_kernel", s.vep_kernel},
            {"channel_mixing", mixing},
            {"attention_sigma_px", s.attention_sigma_px},
            {"attention_aspect", s.attention_aspect},
            {"signal_amplitude_uv", s.signal_amplitude_uv},
            {"noise_amplitude_uv", s.noise_amplitude_uv},
            {"shared_noise_fraction", s.shared_noise_fraction},
            {"latency_samples", s.latency_samples},
            {"region_gain", s.region_gain},
            {"seed", s.seed}};
}

SyntheticSubject subject_from_json(const json& j) {
    reject_unknown(j,
                   {"vep_kernel", "channel_mixing", "attention_sigma_px", "attention_aspect", "signal_amplitude_uv",
                    "noise_amplitude_uv", "shared_noise_fraction", "latency_samples", "region_gain", "seed"},
                   "subject");
    SyntheticSubject s = default_subject(get_or<std::uint64_t>(j, "seed", 1));
    try {
        if (j.contains("vep_kernel")) s.vep_kernel = j["vep_kernel"].get<std::vector<double>>();
        if (j.contains("channel_mixing")) {
            const auto m = j["channel_mixing"].get<std::vector<double>>();
            s.channel_mixing = Eigen::Map<const Eigen::VectorXd>(m.data(), static_cast<Eigen::Index>(m.size()));
        }
        s.attention_sigma_px = get_or(j, "attention_sigma_px", s.attention_sigma_px);
        s.attention_aspect = get_or(j, "attention_aspect", s.attention_aspect);
        s.signal_amplitude_uv = get_or(j, "signal_amplitude_uv", s.signal_amplitude_uv);
        s.noise_amplitude_uv = get_or(j, "noise_amplitude_uv", s.noise_amplitude_uv);
        s.shared_noise_fraction = get_or(j, "shared_noise_fraction", s.shared_noise_fraction);
        s.latency_samples = get_or(j, "latency_samples", s.latency_samples);
        if (j.contains("region_gain")) s.region_gain = j["region_gain"].get<std::vector<double>>();
    } catch (const json::exception& e) {
        throw InvalidArgument(std::string("subject: ") + e.what());
    }
    return s;
}

json to_json(const Vec2& v) { return json::array({v.x(), v.y()}); }

Vec2 vec2_from_json(const json& j) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
        throw InvalidArgument("expected an [x, y] pair");
    }
    return {j[0].get<double>(), j[1].get<double>()};
}

json to_json(const TargetSpec& t) {
    return {{"position", to_json(t.position_px)},
            {"radius", t.radius_px},
            {"ring", to_string(t.ring)},
            {"alignment", to_string(t.alignment)},
            {"direction", t.direction}};
}

TargetSpec target_from_json(const json& j) {
    TargetSpec t;
    t.position_px = vec2_from_json(j.at("position"));
    t.radius_px = j.at("radius").get<double>();
    t.ring = ring_from_string(get_or<std::string>(j, "ring", "none"));
    t.alignment = alignment_from_string(get_or<std::string>(j, "alignment", "none"));
    t.direction = get_or(j, "direction", -1);
    return t;
}

json to_json(const TrialRecord& r) {
    json steps = json::array();
    for (const auto& s : r.steps) {
        steps.push_back({{"rho", s.rho.rho},
                         {"velocity", to_json(s.velocity.v)},
                         {"cursor", to_json(s.cursor_px)},
                         {"capped", s.capped}});
    }
    json j = {{"subject", r.subject},
              {"task", to_string(r.task)},
              {"trial", r.trial},
              {"target", to_json(r.target)},
              {"start", to_json(r.start_px)},
              {"outcome", to_string(r.outcome)},
              {"time_to_target_s", r.time_to_target_s},
              {"end", to_json(r.end_px)},
              {"steps", steps}};
    if (!r.post_hit_path.empty()) {
        json p = json::array();
        for (const auto& v : r.post_hit_path) p.push_back(to_json(v));
        j["post_hit"] = p;
    }
    if (!r.path.empty()) {
        json p = json::array();
        for (const auto& v : r.path) p.push_back(to_json(v));
        j["path"] = p;
    }
    return j;
}

TrialRecord trial_from_json(const json& j) {
    TrialRecord r;
    try {
        r.subject = j.at("subject").get<int>();
        r.task = task_from_string(j.at("task").get<std::string>());
        r.trial = j.at("trial").get<int>();
        r.target = target_from_json(j.at("target"));
        r.start_px = vec2_from_json(j.at("start"));
        r.outcome = outcome_from_string(j.at("outcome").get<std::string>());
        r.time_to_target_s = j.at("time_to_target_s").get<double>();
        r.end_px = vec2_from_json(j.at("end"));
        for (const auto& s : j.at("steps")) {
            StepRecord step;
            step.rho.rho = s.at("rho").get<std::vector<double>>();
            step.velocity.v = vec2_from_json(s.at("velocity"));
            step.cursor_px = vec2_from_json(s.at("cursor"));
            step.capped = s.at("capped").get<bool>();
            r.steps.push_back(std::move(step));
        }
        if (j.contains("post_hit")) {
            for (const auto& v : j["post_hit"]) r.post_hit_path.push_back(vec2_from_json(v));
        }
        if (j.contains("path")) {
            for (const auto& v : j["path"]) r.path.push_back(vec2_from_json(v));
        }
    } catch (const json::exception& e) {
        throw InvalidArgument(std::string("trial record: ") + e.what());
    }
    return r;
}

json to_json(const stats::Summary& s) { return {{"mean", s.mean}, {"sd", s.sd}, {"n", s.n}}; }

json to_json(const MetricsReport& m) {
    json hold = json::array();
    for (const auto& p : m.post_hit_hold_rate) hold.push_back({{"dt_s", p.dt_s}, {"rate", p.rate}});
    return {{"subject", m.subject},
            {"task", to_string(m.task)},
            {"n_trials", m.n_trials},
            {"n_hits", m.n_hits},
            {"success_rate", m.success_rate},
            {"fitts_itr_bps", m.fitts_itr_bps},
            {"fitts_itr", to_json(m.fitts_itr)},
            {"time_to_target", to_json(m.time_to_target)},
            {"time_to_target_inner", to_json(m.time_to_target_inner)},
            {"time_to_target_outer", to_json(m.time_to_target_outer)},
            {"angular_error_deg", to_json(m.angular_error_deg)},
            {"angular_missing", m.angular_missing},
            {"vector_error", to_json(m.vector_error)},
            {"degenerate_first_steps", m.degenerate_first_steps},
            {"projection_length", m.projection_length ? to_json(*m.projection_length) : json(nullptr)},
            {"post_hit_hold_rate", hold}};
}

std::string metrics_csv(const std::vector<MetricsReport>& reports) {
    std::ostringstream out;
    out << "subject,task,metric,value\n";
    for (const auto& m : reports) {
        const auto row = [&](const std::string& name, const json& value) {
            out << m.subject << ',' << to_string(m.task) << ',' << name << ',' << value.dump() << '\n';
        };
        const auto summary = [&](const std::string& name, const stats::Summary& s) {
            row(name + "_mean", s.mean);
            row(name + "_sd", s.sd);
            row(name + "_n", s.n);
        };
        row("n_trials", m.n_trials);
        row("n_hits", m.n_hits);
        row("success_rate", m.success_rate);
        row("fitts_itr_bps", m.fitts_itr_bps);
        summary("fitts_itr", m.fitts_itr);
        summary("time_to_target", m.time_to_target);
        summary("time_to_target_inner", m.time_to_target_inner);
        summary("time_to_target_outer", m.time_to_target_outer);
        summary("angular_error_deg", m.angular_error_deg);
        row("angular_missing", m.angular_missing);
        summary("vector_error", m.vector_error);
        row("degenerate_first_steps", m.degenerate_first_steps);
        if (m.projection_length) summary("projection_length", *m.projection_length);
        for (const auto& p : m.post_hit_hold_rate) row("post_hit_hold_rate@" + json(p.dt_s).dump(), p.rate);
    }
    return out.str();
}

json to_json(const VelocityWeight& w) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < w.matrix.rows(); ++r) rows.push_back(json::array({w.matrix(r, 0), w.matrix(r, 1)}));
    return {{"kind", to_string(w.kind)}, {"matrix", rows}};
}

VelocityWeight velocity_weight_from_json(const json& j) {
    VelocityWeight w;
    w.kind = weight_kind_from_string(j.at("kind").get<std::string>());
    const auto& rows = j.at("matrix");
    w.matrix.resize(static_cast<Eigen::Index>(rows.size()), 2);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const Vec2 v = vec2_from_json(rows[r]);
        w.matrix(static_cast<Eigen::Index>(r), 0) = v.x();
        w.matrix(static_cast<Eigen::Index>(r), 1) = v.y();
    }
    return w;
}

json to_json(const WnBank& bank) {
    json regions = json::array();
    for (const auto& s : bank) regions.push_back({{"region", s.region_index}, {"values", s.values}});
    return {{"frames", bank.empty() ? 0 : bank.front().frames()}, {"sequences", regions}};
}

json to_json(const JitterReport& r) {
    return {{"radius_filtered_px", r.radius_filtered_px},
            {"radius_raw_px", r.radius_raw_px},
            {"time_s", r.time_s},
            {"within_filtered", r.within_filtered},
            {"within_raw", r.within_raw}};
}

json to_json(const SnakeState& s) {
    json body = json::array();
    for (const auto& c : s.snake) body.push_back(json::array({c[0], c[1]}));
    return {{"cols", s.cols},
            {"rows", s.rows},
            {"snake", body},
            {"food", json::array({s.food[0], s.food[1]})},
            {"score", s.score},
            {"alive", s.alive},
            {"steps", s.steps}};
}

json to_json(const PaintingState& s) {
    json strokes = json::array();
    for (const auto& stroke : s.strokes) {
        json pts = json::array();
        for (const auto& p : stroke) pts.push_back(to_json(p));
        strokes.push_back(pts);
    }
    return {{"width", s.width_px}, {"height", s.height_px}, {"brush_down", s.brush_down}, {"strokes", strokes}};
}

json training_summary(const TrainingResult& t) {
    json norms = json::array();
    for (const auto& f : t.models.trca.filters) norms.push_back(f.norm());
    const Eigen::MatrixXd residual = t.regression.rho * t.models.corrected.matrix - t.regression.intended;
    return {{"stage1_trials", t.stage1_labels.size()},
            {"stage2_trials", t.regression.n_trials()},
            {"filter_norms", norms},
            {"n_regions", t.models.trca.n_regions()},
            {"n_subbands", t.models.trca.n_subbands()},
            {"n_channels", t.models.trca.n_channels()},
            {"template_length", t.models.trca.template_length()},
            {"regression_residual_rms", std::sqrt(residual.squaredNorm() / std::max<Eigen::Index>(1, residual.rows()))},
            {"projection_length", to_json(t.projection_length)},
            {"initial_weight", to_json(t.models.initial)},
            {"corrected_weight", to_json(t.models.corrected)}};
}

// ----------------------------------------------------------------------------
// Files
// ----------------------------------------------------------------------------

void atomic_write(const std::filesystem::path& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
    fs::create_directories(dir);
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot open " + tmp.string() + " for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) {
            out.close();
            fs::remove(tmp);
            throw Error("write failed: " + tmp.string());
        }
    }
    fs::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidArgument("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string trial_log(const std::vector<TrialRecord>& records) {
    std::string out;
    for (const auto& r : records) {
        out += to_json(r).dump();
        out += '\n';
    }
    return out;
}

std::vector<TrialRecord> read_trial_log(const std::filesystem::path& path) {
    std::istringstream in(read_file(path));
    std::vector<TrialRecord> out;
    std::string line;
    int n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty()) continue;
        const json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) throw InvalidArgument(path.string() + ":" + std::to_string(n) + ": invalid JSON");
        out.push_back(trial_from_json(j));
    }
    return out;
}

// ----------------------------------------------------------------------------
// Binary formats
// ----------------------------------------------------------------------------

namespace {

class Writer {
public:
    void raw(const char* s, std::size_t n) { out_.append(s, n); }
    void u32(std::uint32_t v) { le(v); }
    void f64(double v) { le(std::bit_cast<std::uint64_t>(v)); }
    void f32(float v) { le(std::bit_cast<std::uint32_t>(v)); }
    std::string take() { return std::move(out_); }

private:
    template <class U>
    void le(U v) {
        for (std::size_t i = 0; i < sizeof(U); ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
    std::string out_;
};

class Reader {
public:
    Reader(const std::string& bytes, const char* what) : bytes_(bytes), what_(what) {}
    void expect(const char* magic, std::size_t n) {
        need(n);
        if (std::memcmp(bytes_.data() + pos_, magic, n) != 0) throw InvalidArgument(std::string(what_) + ": bad magic");
        pos_ += n;
    }
    std::uint32_t u32() { return le<std::uint32_t>(); }
    double f64() { return std::bit_cast<double>(le<std::uint64_t>()); }
    float f32() { return std::bit_cast<float>(le<std::uint32_t>()); }
    void finish() const {
        if (pos_ != bytes_.size()) throw InvalidArgument(std::string(what_) + ": trailing bytes");
    }

private:
    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n) throw InvalidArgument(std::string(what_) + ": truncated");
    }
    template <class U>
    U le() {
        need(sizeof(U));
        U v = 0;
        for (std::size_t i = 0; i < sizeof(U); ++i)
            v |= static_cast<U>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        pos_ += sizeof(U);
        return v;
    }
    const std::string& bytes_;
    const char* what_;
    std::size_t pos_ = 0;
};

constexpr char kModelMagic[8] = {'N', 'T', 'M', 'O', 'D', 'E', 'L', '\0'};
constexpr char kSessionMagic[8] = {'N', 'T', 'E', 'E', 'G', '0', '0', '1'};

}  // namespace

std::string encode_model(const TrainedModels& m) {
    const auto& t = m.trca;
    Writer w;
    w.raw(kModelMagic, 8);
    w.u32(kModelVersion);
    w.u32(static_cast<std::uint32_t>(t.n_regions()));
    w.u32(static_cast<std::uint32_t>(t.n_subbands()));
    w.u32(static_cast<std::uint32_t>(t.n_channels()));
    w.u32(static_cast<std::uint32_t>(t.template_length()));
    w.u32(static_cast<std::uint32_t>(t.n_trials_trained));
    for (const auto& f : t.filters)
        for (Eigen::Index c = 0; c < f.size(); ++c) w.f64(f(c));
    for (const auto& region : t.templates)
        for (const auto& tpl : region)
            for (Eigen::Index i = 0; i < tpl.size(); ++i) w.f64(tpl(i));
    for (const VelocityWeight* vw : {&m.initial, &m.corrected}) {
        if (vw->matrix.rows() != t.n_regions() || vw->matrix.cols() != 2) {
            throw InvalidArgument("encode_model: velocity weight shape does not match the model");
        }
        for (Eigen::Index r = 0; r < vw->matrix.rows(); ++r) {
            w.f64(vw->matrix(r, 0));
            w.f64(vw->matrix(r, 1));
        }
    }
    return w.take();
}

TrainedModels decode_model(const std::string& bytes) {
    Reader r(bytes, "model");
    r.expect(kModelMagic, 8);
    const std::uint32_t version = r.u32();
    if (version != kModelVersion) throw InvalidArgument("model: unsupported version " + std::to_string(version));
    const int regions = static_cast<int>(r.u32());
    const int subbands = static_cast<int>(r.u32());
    const int channels = static_cast<int>(r.u32());
    const int length = static_cast<int>(r.u32());
    TrainedModels m;
    m.trca.n_trials_trained = static_cast<int>(r.u32());
    if (regions < 1 || subbands < 1 || channels < 1 || length < 1) throw InvalidArgument("model: empty dimensions");
    const std::size_t expected = 8 + 4 * 6 +
        8 * (static_cast<std::size_t>(subbands) * channels + static_cast<std::size_t>(regions) * subbands * length +
             4 * static_cast<std::size_t>(regions));
    if (bytes.size() != expected) throw InvalidArgument("model: size does not match its header");
    for (int m_ = 0; m_ < subbands; ++m_) {
        Eigen::VectorXd f(channels);
        for (int c = 0; c < channels; ++c) f(c) = r.f64();
        m.trca.filters.push_back(std::move(f));
    }
    m.trca.templates.assign(regions, {});
    for (int i = 0; i < regions; ++i) {
        for (int m_ = 0; m_ < subbands; ++m_) {
            Eigen::VectorXd tpl(length);
            for (int k = 0; k < length; ++k) tpl(k) = r.f64();
            m.trca.templates[i].push_back(std::move(tpl));
        }
    }
    for (VelocityWeight* vw : {&m.initial, &m.corrected}) {
        vw->matrix.resize(regions, 2);
        for (int i = 0; i < regions; ++i) {
            vw->matrix(i, 0) = r.f64();
            vw->matrix(i, 1) = r.f64();
        }
    }
    m.initial.kind = WeightKind::initial;
    m.corrected.kind = WeightKind::corrected;
    r.finish();
    return m;
}

json model_metadata(const TrainedModels& m, const SessionConfig& config) {
    json norms = json::array();
    for (const auto& f : m.trca.filters) norms.push_back(f.norm());
    return {{"format", "neurotrack-model"},
            {"version", kModelVersion},
            {"n_regions", m.trca.n_regions()},
            {"n_subbands", m.trca.n_subbands()},
            {"n_channels", m.trca.n_channels()},
            {"template_length", m.trca.template_length()},
            {"n_trials_trained", m.trca.n_trials_trained},
            {"filter_norms", norms},
            {"initial_weight", to_json(m.initial)},
            {"corrected_weight", to_json(m.corrected)},
            {"config", to_json(config)}};
}

std::string encode_session(const std::vector<EegEpoch>& epochs) {
    Writer w;
    w.raw(kSessionMagic, 8);
    w.u32(kSessionVersion);
    const int channels = epochs.empty() ? 0 : epochs.front().n_channels();
    const int length = epochs.empty() ? 0 : epochs.front().n_samples();
    const double rate = epochs.empty() ? 0.0 : epochs.front().sample_rate_hz;
    for (const auto& e : epochs) {
        if (e.n_channels() != channels || e.n_samples() != length || e.sample_rate_hz != rate) {
            throw InvalidArgument("encode_session: epochs differ in shape or rate");
        }
    }
    w.u32(static_cast<std::uint32_t>(channels));
    w.f64(rate);
    w.u32(static_cast<std::uint32_t>(length));
    w.u32(static_cast<std::uint32_t>(epochs.size()));
    for (const auto& e : epochs)
        for (int c = 0; c < channels; ++c)
            for (int t = 0; t < length; ++t) w.f32(static_cast<float>(e.samples(c, t)));
    return w.take();
}

std::vector<EegEpoch> decode_session(const std::string& bytes) {
    Reader r(bytes, "session");
    r.expect(kSessionMagic, 8);
    const std::uint32_t version = r.u32();
    if (version != kSessionVersion) throw InvalidArgument("session: unsupported version " + std::to_string(version));
    const std::uint32_t channels = r.u32();
    const double rate = r.f64();
    const std::uint32_t length = r.u32();
    const std::uint32_t count = r.u32();
    const std::size_t expected = 8 + 4 + 4 + 8 + 4 + 4 + 4ull * channels * length * count;
    if (bytes.size() != expected) throw InvalidArgument("session: size does not match its header");
    std::vector<EegEpoch> epochs(count);
    for (auto& e : epochs) {
        e.sample_rate_hz = rate;
        e.samples.resize(channels, length);
        for (std::uint32_t c = 0; c < channels; ++c)
            for (std::uint32_t t = 0; t < length; ++t) e.samples(c, t) = r.f32();
    }
    r.finish();
    return epochs;
}

json session_sidecar(const std::vector<EpochLabel>& labels, const SessionConfig& config) {
    json items = json::array();
    for (const auto& l : labels) {
        items.push_back({{"task", to_string(l.task)},
                         {"trial", l.trial},
                         {"target", to_json(l.target)},
                         {"cursor", to_json(l.cursor_px)}});
    }
    return {{"format", "neurotrack-session"}, {"version", kSessionVersion}, {"config", to_json(config)},
            {"labels", items}};
}

std::vector<EpochLabel> labels_from_sidecar(const json& j) {
    std::vector<EpochLabel> out;
    for (const auto& item : j.at("labels")) {
        EpochLabel l;
        l.task = task_from_string(item.at("task").get<std::string>());
        l.trial = item.at("trial").get<int>();
        l.target = target_from_json(item.at("target"));
        l.cursor_px = vec2_from_json(item.at("cursor"));
        out.push_back(l);
    }
    return out;
}

}  // namespace neurotrack::io
