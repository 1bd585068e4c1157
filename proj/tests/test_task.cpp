#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "neurotrack/random.hpp"
#include "neurotrack/numeric.hpp"
#include "neurotrack/task.hpp"
#include "oracles.hpp"

using namespace neurotrack;

namespace {

struct Trained {
    Simulator sim;
    TrainingResult training;
};

const Trained& default_trained() {
    static const Trained t = [] {
        Simulator sim(SessionConfig{}, default_subject());
        auto tr = run_training(sim);
        return Trained{std::move(sim), std::move(tr)};
    }();
    return t;
}

const Trained& ideal_trained() {
    static const Trained t = [] {
        Simulator sim(SessionConfig{}, ideal_subject());
        auto tr = run_training(sim);
        return Trained{std::move(sim), std::move(tr)};
    }();
    return t;
}

TrialRecord hit_record(double d, double t, Ring ring = Ring::outer) {
    TrialRecord r;
    r.target.position_px = {d, 0.0};
    r.target.ring = ring;
    r.outcome = Outcome::hit;
    r.time_to_target_s = t;
    return r;
}

}  // namespace

TEST_CASE("training produces the protocol's trial counts") {
    const auto& t = default_trained();
    CHECK(t.training.stage1_labels.size() == 48);
    CHECK(t.training.regression.n_trials() == 192);
    CHECK(t.training.stage2_labels.size() == 192);
    CHECK(t.training.models.trca.n_trials_trained == 48);
}

TEST_CASE("training is deterministic under the session seed") {
    const auto& t = default_trained();
    const Simulator again(SessionConfig{}, default_subject());
    const auto tr = run_training(again);
    for (int m = 0; m < tr.models.trca.n_subbands(); ++m) {
        CHECK((tr.models.trca.filters[m] - t.training.models.trca.filters[m]).norm() == 0.0);
    }
    CHECK((tr.models.corrected.matrix - t.training.models.corrected.matrix).norm() == 0.0);
}

TEST_CASE("noiseless subject reaches an outer target within 3 steps") {
    const auto& t = ideal_trained();
    const ClosedLoop loop(t.sim, t.training.models);
    for (const auto& target : stage1_targets(t.sim.config())) {
        const auto rec = loop.run_trial(TaskKind::fixed, 0, target, Vec2::Zero(), {});
        CHECK(rec.outcome == Outcome::hit);
        CHECK(rec.steps.size() <= 3);
    }
}

TEST_CASE("a subject without evoked signal times out at exactly 15 s") {
    const auto& t = default_trained();
    auto silent = default_subject();
    silent.signal_amplitude_uv = 0.0;
    const Simulator sim(SessionConfig{}, silent);
    const ClosedLoop loop(sim, t.training.models);
    TargetSpec target = stage1_targets(sim.config())[0];
    target.radius_px = 1.0;
    target.position_px = {-390.0, 390.0};
    const auto rec = loop.run_trial(TaskKind::fixed, 0, target, Vec2::Zero(), {});
    CHECK(rec.outcome == Outcome::timeout);
    CHECK(rec.time_to_target_s == 15.0);
    CHECK(rec.steps.size() == 14);
}

TEST_CASE("fixed task covers every stage II position three times") {
    const auto& t = default_trained();
    const auto recs = run_fixed_task(t.sim, t.training.models);
    REQUIRE(recs.size() == 96);
    std::map<std::pair<long, long>, int> count;
    for (const auto& r : recs) {
        ++count[{std::lround(r.target.position_px.x() * 1000), std::lround(r.target.position_px.y() * 1000)}];
        CHECK(r.start_px == Vec2::Zero());
    }
    CHECK(count.size() == 32);
    for (const auto& [k, n] : count) CHECK(n == 3);
    const auto again = run_fixed_task(t.sim, t.training.models);
    for (std::size_t i = 0; i < recs.size(); ++i) CHECK(again[i].target.position_px == recs[i].target.position_px);
}

TEST_CASE("random task chains trials and respects the margin") {
    const auto& t = default_trained();
    const auto recs = run_random_task(t.sim, t.training.models);
    REQUIRE(recs.size() == 12);
    const auto& c = t.sim.config();
    for (std::size_t i = 0; i < recs.size(); ++i) {
        if (i > 0) CHECK(recs[i].start_px == recs[i - 1].end_px);
        const Vec2 p = recs[i].target.position_px;
        CHECK(c.screen_width_px / 2.0 - std::abs(p.x()) >= 40.0);
        CHECK(c.screen_height_px / 2.0 - std::abs(p.y()) >= 40.0);
    }
    const auto again = run_random_task(t.sim, t.training.models);
    for (std::size_t i = 0; i < recs.size(); ++i) CHECK(again[i].target.position_px == recs[i].target.position_px);
}

TEST_CASE("fitts ITR") {
    CHECK(fitts_itr(0.0, 80.0, 3.0) == 0.0);
    CHECK(fitts_itr(80.0, 80.0, 1.0) == 1.0);
    CHECK(fitts_itr(266.67, 80.0, 5.03) == doctest::Approx(0.4205747692685775).epsilon(1e-12));
    Rng rng(1);
    for (int i = 0; i < 100; ++i) {
        const double d = rng.uniform(0, 600), s = rng.uniform(10, 120), tt = rng.uniform(0.5, 15);
        CHECK(std::abs(fitts_itr(d, s, tt) - oracle::fitts(d, s, tt)) <= 1e-12);
    }
}

TEST_CASE("velocity errors") {
    const auto same = velocity_errors(Vec2(3, 4), Vec2(3, 4));
    CHECK(*same.angular_deg == 0.0);
    CHECK(same.vector == 0.0);
    const auto perp = velocity_errors(Vec2(0, 5), Vec2(5, 0));
    CHECK(*perp.angular_deg == doctest::Approx(90.0).epsilon(1e-12));
    CHECK(perp.vector == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
    const auto zero = velocity_errors(Vec2::Zero(), Vec2(5, 0));
    CHECK_FALSE(zero.angular_deg.has_value());
    CHECK(zero.vector == 1.0);
}

TEST_CASE("metrics exclude timeouts from ITR and time-to-target") {
    std::vector<TrialRecord> recs{hit_record(266.67, 4.0), hit_record(133.33, 2.0, Ring::inner)};
    TrialRecord to = hit_record(266.67, 15.0);
    to.outcome = Outcome::timeout;
    recs.push_back(to);
    for (auto& r : recs) r.target.radius_px = 40.0;
    const auto m = compute_metrics(recs, SessionConfig{});
    CHECK(m.n_trials == 3);
    CHECK(m.n_hits == 2);
    CHECK(m.success_rate == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    const double itr = (oracle::fitts(266.67, 80, 4.0) + oracle::fitts(133.33, 80, 2.0)) / 2;
    CHECK(m.fitts_itr_bps == doctest::Approx(itr).epsilon(1e-12));
    CHECK(m.time_to_target.mean == 3.0);
    CHECK(m.time_to_target_outer.mean == 4.0);
    CHECK(m.time_to_target_inner.mean == 2.0);
}

TEST_CASE("cursor integration conserves the decoded step") {
    Rng rng(12);
    for (int i = 0; i < 1000; ++i) {
        const Vec2 v(rng.uniform(-400, 400), rng.uniform(-400, 400));
        const Vec2 start(rng.uniform(-400, 400), rng.uniform(-400, 400));
        CursorIntegrator c(start);
        for (const auto& d : decay_profile({v}, 60)) c.add(d);
        CHECK(std::abs(c.position().x() - (start.x() + v.x())) <= 1e-12 * (std::abs(start.x()) + std::abs(v.x())));
        CHECK(std::abs(c.position().y() - (start.y() + v.y())) <= 1e-12 * (std::abs(start.y()) + std::abs(v.y())));
        CursorIntegrator origin;
        for (const auto& d : decay_profile({v}, 60)) origin.add(d);
        CHECK(origin.position().x() == v.x());
        CHECK(origin.position().y() == v.y());
    }
}

TEST_CASE("post-hit hold rate") {
    const auto& t = ideal_trained();
    const ClosedLoop loop(t.sim, t.training.models);
    TrialOptions o;
    o.post_hit_frames = 60;
    std::vector<TrialRecord> recs;
    for (const auto& target : stage2_targets(t.sim.config())) {
        recs.push_back(loop.run_trial(TaskKind::fixed, 0, target, Vec2::Zero(), o));
    }
    CHECK(post_hit_hold_rate(recs, 0.0, 60.0) == 1.0);
    CHECK(post_hit_hold_rate(recs, 0.2, 60.0) == 1.0);

    const auto& d = default_trained();
    const ClosedLoop noisy(d.sim, d.training.models);
    std::vector<TrialRecord> drecs;
    for (const auto& target : stage2_targets(d.sim.config())) {
        drecs.push_back(noisy.run_trial(TaskKind::fixed, 1, target, Vec2::Zero(), o));
    }
    double prev = 1.0;
    for (int k = 0; k <= 10; ++k) {
        const double r = post_hit_hold_rate(drecs, 0.1 * k, 60.0);
        CHECK(r <= prev);
        prev = r;
    }
}

TEST_CASE("jitter inspection") {
    const auto& ideal = ideal_trained();
    const auto ij = run_jitter_inspection(ideal.sim, ideal.training.models);
    for (std::size_t k = 0; k < ij.time_s.size(); ++k) {
        CHECK(ij.within_filtered[k] == 1.0);
        CHECK(ij.within_raw[k] == 1.0);
    }
    const auto& d = default_trained();
    const auto dj = run_jitter_inspection(d.sim, d.training.models);
    CHECK(dj.records.size() == 27);
    for (std::size_t k = 0; k < dj.time_s.size(); ++k) CHECK(dj.within_raw[k] >= dj.within_filtered[k]);
}

TEST_CASE("jitter band: default subject keeps 85% of positions inside the raw circle after 1 s") {
    const auto& d = default_trained();
    const auto dj = run_jitter_inspection(d.sim, d.training.models);
    const double at1 = dj.proportion_at(1.0, true);
    CHECK(at1 >= 0.85);
    CHECK(at1 <= 1.0);
}
