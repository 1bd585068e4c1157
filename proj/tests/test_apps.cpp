#include <doctest.h>

#include <cmath>

#include "neurotrack/random.hpp"
#include "neurotrack/apps.hpp"
#include "neurotrack/velocity.hpp"

using namespace neurotrack;

namespace {

RhoVector confident(int region) {
    std::vector<double> r(8, 0.05);
    r[region] = 1.5;
    r[(region + 3) % 8] = 0.07;  // non-zero spread in the rest
    return {r};
}

}  // namespace

TEST_CASE("confident move up grows the head upward") {
    auto s = new_snake(16, 16, 1);
    s.food = {0, 0};
    const Cell head = s.snake.front();
    const auto n = snake_step(s, confident(2), 0.05);
    CHECK(n.snake.front() == Cell{head[0], head[1] + 1});
    CHECK(n.snake.size() == s.snake.size());
    CHECK(n.steps == 1);
}

TEST_CASE("diagonal regions hold") {
    const auto s = new_snake(16, 16, 1);
    for (int r : {1, 3, 5, 7}) {
        const auto n = snake_step(s, confident(r), 0.05);
        CHECK(n.snake == s.snake);
        CHECK(n.alive);
        CHECK(n.steps == s.steps + 1);
    }
}

TEST_CASE("low confidence holds") {
    const auto s = new_snake(16, 16, 1);
    const auto n = snake_step(s, {{0.30, 0.28, 0.29, 0.27, 0.31, 0.26, 0.29, 0.28}}, 0.01);
    CHECK(n.snake == s.snake);
}

TEST_CASE("moving into the wall kills the snake") {
    auto s = new_snake(16, 16, 1);
    s.food = {0, 0};
    for (int i = 0; i < 7; ++i) s = snake_step(s, confident(2), 0.05);
    CHECK(s.alive);
    CHECK(s.snake.front()[1] == 15);
    s = snake_step(s, confident(2), 0.05);
    CHECK_FALSE(s.alive);
}

TEST_CASE("reversing into the neck is a collision") {
    const auto s = new_snake(16, 16, 1);
    CHECK_FALSE(snake_step(s, confident(4), 0.05).alive);
}

TEST_CASE("eating grows the snake and respawns food off the body") {
    auto s = new_snake(16, 16, 1);
    const Cell head = s.snake.front();
    s.food = {head[0] + 1, head[1]};
    const auto n = snake_step(s, confident(0), 0.05);
    CHECK(n.score == 1);
    CHECK(n.snake.size() == s.snake.size() + 1);
    CHECK(n.food != s.food);
    for (const auto& c : n.snake) CHECK(c != n.food);
}

TEST_CASE("replay from a rho log is bit identical") {
    const auto s = new_snake(12, 10, 99);
    std::vector<RhoVector> log;
    Rng rng(5);
    for (int i = 0; i < 60; ++i) {
        std::vector<double> r(8);
        for (double& x : r) x = rng.uniform(-0.2, 0.4);
        r[rng.below(8)] += rng.uniform(0.0, 1.5);
        log.push_back({r});
    }
    const auto a = snake_replay(s, log, 0.05);
    const auto b = snake_replay(s, log, 0.05);
    CHECK(a.snake == b.snake);
    CHECK(a.food == b.food);
    CHECK(a.score == b.score);
    CHECK(a.alive == b.alive);
    CHECK(a.steps == b.steps);
    auto manual = s;
    for (const auto& r : log) {
        if (!manual.alive) break;
        manual = snake_step(manual, r, 0.05);
    }
    CHECK(manual.snake == a.snake);
    CHECK(manual.steps == a.steps);
}

TEST_CASE("painting records strokes only with the brush down") {
    PaintingState p;
    paint_step(p, {1, 1});
    CHECK(p.strokes.empty());
    set_brush(p, true);
    const auto profile = decay_profile({Vec2(90, -30)}, 60);
    Vec2 c = Vec2::Zero();
    double bound = 0.0;
    for (int step = 0; step < 3; ++step) {
        for (const auto& d : profile) {
            c += d;
            paint_step(p, c);
        }
    }
    REQUIRE(p.strokes.size() == 1);
    CHECK(p.strokes[0].size() == 180);
    // the largest frame displacement of the linear decay is 2|v|/frames
    bound = 2.0 * Vec2(90, -30).norm() / 60.0;
    for (std::size_t i = 1; i < p.strokes[0].size(); ++i) {
        CHECK((p.strokes[0][i] - p.strokes[0][i - 1]).norm() <= bound + 1e-12);
    }
    set_brush(p, false);
    paint_step(p, {5, 5});
    CHECK(p.strokes.size() == 1);
    CHECK(p.strokes[0].size() == 180);
    const auto svg = painting_svg(p);
    CHECK(svg.find("<svg") != std::string::npos);
    CHECK(svg.find("polyline") != std::string::npos);
}
