#include "neurotrack/apps.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>

#include "neurotrack/random.hpp"
#include "neurotrack/velocity.hpp"

namespace neurotrack {

namespace {

bool contains(const std::vector<Cell>& cells, const Cell& c) {
    return std::find(cells.begin(), cells.end(), c) != cells.end();
}

Cell draw_food(const SnakeState& s) {
    std::vector<Cell> free;
    for (int r = 0; r < s.rows; ++r) {
        for (int c = 0; c < s.cols; ++c) {
            const Cell cell{c, r};
            if (!contains(s.snake, cell)) free.push_back(cell);
        }
    }
    if (free.empty()) return {-1, -1};
    Rng rng(derive_seed(s.food_seed, {s.food_draws}));
    return free[rng.below(free.size())];
}

}  // namespace

SnakeState new_snake(int cols, int rows, std::uint64_t food_seed, int initial_length) {
    if (cols < initial_length + 1 || rows < 1 || initial_length < 1) {
        throw InvalidArgument("new_snake: grid too small for the initial snake");
    }
    SnakeState s;
    s.cols = cols;
    s.rows = rows;
    s.initial_length = initial_length;
    s.food_seed = food_seed;
    const Cell head{cols / 2, rows / 2};
    for (int i = 0; i < initial_length; ++i) s.snake.push_back({head[0] - i, head[1]});
    s.food = draw_food(s);
    s.food_draws = 1;
    return s;
}

Cell snake_direction(int region, int n_regions) {
    if (n_regions < 1 || region < 0 || region >= n_regions) return {0, 0};
    if ((4 * region) % n_regions != 0) return {0, 0};
    switch ((4 * region) / n_regions) {
        case 0: return {1, 0};
        case 1: return {0, 1};
        case 2: return {-1, 0};
        case 3: return {0, -1};
    }
    return {0, 0};
}

SnakeState snake_step(const SnakeState& state, const RhoVector& rho, double alpha) {
    if (!state.alive) throw InvalidArgument("snake_step: the snake is dead");
    SnakeState next = state;
    ++next.steps;
    const GateDecision gate = confidence_gate(rho, alpha);
    if (!gate.move) return next;
    const Cell d = snake_direction(gate.region, rho.size());
    if (d[0] == 0 && d[1] == 0) return next;

    const Cell head = state.snake.front();
    const Cell target{head[0] + d[0], head[1] + d[1]};
    if (target[0] < 0 || target[0] >= state.cols || target[1] < 0 || target[1] >= state.rows) {
        next.alive = false;
        return next;
    }
    const bool eats = target == state.food;
    std::vector<Cell> body = state.snake;
    if (!eats) body.pop_back();  // the tail vacates its cell this step
    if (contains(body, target)) {
        next.alive = false;
        return next;
    }
    body.insert(body.begin(), target);
    next.snake = std::move(body);
    if (eats) {
        next.score = static_cast<int>(next.snake.size()) - next.initial_length;
        next.food = draw_food(next);
        ++next.food_draws;
    }
    return next;
}

SnakeState snake_replay(const SnakeState& initial, const std::vector<RhoVector>& log, double alpha) {
    SnakeState s = initial;
    for (const auto& rho : log) {
        if (!s.alive) break;
        s = snake_step(s, rho, alpha);
    }
    return s;
}

bool PaintingState::on_canvas(const Vec2& p) const {
    return std::abs(p.x()) <= width_px / 2.0 && std::abs(p.y()) <= height_px / 2.0;
}

void set_brush(PaintingState& state, bool down) {
    if (down && !state.brush_down) state.stroke_open = false;
    state.brush_down = down;
}

void paint_step(PaintingState& state, const Vec2& cursor) {
    if (!state.brush_down) return;
    if (!state.on_canvas(cursor)) {
        state.stroke_open = false;
        return;
    }
    if (!state.stroke_open) {
        state.strokes.emplace_back();
        state.stroke_open = true;
    }
    state.strokes.back().push_back(cursor);
}

std::string painting_svg(const PaintingState& state, double stroke_width) {
    std::ostringstream out;
    out << std::setprecision(10);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << state.width_px << "\" height=\""
        << state.height_px << "\" viewBox=\"0 0 " << state.width_px << ' ' << state.height_px << "\">\n";
    out << "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    for (const auto& stroke : state.strokes) {
        out << "  <polyline fill=\"none\" stroke=\"black\" stroke-width=\"" << stroke_width
            << "\" stroke-linecap=\"round\" stroke-linejoin=\"round\" points=\"";
        for (std::size_t i = 0; i < stroke.size(); ++i) {
            const double x = stroke[i].x() + state.width_px / 2.0;
            const double y = state.height_px / 2.0 - stroke[i].y();
            out << (i ? " " : "") << x << ',' << y;
        }
        out << "\"/>\n";
    }
    out << "</svg>\n";
    return out.str();
}

}  // namespace neurotrack
