#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "neurotrack/core.hpp"
#include "neurotrack/trca.hpp"

namespace neurotrack {

// ----------------------------------------------------------------------------
// Snake
// ----------------------------------------------------------------------------

/// Grid cell {column, row}; row 0 is the bottom row so "up" matches +y.
using Cell = std::array<int, 2>;

struct SnakeState {
    int cols = 16;
    int rows = 16;
    std::vector<Cell> snake;  // head first
    Cell food{-1, -1};        // {-1, -1} once the board is full
    int score = 0;
    int initial_length = 3;
    bool alive = true;
    std::uint64_t food_seed = 0;
    std::uint64_t food_draws = 0;
    int steps = 0;            // ρ vectors consumed, moves and holds alike
};

/// Length-3 snake lying horizontally with its head at the grid center,
/// facing right; first food drawn from `food_seed`.
SnakeState new_snake(int cols, int rows, std::uint64_t food_seed, int initial_length = 3);

/// Grid move for a region, or {0, 0} when the region has no movement role.
/// Only regions on the 0/90/180/270 degree axes move the snake.
Cell snake_direction(int region, int n_regions);

/// One game step. The confidence gate runs every step; a held or diagonal
/// decision returns the state unchanged apart from the step counter.
/// Reversing into the neck counts as a self collision.
SnakeState snake_step(const SnakeState& state, const RhoVector& rho, double alpha);

/// Replays a ρ log from an initial state; stops early when the snake dies.
SnakeState snake_replay(const SnakeState& initial, const std::vector<RhoVector>& log, double alpha);

// ----------------------------------------------------------------------------
// Painting
// ----------------------------------------------------------------------------

struct PaintingState {
    double width_px = 800.0;
    double height_px = 800.0;
    std::vector<std::vector<Vec2>> strokes;  // centered coordinates
    bool brush_down = false;
    bool stroke_open = false;

    bool on_canvas(const Vec2& p) const;
};

/// Lowering the brush starts a new stroke at the next painted point.
void set_brush(PaintingState& state, bool down);

/// Appends the cursor to the open stroke while the brush is down. A point
/// off the canvas ends the stroke; the next on-canvas point starts another.
void paint_step(PaintingState& state, const Vec2& cursor);

/// Strokes as SVG polylines in raster coordinates (origin top-left, +y down).
std::string painting_svg(const PaintingState& state, double stroke_width = 3.0);

}  // namespace neurotrack
