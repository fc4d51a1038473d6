#pragma once

#include "spibb/envs/environment.hpp"

namespace spibb::envs {

/// Catch on a 10 x 5 grid. The ball spawns on a uniformly random column of
/// the top row and falls one row per step; the paddle lives on the bottom row,
/// starts in the middle column and moves {left, stay, right}. The tenth step
/// resolves the episode: +1 if the paddle is under the ball, -1 otherwise.
/// Observation is the flattened row-major grid with 1 at the ball and paddle.
class Catch final : public Environment {
 public:
  static constexpr int kRows = 10;
  static constexpr int kColumns = 5;

  Catch();

  const EnvSpec& spec() const override { return spec_; }
  std::unique_ptr<Environment> clone() const override;

  int ball_row() const { return ball_row_; }
  int ball_column() const { return ball_col_; }
  int paddle_column() const { return paddle_col_; }

 protected:
  Observation do_reset() override;
  std::pair<double, bool> do_step(int action) override;
  Observation observe() const override;

 private:
  EnvSpec spec_;
  int ball_row_ = 0;
  int ball_col_ = 0;
  int paddle_col_ = kColumns / 2;
};

}  // namespace spibb::envs
