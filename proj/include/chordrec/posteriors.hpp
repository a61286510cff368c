#pragma once

#include <filesystem>
#include <iosfwd>

#include <Eigen/Core>

#include "chordrec/chord.hpp"

namespace chordrec {

using ProbMatrix = Eigen::Matrix<double, Eigen::Dynamic, kNumClasses, Eigen::RowMajor>;

// Frame-wise chord posteriors P_A(y_t | x_t), one row per frame in
// ChordClass index order.
struct PosteriorMatrix {
  ProbMatrix probs;
  double frame_rate = 10.0;

  Eigen::Index frames() const { return probs.rows(); }
};

constexpr double kPosteriorFloor = 1e-12;

// Throws ValidationError on an empty matrix, negative or non-finite entries,
// or a row sum further than `tolerance` from 1.
void validate_posteriors(const PosteriorMatrix& p, double tolerance = 1e-6);

// CSV with T rows of 25 values and an optional header line. Rows within
// 1e-3 of stochastic are renormalized; entries are clamped to [1e-12, 1].
PosteriorMatrix load_posteriors(std::istream& in, double frame_rate = 10.0);
PosteriorMatrix load_posteriors(const std::filesystem::path& path, double frame_rate = 10.0);

void write_posteriors(std::ostream& out, const PosteriorMatrix& p, bool header = true);
void write_posteriors(const std::filesystem::path& path, const PosteriorMatrix& p, bool header = true);

}  // namespace chordrec
