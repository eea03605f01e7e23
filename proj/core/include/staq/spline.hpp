#pragma once

#include <span>
#include <string_view>
#include <utility>

#include "staq/types.hpp"

namespace staq {

/// Equidistant B-spline basis on [0, 1]: `num_knots` knots span the unit
/// interval and `degree` extension knots are added on each side, giving
/// dimension num_knots + degree - 1 (7 knots, cubic -> 9).
struct BasisConfig {
  int degree = 3;
  int num_knots = 7;

  int dimension() const noexcept { return num_knots + degree - 1; }
  void validate() const;
};

/// n x D matrix of B-spline values at x (all x in [0, 1]).
Matrix bspline_design(std::span<const double> x, const BasisConfig& cfg);

/// Prior precision K with its rank and a basis of ker(K) (orthonormal columns).
struct PenaltySpec {
  Matrix matrix;
  int rank = 0;
  Matrix kernel_basis;
};

/// Second-order random walk: K = D2' D2, rank D - 2, kernel spanned by the
/// constant and the centered index sequence.
PenaltySpec rw2_penalty(int dimension);

/// Ridge-type penalty K = I (linear effects).
PenaltySpec identity_penalty(int dimension);

/// A = kernel_basis' ((D - rank) x D). Empty for full-rank penalties.
Matrix constraint_matrix(const PenaltySpec& spec);

enum class EffectPart { Linear, Nonlinear };

std::string_view to_string(EffectPart part);

/// Design, penalty and constraint of one selectable effect part, plus what is
/// needed to evaluate the part at new (standardized) covariate values.
struct BlockDesign {
  EffectPart part = EffectPart::Linear;
  Matrix design;
  PenaltySpec penalty;
  Matrix constraint;
  BasisConfig basis;
  /// Linear part: mean of x. Nonlinear part: training column means of the
  /// B-spline basis (the design is column-centered).
  double x_mean = 0.0;
  Vector column_means;

  int dimension() const noexcept { return static_cast<int>(design.cols()); }

  /// Design rows at new standardized covariate values (same centering).
  Matrix evaluate(std::span<const double> x) const;
};

/// Centered linear column x - mean(x), K = I(1), no constraint.
BlockDesign linear_block(std::span<const double> x);

/// Column-centered B-spline design, RW2 penalty, A = ker(K)'.
BlockDesign nonlinear_block(std::span<const double> x, const BasisConfig& cfg);

/// Split the effect of x into its unpenalized linear part and the penalized
/// non-linear deviation.
std::pair<BlockDesign, BlockDesign> decompose_effect(std::span<const double> x, const BasisConfig& cfg);

}  // namespace staq
