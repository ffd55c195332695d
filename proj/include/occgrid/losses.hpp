#pragma once

#include <vector>

#include "occgrid/grid.hpp"

namespace occgrid {

struct LossWeights {
  double lambda_occ = 1.0;
  double lambda_height = 1.0;
  double lambda_flow = 1.0;

  void validate() const {
    require(lambda_occ >= 0.0 && lambda_height >= 0.0 && lambda_flow >= 0.0,
            "LossWeights: weights must be non-negative");
    require(lambda_occ + lambda_height + lambda_flow > 0.0,
            "LossWeights: at least one weight must be positive");
  }
};

struct FrameLosses {
  double occ = 0.0;
  double height = 0.0;
  double flow = 0.0;
};

// Mean binary cross-entropy with probabilities clamped to [eps, 1-eps],
// eps = 1e-7. Accumulation runs over fixed 4096-cell blocks so the result
// is bitwise identical for any thread count.
double bce_loss(const RealGrid2D& pred_prob, const BevOccupancy& gt);

// Mean smooth-L1 over mask-selected cells: 0.5*d^2/beta below beta,
// |d| - 0.5*beta above. Empty masks score 0.
double smooth_l1_loss(const RealGrid2D& pred, const RealGrid2D& gt,
                      const BevOccupancy& valid_mask, double beta = 1.0);

// Time-averaged weighted sum over [0, n_future].
double total_loss(const std::vector<FrameLosses>& per_frame, const LossWeights& w);

}  // namespace occgrid
