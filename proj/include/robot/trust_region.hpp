#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "robot/core.hpp"
#include "robot/gp.hpp"
#include "robot/rng.hpp"

namespace robot {

struct TrParams {
  double length_init = 0.8;
  double length_min = 0.0078125;  // 0.5^7
  double length_max = 1.6;
  int success_tolerance = 3;
  int failure_tolerance = 0;  // 0 = derive from dimension and batch size
  double gamma_rel = 1e-3;    // relative improvement margin

  void validate() const;

  // Failure tolerance grows with dimension relative to the batch size so a
  // region is not shrunk before it had a chance to probe each axis.
  static int default_failure_tolerance(int dim, int batch_per_tr) {
    int per_batch = (dim + batch_per_tr - 1) / batch_per_tr;
    return per_batch < 5 ? 5 : per_batch;
  }
};

// One trust region. center/incumbent live in normalized [0,1] coordinates
// and are maintained by the optimizer's recentering pass, not by
// record_result. Exactly one of the two streak counters is nonzero.
struct TrustRegionState {
  int rank = 1;
  Point center;
  double incumbent_value = -std::numeric_limits<double>::infinity();
  double length = 0.8;
  int success_count = 0;
  int failure_count = 0;
  bool center_is_fallback = false;
};

// Applies the success/failure streak rule for one completed batch. A batch
// counts as a success only if its best value beats the incumbent by the
// relative margin gamma_rel; length doubles (capped) after
// success_tolerance successes in a row and halves after failure_tolerance
// failures in a row.
void record_result(TrustRegionState& tr, const TrParams& params,
                   double batch_best_y);

inline bool needs_restart(const TrustRegionState& tr, const TrParams& params) {
  return tr.length < params.length_min;
}

// Candidate box around the center with per-dimension widths weighted by the
// ARD lengthscales (normalized to geometric mean 1), intersected with the
// unit cube. Points come from a freshly scrambled Sobol sequence; each
// coordinate is perturbed with probability min(20/dim, 1), the rest copy the
// center, and at least one coordinate is always perturbed.
Eigen::MatrixXd generate_candidates(const TrustRegionState& tr,
                                    const Eigen::VectorXd& lengthscales, int r,
                                    Rng& rng);

}  // namespace robot
