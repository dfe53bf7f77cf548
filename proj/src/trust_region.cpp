#include "robot/trust_region.hpp"

#include <stdexcept>

#include "robot/qmc.hpp"

namespace robot {

void TrParams::validate() const {
  if (!(0.0 < length_min && length_min < length_init &&
        length_init <= length_max))
    throw std::invalid_argument(
        "trust region params: need 0 < length_min < length_init <= "
        "length_max");
  if (success_tolerance < 1 || failure_tolerance < 1)
    throw std::invalid_argument("trust region params: tolerances must be >= 1");
  if (gamma_rel < 0.0)
    throw std::invalid_argument("trust region params: gamma_rel must be >= 0");
}

void record_result(TrustRegionState& tr, const TrParams& params,
                   double batch_best_y) {
  bool success;
  if (std::isfinite(tr.incumbent_value)) {
    success = batch_best_y >
              tr.incumbent_value + params.gamma_rel * std::abs(tr.incumbent_value);
  } else {
    // Unset incumbent (fallback-centered region): any finite result counts.
    success = std::isfinite(batch_best_y);
  }
  if (success) {
    tr.success_count += 1;
    tr.failure_count = 0;
    if (tr.success_count >= params.success_tolerance) {
      tr.length = std::min(2.0 * tr.length, params.length_max);
      tr.success_count = 0;
    }
  } else {
    tr.failure_count += 1;
    tr.success_count = 0;
    if (tr.failure_count >= params.failure_tolerance) {
      tr.length = 0.5 * tr.length;
      tr.failure_count = 0;
    }
  }
}

Eigen::MatrixXd generate_candidates(const TrustRegionState& tr,
                                    const Eigen::VectorXd& lengthscales, int r,
                                    Rng& rng) {
  const int dim = static_cast<int>(tr.center.size());
  if (r < 1) throw std::invalid_argument("generate_candidates: r must be >= 1");

  // ARD weights with geometric mean 1, so the weighted box's side lengths
  // keep geometric mean equal to tr.length.
  Eigen::VectorXd w = lengthscales;
  double log_gm = w.array().log().mean();
  w /= std::exp(log_gm);

  Eigen::VectorXd lb(dim), ub(dim);
  for (int j = 0; j < dim; ++j) {
    double half = 0.5 * tr.length * w[j];
    lb[j] = std::max(0.0, tr.center[j] - half);
    ub[j] = std::min(1.0, tr.center[j] + half);
  }

  ScrambledSobol sobol(dim, rng);
  Eigen::MatrixXd box = sobol.draw(r);
  for (int i = 0; i < r; ++i)
    box.row(i) = lb.transpose().array() +
                 box.row(i).array() * (ub - lb).transpose().array();

  const double p_perturb = dim <= 20 ? 1.0 : 20.0 / dim;
  Eigen::MatrixXd C(r, dim);
  for (int i = 0; i < r; ++i) {
    C.row(i) = tr.center.transpose();
    int n_perturbed = 0;
    for (int j = 0; j < dim; ++j) {
      if (p_perturb >= 1.0 || rng.bernoulli(p_perturb)) {
        C(i, j) = box(i, j);
        ++n_perturbed;
      }
    }
    if (n_perturbed == 0) {
      int j = static_cast<int>(rng.below(dim));
      C(i, j) = box(i, j);
    }
  }
  return C;
}

}  // namespace robot
