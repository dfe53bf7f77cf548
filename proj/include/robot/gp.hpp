#pragma once

#include <Eigen/Dense>
#include <optional>

#include "robot/rng.hpp"

namespace robot {

// Hyperparameters are stored as unconstrained logs (except the mean) so the
// marginal-likelihood ascent is a plain unconstrained gradient step.
struct GpHyperparams {
  Eigen::VectorXd log_lengthscales;
  double log_signal_variance = 0.0;
  double log_noise_variance = 0.0;
  double mean_constant = 0.0;

  static GpHyperparams defaults(int dim);

  Eigen::VectorXd lengthscales() const {
    return log_lengthscales.array().exp();
  }
  double signal_variance() const { return std::exp(log_signal_variance); }
  double noise_variance() const { return std::exp(log_noise_variance); }

  int n_params() const { return static_cast<int>(log_lengthscales.size()) + 3; }

  // Flattened order: log lengthscales, log signal var, log noise var, mean.
  Eigen::VectorXd flatten() const;
  static GpHyperparams unflatten(const Eigen::VectorXd& theta, int dim);
};

struct PosteriorGaussian {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

// Adam moment buffers, kept across refits so warm-started training continues
// where the previous fit stopped.
struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  long t = 0;
};

// Exact GP with constant mean and ARD squared-exponential kernel:
//   k(x, x') = s2 * exp(-1/2 sum_j (x_j - x'_j)^2 / l_j^2)
// Immutable after fit; posterior and thompson_sample are read-only.
class GpModel {
 public:
  // Runs `steps` Adam ascent steps on the log marginal likelihood starting
  // from `init`, then caches the Cholesky factor and alpha. steps=0 keeps
  // init exactly. Targets are expected pre-standardized by the caller.
  static GpModel fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                     const GpHyperparams& init, int steps, double learning_rate,
                     AdamState* adam = nullptr);

  // Value and (optionally) gradient w.r.t. the flattened hyperparameters.
  double log_marginal_likelihood(Eigen::VectorXd* grad = nullptr) const;

  // Noise-free predictive posterior at query rows.
  PosteriorGaussian posterior(const Eigen::MatrixXd& Xq) const;

  // One joint draw from posterior(Xq): mean + L z.
  Eigen::VectorXd thompson_sample(const Eigen::MatrixXd& Xq, Rng& rng) const;

  const GpHyperparams& hyper() const { return hyper_; }
  const Eigen::MatrixXd& X() const { return X_; }
  const Eigen::VectorXd& y() const { return y_; }
  const Eigen::MatrixXd& chol() const { return L_; }
  const Eigen::VectorXd& alpha() const { return alpha_; }
  int n() const { return static_cast<int>(X_.rows()); }
  int dim() const { return static_cast<int>(X_.cols()); }

 private:
  GpModel() = default;
  void refresh_caches();

  Eigen::MatrixXd X_;
  Eigen::VectorXd y_;
  GpHyperparams hyper_;
  Eigen::MatrixXd L_;      // chol(K + noise I), lower
  Eigen::VectorXd alpha_;  // (K + noise I)^-1 (y - mean)
};

// Draws mean + L z with escalating jitter on the Cholesky; an exactly zero
// covariance short-circuits to the mean without consuming the rng.
Eigen::VectorXd sample_gaussian(const PosteriorGaussian& post, Rng& rng);

// Cholesky with jitter ladder 1e-8 -> 1e-6 -> 1e-4; throws "kernel not PSD"
// past the last rung. A zero jitter attempt is made first.
Eigen::MatrixXd cholesky_with_jitter(const Eigen::MatrixXd& A);

// Affine standardization of targets fitted on a sample: scaled = (y - mean)/sd.
struct TargetScaler {
  double mean = 0.0;
  double sd = 1.0;

  static TargetScaler fit(const Eigen::VectorXd& y);
  Eigen::VectorXd scale(const Eigen::VectorXd& y) const {
    return (y.array() - mean) / sd;
  }
  double unscale(double v) const { return mean + sd * v; }
};

}  // namespace robot
