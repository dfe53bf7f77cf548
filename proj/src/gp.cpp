#include "robot/gp.hpp"

#include <cmath>
#include <stdexcept>

namespace robot {

namespace {

constexpr double kLogLenMin = -5.2983173665480363;   // log 5e-3
constexpr double kLogLenMax = 0.69314718055994531;   // log 2
constexpr double kLogSigMin = -2.9957322735539909;   // log 0.05
constexpr double kLogSigMax = 2.9957322735539909;    // log 20
constexpr double kLogNoiseMin = -13.815510557964274; // log 1e-6
constexpr double kLogNoiseMax = 0.0;                 // log 1
constexpr double kLog2Pi = 1.8378770664093453;

// Scaled squared distances: S_ab = sum_j (X_aj - Z_bj)^2 / l_j^2.
Eigen::MatrixXd scaled_sqdist(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Z,
                              const Eigen::VectorXd& lengthscales) {
  Eigen::VectorXd inv_l = lengthscales.cwiseInverse();
  Eigen::MatrixXd Xw = X * inv_l.asDiagonal();
  Eigen::MatrixXd Zw = Z * inv_l.asDiagonal();
  Eigen::VectorXd xs = Xw.rowwise().squaredNorm();
  Eigen::VectorXd zs = Zw.rowwise().squaredNorm();
  Eigen::MatrixXd S = -2.0 * (Xw * Zw.transpose());
  S.colwise() += xs;
  S.rowwise() += zs.transpose();
  return S.cwiseMax(0.0);
}

Eigen::MatrixXd kernel(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Z,
                       const GpHyperparams& h) {
  Eigen::MatrixXd S = scaled_sqdist(X, Z, h.lengthscales());
  return h.signal_variance() * (-0.5 * S.array()).exp().matrix();
}

void clamp_in_place(GpHyperparams& h) {
  for (int j = 0; j < h.log_lengthscales.size(); ++j)
    h.log_lengthscales[j] =
        std::clamp(h.log_lengthscales[j], kLogLenMin, kLogLenMax);
  h.log_signal_variance =
      std::clamp(h.log_signal_variance, kLogSigMin, kLogSigMax);
  h.log_noise_variance =
      std::clamp(h.log_noise_variance, kLogNoiseMin, kLogNoiseMax);
}

}  // namespace

GpHyperparams GpHyperparams::defaults(int dim) {
  GpHyperparams h;
  h.log_lengthscales = Eigen::VectorXd::Constant(dim, std::log(0.3));
  h.log_signal_variance = 0.0;
  h.log_noise_variance = std::log(0.01);
  h.mean_constant = 0.0;
  return h;
}

Eigen::VectorXd GpHyperparams::flatten() const {
  const int d = static_cast<int>(log_lengthscales.size());
  Eigen::VectorXd theta(d + 3);
  theta.head(d) = log_lengthscales;
  theta[d] = log_signal_variance;
  theta[d + 1] = log_noise_variance;
  theta[d + 2] = mean_constant;
  return theta;
}

GpHyperparams GpHyperparams::unflatten(const Eigen::VectorXd& theta, int dim) {
  GpHyperparams h;
  h.log_lengthscales = theta.head(dim);
  h.log_signal_variance = theta[dim];
  h.log_noise_variance = theta[dim + 1];
  h.mean_constant = theta[dim + 2];
  return h;
}

Eigen::MatrixXd cholesky_with_jitter(const Eigen::MatrixXd& A) {
  static const double jitters[] = {0.0, 1e-8, 1e-6, 1e-4};
  const int n = static_cast<int>(A.rows());
  for (double j : jitters) {
    Eigen::MatrixXd Aj = A;
    if (j > 0.0) Aj.diagonal().array() += j;
    Eigen::LLT<Eigen::MatrixXd> llt(Aj);
    if (llt.info() == Eigen::Success) {
      Eigen::MatrixXd L = llt.matrixL();
      bool finite = L.allFinite();
      // LLT can report success with non-finite entries on pathological input.
      if (finite && (n == 0 || L.diagonal().minCoeff() > 0.0)) return L;
    }
  }
  throw std::runtime_error("kernel not PSD");
}

TargetScaler TargetScaler::fit(const Eigen::VectorXd& y) {
  TargetScaler s;
  s.mean = y.mean();
  double var = (y.array() - s.mean).square().sum() /
               static_cast<double>(y.size());
  s.sd = std::sqrt(var);
  if (!(s.sd > 1e-12)) s.sd = 1.0;
  return s;
}

void GpModel::refresh_caches() {
  Eigen::MatrixXd Ks = kernel(X_, X_, hyper_);
  Ks.diagonal().array() += hyper_.noise_variance();
  L_ = cholesky_with_jitter(Ks);
  Eigen::VectorXd r = y_.array() - hyper_.mean_constant;
  alpha_ = L_.triangularView<Eigen::Lower>().solve(r);
  L_.triangularView<Eigen::Lower>().transpose().solveInPlace(alpha_);
}

double GpModel::log_marginal_likelihood(Eigen::VectorXd* grad) const {
  const int n = this->n();
  Eigen::VectorXd r = y_.array() - hyper_.mean_constant;
  double value = -0.5 * r.dot(alpha_) -
                 L_.diagonal().array().log().sum() - 0.5 * n * kLog2Pi;
  if (!grad) return value;

  const int d = dim();
  Eigen::MatrixXd K = kernel(X_, X_, hyper_);
  Eigen::MatrixXd Kinv = Eigen::MatrixXd::Identity(n, n);
  L_.triangularView<Eigen::Lower>().solveInPlace(Kinv);
  L_.triangularView<Eigen::Lower>().transpose().solveInPlace(Kinv);
  Eigen::MatrixXd W = alpha_ * alpha_.transpose() - Kinv;
  Eigen::MatrixXd G = W.cwiseProduct(K);
  Eigen::VectorXd g1 = G.rowwise().sum();
  Eigen::MatrixXd GX = G * X_;
  Eigen::VectorXd l2 = hyper_.lengthscales().array().square();

  grad->resize(d + 3);
  for (int j = 0; j < d; ++j) {
    const auto xj = X_.col(j);
    double t = xj.cwiseProduct(xj).dot(g1) - xj.dot(GX.col(j));
    (*grad)[j] = t / l2[j];
  }
  (*grad)[d] = 0.5 * G.sum();
  (*grad)[d + 1] = 0.5 * hyper_.noise_variance() * W.trace();
  (*grad)[d + 2] = alpha_.sum();
  return value;
}

GpModel GpModel::fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                     const GpHyperparams& init, int steps, double learning_rate,
                     AdamState* adam) {
  if (X.rows() < 1 || X.rows() != y.size())
    throw std::invalid_argument("gp fit: bad training data");

  GpModel model;
  model.X_ = X;
  model.y_ = y;
  model.hyper_ = init;
  model.refresh_caches();
  if (steps <= 0) return model;

  const int d = model.dim();
  const int p = d + 3;
  AdamState local;
  AdamState& st = adam ? *adam : local;
  if (st.m.size() != p) {
    st.m = Eigen::VectorXd::Zero(p);
    st.v = Eigen::VectorXd::Zero(p);
    st.t = 0;
  }

  const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  Eigen::VectorXd theta = model.hyper_.flatten();
  for (int s = 0; s < steps; ++s) {
    Eigen::VectorXd g;
    model.log_marginal_likelihood(&g);
    st.t += 1;
    st.m = b1 * st.m + (1.0 - b1) * g;
    st.v = b2 * st.v + (1.0 - b2) * g.cwiseProduct(g);
    double c1 = 1.0 - std::pow(b1, static_cast<double>(st.t));
    double c2 = 1.0 - std::pow(b2, static_cast<double>(st.t));
    Eigen::VectorXd mhat = st.m / c1;
    Eigen::VectorXd denom = (st.v / c2).array().sqrt() + eps;
    theta += learning_rate * mhat.cwiseQuotient(denom);
    model.hyper_ = GpHyperparams::unflatten(theta, d);
    clamp_in_place(model.hyper_);
    theta = model.hyper_.flatten();
    model.refresh_caches();
  }
  return model;
}

PosteriorGaussian GpModel::posterior(const Eigen::MatrixXd& Xq) const {
  if (Xq.rows() < 1) throw std::invalid_argument("gp posterior: empty query");
  Eigen::MatrixXd Knq = kernel(X_, Xq, hyper_);
  PosteriorGaussian post;
  post.mean = Eigen::VectorXd::Constant(Xq.rows(), hyper_.mean_constant) +
              Knq.transpose() * alpha_;
  Eigen::MatrixXd V = L_.triangularView<Eigen::Lower>().solve(Knq);
  Eigen::MatrixXd cov = kernel(Xq, Xq, hyper_) - V.transpose() * V;
  post.cov = 0.5 * (cov + cov.transpose());
  return post;
}

Eigen::VectorXd sample_gaussian(const PosteriorGaussian& post, Rng& rng) {
  const int q = static_cast<int>(post.mean.size());
  if (post.cov.cwiseAbs().maxCoeff() == 0.0) return post.mean;
  Eigen::MatrixXd L = cholesky_with_jitter(post.cov);
  Eigen::VectorXd z(q);
  for (int i = 0; i < q; ++i) z[i] = rng.normal();
  return post.mean + L * z;
}

Eigen::VectorXd GpModel::thompson_sample(const Eigen::MatrixXd& Xq,
                                         Rng& rng) const {
  return sample_gaussian(posterior(Xq), rng);
}

}  // namespace robot
