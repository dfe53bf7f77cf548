#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "robot/gp.hpp"
#include "robot/rng.hpp"

using namespace robot;

namespace {

GpHyperparams make_hyper(std::initializer_list<double> lens, double sig2,
                         double noise2, double mean) {
  GpHyperparams h;
  h.log_lengthscales.resize(static_cast<int>(lens.size()));
  int j = 0;
  for (double l : lens) h.log_lengthscales[j++] = std::log(l);
  h.log_signal_variance = std::log(sig2);
  h.log_noise_variance = std::log(noise2);
  h.mean_constant = mean;
  return h;
}

double sq_exp(double s2, double l, double d) {
  return s2 * std::exp(-0.5 * d * d / (l * l));
}

}  // namespace

TEST_CASE("two point posterior against the closed form") {
  Eigen::MatrixXd X(2, 1);
  X << 0.0, 1.0;
  Eigen::VectorXd y(2);
  y << 1.0, 2.0;
  GpHyperparams h = make_hyper({1.0}, 1.0, 0.1, 0.0);
  GpModel gp = GpModel::fit(X, y, h, 0, 0.0);

  // K + noise I = [[1.1, b], [b, 1.1]] with b = exp(-1/2); its inverse is
  // [[a, -b], [-b, a]] / (a^2 - b^2) with a = 1.1.
  const double a = 1.1, b = std::exp(-0.5);
  const double det = a * a - b * b;
  const double k1 = std::exp(-0.125), k2 = std::exp(-0.125);  // query 0.5

  Eigen::MatrixXd Xq(1, 1);
  Xq << 0.5;
  PosteriorGaussian post = gp.posterior(Xq);

  double alpha1 = (a * y[0] - b * y[1]) / det;
  double alpha2 = (-b * y[0] + a * y[1]) / det;
  double want_mean = k1 * alpha1 + k2 * alpha2;
  double quad = (a * k1 * k1 - 2.0 * b * k1 * k2 + a * k2 * k2) / det;
  double want_var = 1.0 - quad;

  CHECK(std::abs(post.mean[0] - want_mean) < 1e-6);
  CHECK(std::abs(post.cov(0, 0) - want_var) < 1e-6);
}

TEST_CASE("two point posterior with nonzero mean and two queries") {
  Eigen::MatrixXd X(2, 1);
  X << 0.2, 0.9;
  Eigen::VectorXd y(2);
  y << -0.5, 0.7;
  const double l = 0.5, s2 = 2.0, n2 = 0.01, m = 0.3;
  GpModel gp = GpModel::fit(X, y, make_hyper({l}, s2, n2, m), 0, 0.0);

  const double a = s2 + n2;
  const double b = sq_exp(s2, l, 0.7);
  const double det = a * a - b * b;
  double r1 = y[0] - m, r2 = y[1] - m;
  double alpha1 = (a * r1 - b * r2) / det;
  double alpha2 = (-b * r1 + a * r2) / det;

  Eigen::MatrixXd Xq(2, 1);
  Xq << 0.4, 0.6;
  PosteriorGaussian post = gp.posterior(Xq);

  for (int q = 0; q < 2; ++q) {
    double kq1 = sq_exp(s2, l, Xq(q, 0) - X(0, 0));
    double kq2 = sq_exp(s2, l, Xq(q, 0) - X(1, 0));
    double want = m + kq1 * alpha1 + kq2 * alpha2;
    CHECK(std::abs(post.mean[q] - want) < 1e-6);
  }
  // Cross covariance: k(q1,q2) - k_q1^T Kinv k_q2.
  double k11 = sq_exp(s2, l, Xq(0, 0) - X(0, 0));
  double k12 = sq_exp(s2, l, Xq(0, 0) - X(1, 0));
  double k21 = sq_exp(s2, l, Xq(1, 0) - X(0, 0));
  double k22 = sq_exp(s2, l, Xq(1, 0) - X(1, 0));
  double cross = sq_exp(s2, l, 0.2) -
                 (a * k11 * k21 - b * k11 * k22 - b * k12 * k21 + a * k12 * k22) / det;
  CHECK(std::abs(post.cov(0, 1) - cross) < 1e-6);
  CHECK(std::abs(post.cov(0, 1) - post.cov(1, 0)) < 1e-12);
}

TEST_CASE("one point posterior shrinks toward the constant mean") {
  Eigen::MatrixXd X(1, 1);
  X << 0.0;
  Eigen::VectorXd y(1);
  y << 0.0;
  const double s2 = 1.3, n2 = 0.2, m = 0.8;
  GpModel gp = GpModel::fit(X, y, make_hyper({0.7}, s2, n2, m), 0, 0.0);
  PosteriorGaussian post = gp.posterior(X);
  // mean = y * s2/(s2+n2) + m * n2/(s2+n2) for y observed at the query.
  double want = y[0] * s2 / (s2 + n2) + m * n2 / (s2 + n2);
  CHECK(std::abs(post.mean[0] - want) < 1e-9);
  CHECK(std::abs(post.cov(0, 0) - (s2 - s2 * s2 / (s2 + n2))) < 1e-9);
}

TEST_CASE("interpolation at tiny noise") {
  Eigen::MatrixXd X(3, 2);
  X << 0.1, 0.2, 0.5, 0.9, 0.8, 0.3;
  Eigen::VectorXd y(3);
  y << 1.0, -2.0, 0.5;
  GpHyperparams h = make_hyper({0.4, 0.4}, 1.0, 1e-12, 0.0);
  GpModel gp = GpModel::fit(X, y, h, 0, 0.0);
  PosteriorGaussian post = gp.posterior(X);
  for (int i = 0; i < 3; ++i) CHECK(std::abs(post.mean[i] - y[i]) < 1e-6);
}

TEST_CASE("prior reversion far from the data") {
  Eigen::MatrixXd X(2, 1);
  X << 0.0, 0.02;
  Eigen::VectorXd y(2);
  y << 5.0, 4.0;
  const double m = -0.7, s2 = 1.9;
  GpModel gp = GpModel::fit(X, y, make_hyper({0.01}, s2, 0.05, m), 0, 0.0);
  Eigen::MatrixXd Xq(1, 1);
  Xq << 0.5;  // 48 lengthscales away
  PosteriorGaussian post = gp.posterior(Xq);
  CHECK(std::abs(post.mean[0] - m) < 1e-6);
  CHECK(std::abs(post.cov(0, 0) - s2) < 1e-6);
}

TEST_CASE("log marginal likelihood at the unit variance point") {
  Eigen::MatrixXd X(1, 1);
  X << 0.3;
  Eigen::VectorXd y(1);
  y << 0.25;
  // signal + noise = 1 and y equals the mean: value is -log(2 pi)/2.
  GpModel gp = GpModel::fit(X, y, make_hyper({0.5}, 0.5, 0.5, 0.25), 0, 0.0);
  CHECK(std::abs(gp.log_marginal_likelihood() -
                 (-0.5 * std::log(2.0 * M_PI))) < 1e-12);
}

TEST_CASE("likelihood gradients match central differences") {
  Rng rng(314159);
  const double hstep = 1e-5;
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 5, d = 2;
    Eigen::MatrixXd X(n, d);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < d; ++j) X(i, j) = rng.uniform();
      y[i] = rng.uniform(-2.0, 2.0);
    }
    GpHyperparams h = make_hyper({rng.uniform(0.2, 1.0), rng.uniform(0.2, 1.0)},
                                 rng.uniform(0.5, 3.0), rng.uniform(0.01, 0.3),
                                 rng.uniform(-1.0, 1.0));
    GpModel gp = GpModel::fit(X, y, h, 0, 0.0);
    Eigen::VectorXd grad;
    gp.log_marginal_likelihood(&grad);

    Eigen::VectorXd theta = h.flatten();
    double worst = 0.0;
    for (int p = 0; p < theta.size(); ++p) {
      Eigen::VectorXd tp = theta, tm = theta;
      tp[p] += hstep;
      tm[p] -= hstep;
      double fp = GpModel::fit(X, y, GpHyperparams::unflatten(tp, d), 0, 0.0)
                      .log_marginal_likelihood();
      double fm = GpModel::fit(X, y, GpHyperparams::unflatten(tm, d), 0, 0.0)
                      .log_marginal_likelihood();
      double fd = (fp - fm) / (2.0 * hstep);
      worst = std::max(worst, std::abs(fd - grad[p]));
    }
    CHECK(worst < 1e-4);
  }
}

TEST_CASE("cholesky cache reproduces the regularized kernel") {
  Rng rng(77);
  const int n = 8, d = 3;
  Eigen::MatrixXd X(n, d);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) X(i, j) = rng.uniform();
    y[i] = rng.normal();
  }
  GpHyperparams h = make_hyper({0.3, 0.5, 0.8}, 1.5, 0.02, 0.1);
  GpModel gp = GpModel::fit(X, y, h, 0, 0.0);

  Eigen::MatrixXd K(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int k = 0; k < d; ++k) {
        double dd = (X(i, k) - X(j, k)) / h.lengthscales()[k];
        s += dd * dd;
      }
      K(i, j) = h.signal_variance() * std::exp(-0.5 * s);
    }
  K.diagonal().array() += h.noise_variance();
  Eigen::MatrixXd R = gp.chol() * gp.chol().transpose();
  CHECK((R - K).norm() / K.norm() < 1e-8);
}

TEST_CASE("fit with steps=0 keeps the initial hyperparameters exactly") {
  Eigen::MatrixXd X(2, 1);
  X << 0.0, 1.0;
  Eigen::VectorXd y(2);
  y << 0.5, -0.5;
  GpHyperparams h = make_hyper({0.43}, 1.7, 0.002, -0.3);
  GpModel gp = GpModel::fit(X, y, h, 0, 0.0);
  CHECK(gp.hyper().log_lengthscales[0] == h.log_lengthscales[0]);
  CHECK(gp.hyper().log_signal_variance == h.log_signal_variance);
  CHECK(gp.hyper().log_noise_variance == h.log_noise_variance);
  CHECK(gp.hyper().mean_constant == h.mean_constant);
}

TEST_CASE("training increases the likelihood on smooth data") {
  Rng rng(5);
  const int n = 12;
  Eigen::MatrixXd X(n, 1);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = rng.uniform();
    y[i] = std::sin(6.0 * X(i, 0)) + 0.01 * rng.normal();
  }
  GpHyperparams h0 = GpHyperparams::defaults(1);
  double before = GpModel::fit(X, y, h0, 0, 0.0).log_marginal_likelihood();
  GpModel trained = GpModel::fit(X, y, h0, 200, 0.05);
  CHECK(trained.log_marginal_likelihood() > before);
}

TEST_CASE("adam state makes split training equal joint training") {
  Rng rng(6);
  const int n = 10;
  Eigen::MatrixXd X(n, 2);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = rng.uniform();
    X(i, 1) = rng.uniform();
    y[i] = rng.normal();
  }
  GpHyperparams h0 = GpHyperparams::defaults(2);

  AdamState joint;
  GpModel two = GpModel::fit(X, y, h0, 2, 0.01, &joint);

  AdamState split;
  GpModel one = GpModel::fit(X, y, h0, 1, 0.01, &split);
  GpModel resumed = GpModel::fit(X, y, one.hyper(), 1, 0.01, &split);

  CHECK(resumed.hyper().flatten() == two.hyper().flatten());
  CHECK(split.t == 2);
}

TEST_CASE("degenerate covariance short-circuits to the mean") {
  PosteriorGaussian post;
  post.mean = Eigen::Vector3d(1.0, -2.0, 0.5);
  post.cov = Eigen::Matrix3d::Zero();
  Rng consumed(123), untouched(123);
  Eigen::VectorXd s = sample_gaussian(post, consumed);
  CHECK(s == post.mean);
  CHECK(consumed.normal() == untouched.normal());  // no draws were used
}

TEST_CASE("sampling is deterministic per seed") {
  Eigen::MatrixXd X(4, 1);
  X << 0.0, 0.3, 0.6, 0.9;
  Eigen::VectorXd y(4);
  y << 0.0, 1.0, 0.5, -0.5;
  GpModel gp = GpModel::fit(X, y, GpHyperparams::defaults(1), 0, 0.0);
  Eigen::MatrixXd Xq(3, 1);
  Xq << 0.1, 0.5, 0.8;
  Rng r1(42), r2(42);
  CHECK(gp.thompson_sample(Xq, r1) == gp.thompson_sample(Xq, r2));
}

TEST_CASE("sample moments agree with the posterior") {
  Eigen::MatrixXd X(3, 1);
  X << 0.0, 0.5, 1.0;
  Eigen::VectorXd y(3);
  y << 0.0, 1.0, 0.0;
  GpModel gp = GpModel::fit(X, y, make_hyper({0.3}, 1.0, 0.05, 0.0), 0, 0.0);
  Eigen::MatrixXd Xq(2, 1);
  Xq << 0.25, 0.75;
  PosteriorGaussian post = gp.posterior(Xq);

  const int N = 4000;
  Rng rng(9);
  Eigen::Vector2d mean_acc = Eigen::Vector2d::Zero();
  Eigen::Matrix2d cov_acc = Eigen::Matrix2d::Zero();
  for (int t = 0; t < N; ++t) {
    Eigen::VectorXd s = gp.thompson_sample(Xq, rng);
    mean_acc += s;
    cov_acc += s * s.transpose();
  }
  Eigen::Vector2d emp_mean = mean_acc / N;
  Eigen::Matrix2d emp_cov =
      cov_acc / N - emp_mean * emp_mean.transpose();

  for (int i = 0; i < 2; ++i) {
    double se = std::sqrt(post.cov(i, i) / N);
    CHECK(std::abs(emp_mean[i] - post.mean[i]) < 5.0 * se);
    CHECK(std::abs(emp_cov(i, i) - post.cov(i, i)) < 0.1 * post.cov(i, i) + 1e-3);
  }
  CHECK(std::abs(emp_cov(0, 1) - post.cov(0, 1)) < 0.05);
}

TEST_CASE("jitter ladder rescues a borderline matrix and rejects a bad one") {
  Eigen::Matrix2d nearly;
  nearly << 1.0, 1.0, 1.0, 1.0;  // singular, needs jitter
  Eigen::MatrixXd L = cholesky_with_jitter(nearly);
  CHECK(((L * L.transpose()) - nearly).norm() < 1e-3);

  Eigen::Matrix2d indefinite;
  indefinite << 1.0, 2.0, 2.0, 1.0;  // eigenvalue -1, beyond any jitter rung
  CHECK_THROWS_WITH(cholesky_with_jitter(indefinite), "kernel not PSD");
}

TEST_CASE("duplicate training points stay well posed through noise") {
  Eigen::MatrixXd X(3, 1);
  X << 0.4, 0.4, 0.8;
  Eigen::VectorXd y(3);
  y << 1.0, 1.2, 0.0;
  GpModel gp = GpModel::fit(X, y, make_hyper({0.3}, 1.0, 0.1, 0.0), 0, 0.0);
  Eigen::MatrixXd Xq(1, 1);
  Xq << 0.4;
  PosteriorGaussian post = gp.posterior(Xq);
  CHECK(std::isfinite(post.mean[0]));
  CHECK(post.mean[0] > 0.5);  // pulled toward the duplicated observations
  CHECK(post.cov(0, 0) >= -1e-8);
}

TEST_CASE("target scaler uses population spread and guards constants") {
  Eigen::VectorXd y(4);
  y << 1.0, 3.0, 5.0, 7.0;
  TargetScaler s = TargetScaler::fit(y);
  CHECK(s.mean == doctest::Approx(4.0));
  CHECK(s.sd == doctest::Approx(std::sqrt(5.0)));  // population variance
  Eigen::VectorXd z = s.scale(y);
  CHECK(z.mean() == doctest::Approx(0.0));
  CHECK(s.unscale(z[2]) == doctest::Approx(5.0));

  Eigen::VectorXd flat = Eigen::VectorXd::Constant(3, 2.5);
  TargetScaler f = TargetScaler::fit(flat);
  CHECK(f.sd == 1.0);
}

TEST_CASE("flatten and unflatten round trip") {
  GpHyperparams h = make_hyper({0.2, 0.9, 1.4}, 2.2, 0.03, -0.6);
  GpHyperparams back = GpHyperparams::unflatten(h.flatten(), 3);
  CHECK(back.flatten() == h.flatten());
  CHECK(h.n_params() == 6);
}
