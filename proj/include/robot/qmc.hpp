#pragma once

#include <boost/random/sobol.hpp>
#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "robot/rng.hpp"

namespace robot {

// Sobol sequence with a random digital shift: every coordinate stream is
// XOR-ed with a fixed 64-bit mask drawn once from the run Rng. The shift
// decorrelates repeated uses of the sequence (fresh masks per restart or per
// candidate batch) while preserving low discrepancy.
class ScrambledSobol {
 public:
  ScrambledSobol(int dim, Rng& rng) : dim_(dim), engine_(dim), masks_(dim) {
    for (int j = 0; j < dim; ++j) masks_[j] = rng.bits();
  }

  int dim() const { return dim_; }

  // Next point in [0, 1)^dim.
  Eigen::VectorXd next() {
    Eigen::VectorXd u(dim_);
    for (int j = 0; j < dim_; ++j) {
      std::uint64_t v = engine_() ^ masks_[j];
      u[j] = static_cast<double>(v >> 11) * kInv53;
    }
    return u;
  }

  // n points as rows.
  Eigen::MatrixXd draw(int n) {
    Eigen::MatrixXd out(n, dim_);
    for (int i = 0; i < n; ++i) out.row(i) = next();
    return out;
  }

 private:
  static constexpr double kInv53 = 1.0 / 9007199254740992.0;  // 2^-53

  int dim_;
  boost::random::sobol engine_;
  std::vector<std::uint64_t> masks_;
};

}  // namespace robot
