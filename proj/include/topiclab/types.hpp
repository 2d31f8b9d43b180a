#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace topiclab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Error taxonomy; the CLI maps these onto exit codes (usage=2, io=3, numerical=4).
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// V x k, columns are word distributions of the k topics.
struct TopicMatrix {
  Matrix m;
  Index vocab_size() const { return m.rows(); }
  Index num_topics() const { return m.cols(); }
};

// k x d, column i holds document i's weights over the k topics.
struct MixingMatrix {
  Matrix m;
  Index num_topics() const { return m.rows(); }
  Index num_docs() const { return m.cols(); }
};

inline bool is_column_stochastic(const Matrix& m, double tol = 1e-10) {
  if (m.size() == 0) return false;
  if ((m.array() < 0.0).any()) return false;
  return ((m.colwise().sum().array() - 1.0).abs() <= tol).all();
}

inline void require_column_stochastic(const Matrix& m, const std::string& what,
                                      double tol = 1e-10) {
  if (!is_column_stochastic(m, tol))
    throw UsageError(what + ": matrix must be column-stochastic (nonnegative, columns sum to 1)");
}

}  // namespace topiclab
