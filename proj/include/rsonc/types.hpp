#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace rsonc {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Uniform time grid on [0, T] with nodes t_k = k*T/steps.
struct TimeGrid {
  double horizon = 1.0;
  int steps = 100;

  double dt() const { return horizon / steps; }
  double node(int k) const { return k * horizon / steps; }
  int num_nodes() const { return steps + 1; }
};

/// Dense per-(path, node) storage for an R^d-valued process.
/// Layout: path-major, then node, then component.
class VectorPanel {
 public:
  VectorPanel() = default;
  VectorPanel(int paths, int nodes, int dim)
      : paths_(paths), nodes_(nodes), dim_(dim),
        data_(static_cast<std::size_t>(paths) * nodes * dim, 0.0) {}

  int paths() const { return paths_; }
  int nodes() const { return nodes_; }
  int dim() const { return dim_; }
  bool empty() const { return data_.empty(); }

  Eigen::Map<VectorXd> at(int p, int k) {
    return Eigen::Map<VectorXd>(slot(p, k), dim_);
  }
  Eigen::Map<const VectorXd> at(int p, int k) const {
    return Eigen::Map<const VectorXd>(slot(p, k), dim_);
  }

  double* slot(int p, int k) {
    return data_.data() + (static_cast<std::size_t>(p) * nodes_ + k) * dim_;
  }
  const double* slot(int p, int k) const {
    return data_.data() + (static_cast<std::size_t>(p) * nodes_ + k) * dim_;
  }

  const std::vector<double>& raw() const { return data_; }
  std::vector<double>& raw() { return data_; }

 private:
  int paths_ = 0, nodes_ = 0, dim_ = 0;
  std::vector<double> data_;
};

/// Dense per-(path, node) storage for a matrix-valued process
/// (column-major within each slot, matching Eigen maps).
class MatrixPanel {
 public:
  MatrixPanel() = default;
  MatrixPanel(int paths, int nodes, int rows, int cols)
      : paths_(paths), nodes_(nodes), rows_(rows), cols_(cols),
        data_(static_cast<std::size_t>(paths) * nodes * rows * cols, 0.0) {}

  int paths() const { return paths_; }
  int nodes() const { return nodes_; }
  int rows() const { return rows_; }
  int cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  Eigen::Map<MatrixXd> at(int p, int k) {
    return Eigen::Map<MatrixXd>(slot(p, k), rows_, cols_);
  }
  Eigen::Map<const MatrixXd> at(int p, int k) const {
    return Eigen::Map<const MatrixXd>(slot(p, k), rows_, cols_);
  }

  double* slot(int p, int k) {
    return data_.data() +
           (static_cast<std::size_t>(p) * nodes_ + k) * rows_ * cols_;
  }
  const double* slot(int p, int k) const {
    return data_.data() +
           (static_cast<std::size_t>(p) * nodes_ + k) * rows_ * cols_;
  }

  const std::vector<double>& raw() const { return data_; }
  std::vector<double>& raw() { return data_; }

 private:
  int paths_ = 0, nodes_ = 0, rows_ = 0, cols_ = 0;
  std::vector<double> data_;
};

/// Non-finite state encountered while integrating a path.
class SimulationError : public std::runtime_error {
 public:
  SimulationError(int scenario, int path, int step, const std::string& what)
      : std::runtime_error(what), scenario(scenario), path(path), step(step) {}
  int scenario, path, step;
};

/// Numerical degeneracy (singular fundamental matrix, unusable regression).
class DegeneracyError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// An operation was invoked outside its contract (e.g. non-singular ubar).
class PreconditionError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed problem configuration.
class ConfigError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace rsonc
