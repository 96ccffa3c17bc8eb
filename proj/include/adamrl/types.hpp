#pragma once

#include <Eigen/Dense>

namespace adamrl {

using Index = Eigen::Index;

template <typename Scalar, int Rows = Eigen::Dynamic, int Cols = Eigen::Dynamic>
using Matrix = Eigen::Matrix<Scalar, Rows, Cols>;

template <typename Scalar, int Rows = Eigen::Dynamic>
using Vector = Eigen::Matrix<Scalar, Rows, 1>;

using MatrixXd = Matrix<double>;
using VectorXd = Vector<double>;

}  // namespace adamrl
