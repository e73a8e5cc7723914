#pragma once

#include <complex>
#include <Eigen/Dense>

namespace gpursuit {

using cplx = std::complex<double>;
using cvec = Eigen::VectorXcd;
using cmat = Eigen::MatrixXcd;
using rvec = Eigen::VectorXd;

} // namespace gpursuit
