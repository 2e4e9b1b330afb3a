#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <stdexcept>

namespace nsq {

// Linear decorrelating projection fitted per file: the optimal linear
// stand-in for the learned projector in front of the scalar quantizer.
struct PcaModel {
  Eigen::VectorXd mean;    // D
  Eigen::MatrixXd basis;   // D x Q, orthonormal columns
  Eigen::VectorXd stddev;  // Q, per-component standard deviations
};

// data is D x N (one observation per column).
inline PcaModel pca_fit(const Eigen::MatrixXd& data, int components) {
  if (components < 1 || components > data.rows())
    throw std::invalid_argument("pca_fit: components out of range");
  if (data.cols() < 2) throw std::invalid_argument("pca_fit: need at least 2 observations");
  PcaModel model;
  model.mean = data.rowwise().mean();
  Eigen::MatrixXd centered = data.colwise() - model.mean;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinU);
  model.basis = svd.matrixU().leftCols(components);
  model.stddev = svd.singularValues().head(components) /
                 std::sqrt(static_cast<double>(data.cols() - 1));
  return model;
}

inline Eigen::MatrixXd pca_project(const PcaModel& model, const Eigen::MatrixXd& data) {
  if (data.rows() != model.mean.size()) throw std::invalid_argument("pca_project: dimension mismatch");
  return model.basis.transpose() * (data.colwise() - model.mean);
}

inline Eigen::MatrixXd pca_reconstruct(const PcaModel& model, const Eigen::MatrixXd& coeffs) {
  if (coeffs.rows() != model.basis.cols())
    throw std::invalid_argument("pca_reconstruct: component count mismatch");
  return (model.basis * coeffs).colwise() + model.mean;
}

}  // namespace nsq
