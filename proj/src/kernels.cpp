#include "beamkit/kernels.hpp"

#include <omp.h>

#include <cstdlib>
#include <string>

#include "beamkit/model.hpp"

namespace beamkit {

int configured_threads() {
  if (const char* env = std::getenv("BEAMKIT_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return n;
    } catch (const std::exception&) {
    }
  }
  return omp_get_max_threads();
}

namespace {

double gain_at(const CMatrix& f, double theta, double spacing, double wavelength) {
  const CVector a = steering_vector(theta, static_cast<int>(f.rows()), spacing, wavelength);
  return (a.adjoint() * f).squaredNorm();
}

}  // namespace

RVector beampattern_scan_serial(const CMatrix& f, const std::vector<double>& angles,
                                double spacing, double wavelength) {
  RVector out(static_cast<Eigen::Index>(angles.size()));
  for (std::size_t i = 0; i < angles.size(); ++i) {
    out(static_cast<Eigen::Index>(i)) = gain_at(f, angles[i], spacing, wavelength);
  }
  return out;
}

RVector beampattern_scan(const CMatrix& f, const std::vector<double>& angles, double spacing,
                         double wavelength, int threads) {
  const int n = static_cast<int>(angles.size());
  const int workers = threads > 0 ? threads : configured_threads();
  RVector out(n);
#pragma omp parallel for num_threads(workers) schedule(static)
  for (int i = 0; i < n; ++i) out(i) = gain_at(f, angles[i], spacing, wavelength);
  return out;
}

RMatrix gain_matrix_serial(const CMatrix& rows, const CMatrix& f) {
  RMatrix g(rows.rows(), f.cols());
  for (Eigen::Index m = 0; m < rows.rows(); ++m) {
    for (Eigen::Index n = 0; n < f.cols(); ++n) g(m, n) = std::norm(rows.row(m).dot(f.col(n).conjugate()));
  }
  return g;
}

RMatrix gain_matrix(const CMatrix& rows, const CMatrix& f, int threads) {
  const int m_rows = static_cast<int>(rows.rows());
  const int workers = threads > 0 ? threads : configured_threads();
  RMatrix g(rows.rows(), f.cols());
#pragma omp parallel for num_threads(workers) schedule(static)
  for (int m = 0; m < m_rows; ++m) {
    for (Eigen::Index n = 0; n < f.cols(); ++n) g(m, n) = std::norm(rows.row(m).dot(f.col(n).conjugate()));
  }
  return g;
}

}  // namespace beamkit
