#pragma once

#include <vector>

#include "beamkit/types.hpp"

namespace beamkit {

/// Worker count: BEAMKIT_THREADS when set to a positive integer, otherwise
/// the OpenMP default.
int configured_threads();

/// a^H(theta) F F^H a(theta) for every angle (radians, physical convention).
RVector beampattern_scan_serial(const CMatrix& f, const std::vector<double>& angles,
                                double spacing, double wavelength);
RVector beampattern_scan(const CMatrix& f, const std::vector<double>& angles, double spacing,
                         double wavelength, int threads = 0);

/// |h_m^H f_n|^2 for channel rows h_m^H and columns f_n.
RMatrix gain_matrix_serial(const CMatrix& rows, const CMatrix& f);
RMatrix gain_matrix(const CMatrix& rows, const CMatrix& f, int threads = 0);

}  // namespace beamkit
