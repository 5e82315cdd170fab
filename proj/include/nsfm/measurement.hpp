#pragma once

#include <cstddef>
#include <span>

#include "nsfm/linalg.hpp"
#include "nsfm/rng.hpp"

namespace nsfm {

struct PilotConfig {
  std::size_t nt = 8;
  std::size_t np = 5;

  double density() const {
    return static_cast<double>(np) / static_cast<double>(nt);
  }
  void validate() const;
};

// First np columns of the normalized Hadamard matrix of order nt, complex
// typed with zero imaginary parts.
ComplexMatrix build_pilot_matrix(std::size_t nt, std::size_t np);

// Per-real-component noise std for SNR = nt / (2 sigma^2).
double sigma_from_snr(double snr_db, std::size_t nt);

// Forward model y = A h + n in the realified angular domain.
//
// A = realify((P^T kron I_nr)((A_T^T)^H kron A_R)) with M = 2 nr np rows and
// N = 2 nr nt columns. The pseudo-inverse is computed once at construction.
// Projectors apply A then A^+ instead of materializing the N x N product.
class MeasurementModel {
 public:
  MeasurementModel(RealMatrix a, RealMatrix a_pinv, ComplexMatrix pilots,
                   std::size_t nr, double snr_db);

  // Hadamard pilots and DFT array responses.
  static MeasurementModel build(std::size_t nr, std::size_t nt, std::size_t np,
                                double snr_db);

  // Same A and A^+ with a different noise level.
  MeasurementModel with_snr(double snr_db) const;

  const RealMatrix& a() const { return a_; }
  const RealMatrix& a_pinv() const { return a_pinv_; }
  const ComplexMatrix& pilots() const { return pilots_; }
  double sigma_n() const { return sigma_n_; }
  double snr_db() const { return snr_db_; }
  std::size_t nr() const { return nr_; }
  std::size_t nt() const { return pilots_.rows(); }
  std::size_t np() const { return pilots_.cols(); }
  std::size_t m() const { return a_.rows(); }
  std::size_t n_dim() const { return a_.cols(); }

  // A h.
  RealVector apply(std::span<const double> h) const;
  // A^+ r.
  RealVector apply_pinv(std::span<const double> r) const;

  // A h + n, n_i ~ N(0, sigma_n^2).
  RealVector observe(std::span<const double> h, Random& rng) const;
  // Noise vector of length M drawn the same way as observe().
  RealVector draw_noise(Random& rng) const;

  RealVector range_project(std::span<const double> v) const;
  RealVector null_project(std::span<const double> v) const;

 private:
  RealMatrix a_;
  RealMatrix a_pinv_;
  ComplexMatrix pilots_;
  std::size_t nr_;
  double snr_db_;
  double sigma_n_;
};

// Assembles the model for arbitrary pilots and unitary array responses.
MeasurementModel build_measurement_matrix(const ComplexMatrix& pilots,
                                          const ComplexMatrix& a_t,
                                          const ComplexMatrix& a_r,
                                          double snr_db);

}  // namespace nsfm
