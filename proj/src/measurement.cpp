#include "nsfm/measurement.hpp"

#include <cmath>

namespace nsfm {

void PilotConfig::validate() const {
  if (np < 1 || np > nt) {
    throw SizingError("pilot config: need 1 <= np <= nt (np=" +
                      std::to_string(np) + ", nt=" + std::to_string(nt) + ")");
  }
  if ((nt & (nt - 1)) != 0) {
    throw UnsupportedOrderError("pilot config: nt must be a power of two");
  }
}

ComplexMatrix build_pilot_matrix(std::size_t nt, std::size_t np) {
  PilotConfig{nt, np}.validate();
  const RealMatrix h = hadamard(nt);
  ComplexMatrix p(nt, np);
  for (std::size_t i = 0; i < nt; ++i) {
    for (std::size_t j = 0; j < np; ++j) {
      p(i, j) = h(i, j);
    }
  }
  return p;
}

double sigma_from_snr(double snr_db, std::size_t nt) {
  if (nt < 1) {
    throw SizingError("sigma_from_snr: nt must be at least 1");
  }
  return std::sqrt(static_cast<double>(nt) /
                   (2.0 * std::pow(10.0, snr_db / 10.0)));
}

MeasurementModel::MeasurementModel(RealMatrix a, RealMatrix a_pinv,
                                   ComplexMatrix pilots, std::size_t nr,
                                   double snr_db)
    : a_(std::move(a)),
      a_pinv_(std::move(a_pinv)),
      pilots_(std::move(pilots)),
      nr_(nr),
      snr_db_(snr_db),
      sigma_n_(sigma_from_snr(snr_db, pilots_.rows())) {
  if (a_pinv_.rows() != a_.cols() || a_pinv_.cols() != a_.rows()) {
    throw SizingError("measurement model: pseudo-inverse shape mismatch");
  }
  if (a_.rows() != 2 * nr_ * pilots_.cols() ||
      a_.cols() != 2 * nr_ * pilots_.rows()) {
    throw SizingError("measurement model: A shape inconsistent with pilots");
  }
  if (!(sigma_n_ > 0.0) || !std::isfinite(sigma_n_)) {
    throw ConfigError("measurement model: noise level must be positive");
  }
}

MeasurementModel MeasurementModel::build(std::size_t nr, std::size_t nt,
                                         std::size_t np, double snr_db) {
  return build_measurement_matrix(build_pilot_matrix(nt, np), dft_matrix(nt),
                                  dft_matrix(nr), snr_db);
}

MeasurementModel MeasurementModel::with_snr(double snr_db) const {
  return MeasurementModel(a_, a_pinv_, pilots_, nr_, snr_db);
}

RealVector MeasurementModel::apply(std::span<const double> h) const {
  if (h.size() != n_dim()) {
    throw SizingError("measurement: channel vector has length " +
                      std::to_string(h.size()) + ", expected " +
                      std::to_string(n_dim()));
  }
  return multiply(a_, h);
}

RealVector MeasurementModel::apply_pinv(std::span<const double> r) const {
  if (r.size() != m()) {
    throw SizingError("measurement: observation has length " +
                      std::to_string(r.size()) + ", expected " +
                      std::to_string(m()));
  }
  return multiply(a_pinv_, r);
}

RealVector MeasurementModel::draw_noise(Random& rng) const {
  RealVector n(m());
  for (std::size_t i = 0; i < n.size(); ++i) {
    n[i] = sigma_n_ * rng.gaussian();
  }
  return n;
}

RealVector MeasurementModel::observe(std::span<const double> h,
                                     Random& rng) const {
  RealVector y = apply(h);
  y += draw_noise(rng);
  return y;
}

RealVector MeasurementModel::range_project(std::span<const double> v) const {
  return apply_pinv(apply(v));
}

RealVector MeasurementModel::null_project(std::span<const double> v) const {
  RealVector out(std::vector<double>(v.begin(), v.end()));
  out -= range_project(v);
  return out;
}

MeasurementModel build_measurement_matrix(const ComplexMatrix& pilots,
                                          const ComplexMatrix& a_t,
                                          const ComplexMatrix& a_r,
                                          double snr_db) {
  const std::size_t nt = pilots.rows();
  const std::size_t nr = a_r.rows();
  if (a_t.rows() != nt || a_t.cols() != nt || a_r.cols() != nr) {
    throw SizingError("build_measurement_matrix: inconsistent dimensions");
  }
  if (pilots.cols() < 1 || pilots.cols() > nt) {
    throw SizingError("build_measurement_matrix: need 1 <= np <= nt");
  }
  // (P^T kron I)(conj(A_T) kron A_R) = (P^T conj(A_T)) kron A_R by the mixed
  // product rule; this avoids the (nr nt)^2 intermediate.
  const ComplexMatrix tx = multiply(transpose(pilots), conjugate(a_t));
  RealMatrix a = realify(kron(tx, a_r));
  RealMatrix a_pinv = pinv_wide(a);
  return MeasurementModel(std::move(a), std::move(a_pinv), pilots, nr, snr_db);
}

}  // namespace nsfm
