#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "nsfm/linalg.hpp"
#include "nsfm/rng.hpp"

namespace nsfm {

// Clustered sparse MIMO channel generator settings. Each cluster draws an
// arrival and a departure center angle uniformly in [-60, 60] degrees; its rays
// scatter around the centers with Gaussian offsets of std angular_spread_deg.
struct ClusterChannelConfig {
  std::size_t nr = 16;
  std::size_t nt = 8;
  std::size_t num_clusters = 3;
  std::size_t rays_per_cluster = 10;
  double angular_spread_deg = 2.0;
  std::uint64_t seed = 20240601;

  void validate() const;
};

struct ChannelSample {
  ComplexMatrix h;  // nr x nt, antenna domain
};

// Unitary array-response bases for both ends of the link.
struct AngularBasis {
  ComplexMatrix a_t;  // nt x nt
  ComplexMatrix a_r;  // nr x nr

  static AngularBasis dft(std::size_t nr, std::size_t nt);
};

// Samples [0, train_count) form the training split, the rest the test split.
struct ChannelDataset {
  ClusterChannelConfig config;
  std::vector<ChannelSample> samples;
  std::size_t train_count = 0;
  std::size_t test_count = 0;

  std::span<const ChannelSample> train() const {
    return std::span(samples).first(train_count);
  }
  std::span<const ChannelSample> test() const {
    return std::span(samples).subspan(train_count, test_count);
  }
};

// Half-wavelength ULA response, a(theta)_m = exp(-i pi m sin(theta)).
ComplexVector steering_vector(std::size_t n, double theta_rad);

// H = sum over clusters and rays of g * a_r(aoa) a_t(aod)^H with
// g ~ CN(0, 1 / (num_clusters * rays_per_cluster)). Not normalized.
ChannelSample generate_cluster_channel(const ClusterChannelConfig& config,
                                       Random& rng);

// `count` samples; sample i draws from stream (config.seed, i) so generation
// order does not matter. All samples land in the training split.
ChannelDataset generate_dataset(const ClusterChannelConfig& config,
                                std::size_t count);

double mean_entry_power(std::span<const ChannelSample> samples);

// Scales every sample by one global factor so the mean |H_ij|^2 becomes 1.
ChannelDataset normalize_dataset(ChannelDataset ds);

// vec(A_R^H H A_T) under column-major stacking.
ComplexVector to_angular(const ComplexMatrix& h, const ComplexMatrix& a_t,
                         const ComplexMatrix& a_r);
// A_R H_ad A_T^H, where h_ad = vec(H_ad).
ComplexMatrix from_angular(std::span<const Complex> h_ad,
                           const ComplexMatrix& a_t, const ComplexMatrix& a_r);

// Realified angular vector [Re h_ad; Im h_ad], length 2 nr nt.
RealVector angular_real(const ComplexMatrix& h, const AngularBasis& basis);
std::vector<RealVector> angular_real(std::span<const ChannelSample> samples,
                                     const AngularBasis& basis);

// The cluster generator's law is invariant under H -> J_r^a g(H) J_t^b, where
// J reverses antenna order and g is the identity or complex conjugation.
// Returns the eight induced linear maps on realified angular vectors
// (identity first), each 2 nr nt square.
std::vector<RealMatrix> channel_symmetry_maps(const AngularBasis& basis);

// Deterministic shuffle followed by a floor(train_fraction * total) split.
ChannelDataset split_dataset(ChannelDataset ds, double train_fraction,
                             std::uint64_t seed);

// FNV-1a over the dimensions and the f32-rounded payload.
std::uint64_t dataset_hash(const ChannelDataset& ds);

// Little-endian "NSFM" v1 container; see README for the byte layout.
inline constexpr std::uint32_t kDatasetFormatVersion = 1;
inline constexpr std::size_t kDatasetHeaderBytes = 20;

void save_dataset(const ChannelDataset& ds, const std::filesystem::path& path);
// The file carries no split; every sample is loaded into the training split.
ChannelDataset load_dataset(const std::filesystem::path& path);

}  // namespace nsfm
