#include "nsfm/channel.hpp"

#include <bit>
#include <cmath>
#include <numbers>
#include <numeric>

#include "binary_io.hpp"

namespace nsfm {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kCenterRangeDeg = 60.0;

}  // namespace

void ClusterChannelConfig::validate() const {
  if (nr < 1 || nt < 1) {
    throw ConfigError("channel config: nr and nt must be at least 1");
  }
  if (num_clusters < 1 || rays_per_cluster < 1) {
    throw ConfigError(
        "channel config: num_clusters and rays_per_cluster must be at least 1");
  }
  if (!(angular_spread_deg > 0.0 && angular_spread_deg <= 30.0)) {
    throw ConfigError("channel config: angular_spread_deg must lie in (0, 30]");
  }
}

AngularBasis AngularBasis::dft(std::size_t nr, std::size_t nt) {
  return {dft_matrix(nt), dft_matrix(nr)};
}

ComplexVector steering_vector(std::size_t n, double theta_rad) {
  ComplexVector a(n);
  const double phase = -std::numbers::pi * std::sin(theta_rad);
  for (std::size_t m = 0; m < n; ++m) {
    a[m] = std::polar(1.0, phase * static_cast<double>(m));
  }
  return a;
}

ChannelSample generate_cluster_channel(const ClusterChannelConfig& config,
                                       Random& rng) {
  config.validate();
  ComplexMatrix h(config.nr, config.nt);
  const double gain_std = std::sqrt(
      0.5 / static_cast<double>(config.num_clusters * config.rays_per_cluster));
  const double spread = config.angular_spread_deg * kDegToRad;
  for (std::size_t c = 0; c < config.num_clusters; ++c) {
    const double aoa_center =
        rng.uniform(-kCenterRangeDeg, kCenterRangeDeg) * kDegToRad;
    const double aod_center =
        rng.uniform(-kCenterRangeDeg, kCenterRangeDeg) * kDegToRad;
    for (std::size_t r = 0; r < config.rays_per_cluster; ++r) {
      const double aoa = aoa_center + spread * rng.gaussian();
      const double aod = aod_center + spread * rng.gaussian();
      const double g_re = gain_std * rng.gaussian();
      const double g_im = gain_std * rng.gaussian();
      const Complex g{g_re, g_im};
      const ComplexVector ar = steering_vector(config.nr, aoa);
      const ComplexVector at = steering_vector(config.nt, aod);
      for (std::size_t i = 0; i < config.nr; ++i) {
        const Complex gi = g * ar[i];
        for (std::size_t j = 0; j < config.nt; ++j) {
          h(i, j) += gi * std::conj(at[j]);
        }
      }
    }
  }
  return {std::move(h)};
}

ChannelDataset generate_dataset(const ClusterChannelConfig& config,
                                std::size_t count) {
  config.validate();
  ChannelDataset ds;
  ds.config = config;
  ds.samples.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Random rng(config.seed, {0x6368616eull /* "chan" */, i});
    ds.samples.push_back(generate_cluster_channel(config, rng));
  }
  ds.train_count = count;
  ds.test_count = 0;
  return ds;
}

double mean_entry_power(std::span<const ChannelSample> samples) {
  double total = 0.0;
  std::size_t entries = 0;
  for (const auto& s : samples) {
    for (const Complex& z : s.h.values()) {
      total += std::norm(z);
    }
    entries += s.h.size();
  }
  if (entries == 0) {
    throw DegenerateDataError("mean_entry_power: no entries");
  }
  return total / static_cast<double>(entries);
}

ChannelDataset normalize_dataset(ChannelDataset ds) {
  if (ds.samples.empty()) {
    throw DegenerateDataError("normalize_dataset: empty dataset");
  }
  const double power = mean_entry_power(ds.samples);
  if (!(power > 0.0) || !std::isfinite(power)) {
    throw DegenerateDataError("normalize_dataset: dataset has zero power");
  }
  const double scale = 1.0 / std::sqrt(power);
  for (auto& s : ds.samples) {
    for (std::size_t i = 0; i < s.h.size(); ++i) {
      s.h.data()[i] *= scale;
    }
  }
  return ds;
}

ComplexVector to_angular(const ComplexMatrix& h, const ComplexMatrix& a_t,
                         const ComplexMatrix& a_r) {
  if (a_r.rows() != h.rows() || a_r.cols() != h.rows() ||
      a_t.rows() != h.cols() || a_t.cols() != h.cols()) {
    throw SizingError("to_angular: basis dimensions do not match the channel");
  }
  return vec(multiply(multiply(adjoint(a_r), h), a_t));
}

ComplexMatrix from_angular(std::span<const Complex> h_ad,
                           const ComplexMatrix& a_t, const ComplexMatrix& a_r) {
  const std::size_t nr = a_r.rows();
  const std::size_t nt = a_t.rows();
  if (h_ad.size() != nr * nt || a_r.cols() != nr || a_t.cols() != nt) {
    throw SizingError("from_angular: basis dimensions do not match the vector");
  }
  return multiply(multiply(a_r, unvec(h_ad, nr, nt)), adjoint(a_t));
}

RealVector angular_real(const ComplexMatrix& h, const AngularBasis& basis) {
  return complex_to_real_vec(to_angular(h, basis.a_t, basis.a_r));
}

std::vector<RealVector> angular_real(std::span<const ChannelSample> samples,
                                     const AngularBasis& basis) {
  std::vector<RealVector> out;
  out.reserve(samples.size());
  const ComplexMatrix a_r_h = adjoint(basis.a_r);
  for (const auto& s : samples) {
    if (s.h.rows() != a_r_h.cols() || s.h.cols() != basis.a_t.rows()) {
      throw SizingError("angular_real: sample shape does not match the basis");
    }
    out.push_back(
        complex_to_real_vec(vec(multiply(multiply(a_r_h, s.h), basis.a_t))));
  }
  return out;
}

std::vector<RealMatrix> channel_symmetry_maps(const AngularBasis& basis) {
  const std::size_t nr = basis.a_r.rows();
  const std::size_t nt = basis.a_t.rows();
  const std::size_t n = 2 * nr * nt;
  std::vector<RealMatrix> maps;
  for (int flip_r = 0; flip_r < 2; ++flip_r) {
    for (int flip_t = 0; flip_t < 2; ++flip_t) {
      for (int conj = 0; conj < 2; ++conj) {
        RealMatrix m(n, n);
        RealVector e(n);
        for (std::size_t j = 0; j < n; ++j) {
          e[j] = 1.0;
          const ComplexMatrix h =
              from_angular(real_to_complex_vec(e), basis.a_t, basis.a_r);
          e[j] = 0.0;
          ComplexMatrix g(nr, nt);
          for (std::size_t r = 0; r < nr; ++r) {
            for (std::size_t c = 0; c < nt; ++c) {
              const Complex v = h(flip_r ? nr - 1 - r : r, flip_t ? nt - 1 - c : c);
              g(r, c) = conj ? std::conj(v) : v;
            }
          }
          const RealVector col = angular_real(g, basis);
          for (std::size_t i = 0; i < n; ++i) {
            m(i, j) = col[i];
          }
        }
        maps.push_back(std::move(m));
      }
    }
  }
  return maps;
}

ChannelDataset split_dataset(ChannelDataset ds, double train_fraction,
                             std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ConfigError("split_dataset: train_fraction must lie in (0, 1)");
  }
  const std::size_t total = ds.samples.size();
  const auto train =
      static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(total)));
  if (train == 0 || train == total) {
    throw SizingError("split_dataset: split of " + std::to_string(total) +
                      " samples leaves one side empty");
  }
  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Random rng(seed, {0x73706c74ull /* "splt" */});
  for (std::size_t i = total; i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    std::swap(order[i - 1], order[j]);
  }
  std::vector<ChannelSample> shuffled;
  shuffled.reserve(total);
  for (std::size_t idx : order) {
    shuffled.push_back(std::move(ds.samples[idx]));
  }
  ds.samples = std::move(shuffled);
  ds.train_count = train;
  ds.test_count = total - train;
  return ds;
}

std::uint64_t dataset_hash(const ChannelDataset& ds) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  const auto feed = [&h](std::uint32_t word) {
    for (int i = 0; i < 4; ++i) {
      h ^= (word >> (8 * i)) & 0xFFu;
      h *= 0x100000001b3ull;
    }
  };
  feed(static_cast<std::uint32_t>(ds.samples.size()));
  feed(static_cast<std::uint32_t>(ds.config.nr));
  feed(static_cast<std::uint32_t>(ds.config.nt));
  for (const auto& s : ds.samples) {
    for (const Complex& z : s.h.values()) {
      feed(std::bit_cast<std::uint32_t>(static_cast<float>(z.real())));
      feed(std::bit_cast<std::uint32_t>(static_cast<float>(z.imag())));
    }
  }
  return h;
}

void save_dataset(const ChannelDataset& ds, const std::filesystem::path& path) {
  const std::size_t nr = ds.config.nr;
  const std::size_t nt = ds.config.nt;
  detail::ByteWriter w;
  w.bytes("NSFM", 4);
  w.u32(kDatasetFormatVersion);
  w.u32(static_cast<std::uint32_t>(ds.samples.size()));
  w.u32(static_cast<std::uint32_t>(nr));
  w.u32(static_cast<std::uint32_t>(nt));
  for (const auto& s : ds.samples) {
    if (s.h.rows() != nr || s.h.cols() != nt) {
      throw SizingError("save_dataset: sample shape differs from the config");
    }
    for (const Complex& z : s.h.values()) {
      w.f32(static_cast<float>(z.real()));
      w.f32(static_cast<float>(z.imag()));
    }
  }
  w.write_file(path);
}

ChannelDataset load_dataset(const std::filesystem::path& path) {
  auto r = detail::ByteReader::from_file(path);
  r.expect_magic("NSFM");
  const std::size_t version_at = r.offset();
  const std::uint32_t version = r.u32("version");
  if (version != kDatasetFormatVersion) {
    throw FormatError("unsupported dataset version " + std::to_string(version),
                      version_at);
  }
  const std::uint32_t count = r.u32("sample_count");
  const std::uint32_t nr = r.u32("nr");
  const std::uint32_t nt = r.u32("nt");
  if (nr == 0 || nt == 0) {
    throw FormatError("dataset has zero-sized channel matrices", r.offset());
  }
  const std::uint64_t payload = std::uint64_t{count} * nr * nt * 8;
  if (r.remaining() < payload) {
    throw FormatError("truncated payload: expected " + std::to_string(payload) +
                          " bytes, found " + std::to_string(r.remaining()),
                      r.offset());
  }
  if (r.remaining() > payload) {
    throw FormatError("trailing bytes after payload", r.offset() + payload);
  }
  ChannelDataset ds;
  ds.config.nr = nr;
  ds.config.nt = nt;
  ds.samples.reserve(count);
  for (std::uint32_t s = 0; s < count; ++s) {
    ComplexMatrix h(nr, nt);
    for (std::size_t i = 0; i < h.size(); ++i) {
      const float re = r.f32("sample");
      const float im = r.f32("sample");
      h.data()[i] = {re, im};
    }
    ds.samples.push_back({std::move(h)});
  }
  ds.train_count = count;
  ds.test_count = 0;
  return ds;
}

}  // namespace nsfm
