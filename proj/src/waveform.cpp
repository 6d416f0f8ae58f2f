#include "disac/waveform.hpp"

#include "disac/error.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace disac {

double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

void OfdmConfig::validate() const {
  if (num_subcarriers < 2) throw Error(ErrorKind::InvalidArgument, "OFDM needs at least 2 subcarriers");
  if (!(carrier_freq > 0.0) || !(bandwidth > 0.0) || !(subcarrier_spacing > 0.0))
    throw Error(ErrorKind::InvalidArgument, "OFDM frequencies must be positive");
  if (num_subcarriers * subcarrier_spacing > bandwidth * (1.0 + 1e-12))
    throw Error(ErrorKind::InvalidArgument, "K * subcarrier spacing exceeds the bandwidth");
}

double OfdmConfig::tx_amplitude() const { return std::sqrt(dbm_to_watts(tx_power_dbm)); }
double OfdmConfig::noise_variance_watts() const { return dbm_to_watts(noise_variance_dbm); }

const char* to_string(CodebookAxis axis) {
  switch (axis) {
    case CodebookAxis::TxAz: return "tx_az";
    case CodebookAxis::TxEl: return "tx_el";
    case CodebookAxis::RxAz: return "rx_az";
    case CodebookAxis::RxEl: return "rx_el";
  }
  return "unknown";
}

BeamCodebook dft_codebook(int axis_size, int num_beams, CodebookAxis axis) {
  if (axis_size < 1 || num_beams < 1)
    throw Error(ErrorKind::InvalidArgument, "codebook sizes must be >= 1");
  if (num_beams > axis_size)
    throw Error(ErrorKind::InvalidArgument, "codebook has more beams (" + std::to_string(num_beams) +
                                                ") than elements (" + std::to_string(axis_size) + ")");
  BeamCodebook cb;
  cb.axis = axis;
  cb.matrix.resize(axis_size, num_beams);
  for (int j = 0; j < num_beams; ++j) {
    const int b = ((j - num_beams / 2) % axis_size + axis_size) % axis_size;
    cb.beam_indices.push_back(b);
    for (int n = 0; n < axis_size; ++n) {
      // Reduce n*b modulo N first so the phase stays exact for large arrays.
      const int phase_index = (n * b) % axis_size;
      cb.matrix(n, j) = std::polar(1.0, 2.0 * std::numbers::pi * phase_index / axis_size);
    }
  }
  return cb;
}

CodebookSet CodebookSet::make(const UpaGeometry& rx, const UpaGeometry& tx, int rx_az_beams, int rx_el_beams,
                              int tx_az_beams, int tx_el_beams) {
  CodebookSet set;
  set.rx_az = dft_codebook(rx.n_x, rx_az_beams, CodebookAxis::RxAz);
  set.rx_el = dft_codebook(rx.n_y, rx_el_beams, CodebookAxis::RxEl);
  set.tx_az = dft_codebook(tx.n_x, tx_az_beams, CodebookAxis::TxAz);
  set.tx_el = dft_codebook(tx.n_y, tx_el_beams, CodebookAxis::TxEl);
  return set;
}

const BeamCodebook& CodebookSet::for_mode(int mode) const {
  switch (mode) {
    case kModeRxEl: return rx_el;
    case kModeRxAz: return rx_az;
    case kModeTxEl: return tx_el;
    case kModeTxAz: return tx_az;
    default: break;
  }
  throw Error(ErrorKind::InvalidArgument, "mode " + std::to_string(mode) + " has no codebook");
}

CVector delay_response(int num_subcarriers, double subcarrier_spacing, double delay) {
  CVector s(num_subcarriers);
  for (int k = 0; k < num_subcarriers; ++k) {
    // Reduce the cycle count before scaling by 2 pi to keep large delays accurate.
    const double cycles = subcarrier_spacing * delay * k;
    s[k] = std::polar(1.0, -2.0 * std::numbers::pi * (cycles - std::floor(cycles)));
  }
  return s;
}

CVector beam_response(const BeamCodebook& codebook, double omega) {
  const CVector a = axis_response(codebook.elements(), omega);
  CVector out = codebook.matrix.adjoint() * a;
  if (codebook.is_transmit()) out = out.conjugate();
  return out;
}

CMatrix channel_matrix(const std::vector<PathRecord>& paths, const UpaGeometry& tx_geom, const UpaGeometry& rx_geom,
                       int subcarrier, double subcarrier_spacing) {
  CMatrix h = CMatrix::Zero(rx_geom.num_elements(), tx_geom.num_elements());
  for (const auto& p : paths) {
    const double cycles = subcarrier * p.delay * subcarrier_spacing;
    const cplx phase = std::polar(1.0, -2.0 * std::numbers::pi * (cycles - std::floor(cycles)));
    h += (p.gain * phase) * steering_vector(p.aoa, rx_geom) * steering_vector(p.aod, tx_geom).adjoint();
  }
  return h;
}

Tensor5 beamspace_noise(const CodebookSet& cb, int num_subcarriers, double variance, Philox& rng) {
  const int n_x = cb.rx_az.elements();
  const int n_y = cb.rx_el.elements();
  Tensor5 noise({cb.rx_el.beams(), cb.rx_az.beams(), cb.tx_el.beams(), cb.tx_az.beams(), num_subcarriers});
  if (variance <= 0.0) return noise;
  const CMatrix w_az_h = cb.rx_az.matrix.adjoint();
  const CMatrix w_el_conj = cb.rx_el.matrix.conjugate();
  CMatrix z(n_x, n_y);
  for (int p = 0; p < cb.tx_el.beams(); ++p) {
    for (int q = 0; q < cb.tx_az.beams(); ++q) {
      for (int k = 0; k < num_subcarriers; ++k) {
        for (int n = 0; n < n_x; ++n)
          for (int m = 0; m < n_y; ++m) z(n, m) = rng.complex_normal(variance);
        // (W_az (x) W_el)^H vec(z) arranged as an M_az x M_el matrix.
        const CMatrix y = w_az_h * z * w_el_conj;
        for (int a = 0; a < cb.rx_az.beams(); ++a)
          for (int e = 0; e < cb.rx_el.beams(); ++e) noise(e, a, p, q, k) = y(a, e);
      }
    }
  }
  return noise;
}

namespace {

void check_codebooks(const CodebookSet& cb, const UpaGeometry& rx, const UpaGeometry& tx) {
  if (cb.rx_az.elements() != rx.n_x || cb.rx_el.elements() != rx.n_y || cb.tx_az.elements() != tx.n_x ||
      cb.tx_el.elements() != tx.n_y)
    throw Error(ErrorKind::DimensionMismatch, "codebook element counts do not match the array geometries");
}

double mean_gram_diagonal(const BeamCodebook& cb) {
  return cb.matrix.colwise().squaredNorm().mean();
}

}  // namespace

MeasurementTensor synthesize_from_paths(const std::vector<PathRecord>& paths, const UpaGeometry& rx_geom,
                                        const UpaGeometry& tx_geom, const CodebookSet& cb, const OfdmConfig& ofdm,
                                        std::uint64_t noise_seed, const SynthesisOptions& options) {
  ofdm.validate();
  rx_geom.validate();
  tx_geom.validate();
  check_codebooks(cb, rx_geom, tx_geom);

  MeasurementTensor out;
  out.codebooks = cb;
  out.ofdm = ofdm;
  out.rx_array = rx_geom;
  out.tx_array = tx_geom;
  out.tx_amplitude = ofdm.tx_amplitude();

  const int num_paths = static_cast<int>(paths.size());
  std::array<CMatrix, 5> factors;
  factors[kModeRxEl].resize(cb.rx_el.beams(), num_paths);
  factors[kModeRxAz].resize(cb.rx_az.beams(), num_paths);
  factors[kModeTxEl].resize(cb.tx_el.beams(), num_paths);
  factors[kModeTxAz].resize(cb.tx_az.beams(), num_paths);
  factors[kModeSubcarrier].resize(ofdm.num_subcarriers, num_paths);
  CVector gains(num_paths);
  for (int l = 0; l < num_paths; ++l) {
    const auto& p = paths[l];
    const auto rx_f = spatial_frequencies(p.aoa, rx_geom);
    const auto tx_f = spatial_frequencies(p.aod, tx_geom);
    factors[kModeRxEl].col(l) = beam_response(cb.rx_el, rx_f.vertical);
    factors[kModeRxAz].col(l) = beam_response(cb.rx_az, rx_f.horizontal);
    factors[kModeTxEl].col(l) = beam_response(cb.tx_el, tx_f.vertical);
    factors[kModeTxAz].col(l) = beam_response(cb.tx_az, tx_f.horizontal);
    factors[kModeSubcarrier].col(l) = delay_response(ofdm.num_subcarriers, ofdm.subcarrier_spacing, p.delay);
    // Unit all-ones pilots: the pilot contributes only the transmit amplitude.
    gains[l] = out.tx_amplitude * p.gain;
  }
  out.data = Tensor5::from_factors(factors, gains);

  if (!options.add_noise) return out;

  const double gram_scale = mean_gram_diagonal(cb.rx_az) * mean_gram_diagonal(cb.rx_el);
  double variance = options.noise_variance_watts.value_or(ofdm.noise_variance_watts());
  if (options.effective_snr_db) {
    const double signal_power = out.data.squared_norm() / static_cast<double>(out.data.size());
    variance = signal_power / std::pow(10.0, *options.effective_snr_db / 10.0) / gram_scale;
  }
  out.noise_variance = variance;
  Philox rng(noise_seed, streams::kNoise);
  out.data += beamspace_noise(cb, ofdm.num_subcarriers, variance, rng);
  return out;
}

MeasurementTensor synthesize_tensor(const Scene& scene, int rx_id, const CodebookSet& codebooks,
                                    const OfdmConfig& ofdm, std::uint64_t noise_seed,
                                    const SynthesisOptions& options) {
  const auto& rx = scene.receiver(rx_id);
  const auto paths = generate_ground_truth_paths(scene, rx_id);
  return synthesize_from_paths(paths, rx.array, scene.tx.array, codebooks, ofdm, noise_seed, options);
}

}  // namespace disac
