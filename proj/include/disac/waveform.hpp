#pragma once

#include "disac/geometry.hpp"
#include "disac/rng.hpp"
#include "disac/scene.hpp"
#include "disac/tensor.hpp"

#include <optional>
#include <vector>

namespace disac {

struct OfdmConfig {
  double carrier_freq = 15e9;
  double bandwidth = 100e6;
  int num_subcarriers = 64;
  double subcarrier_spacing = 100e6 / 64;
  double tx_power_dbm = 40.0;
  double noise_variance_dbm = -93.85;

  void validate() const;
  double wavelength(double speed_of_light = kSpeedOfLight) const { return speed_of_light / carrier_freq; }
  double tx_amplitude() const;
  double noise_variance_watts() const;
  // Delays are identifiable modulo this period.
  double delay_period() const { return 1.0 / subcarrier_spacing; }
  double delay_resolution() const { return 1.0 / (num_subcarriers * subcarrier_spacing); }
};

double dbm_to_watts(double dbm);

enum class CodebookAxis { TxAz, TxEl, RxAz, RxEl };

const char* to_string(CodebookAxis axis);

// Columns are DFT beams e^{j 2 pi n b / N} for the num_beams indices b
// centred on broadside (b = -M/2 .. M/2-1 modulo N).
struct BeamCodebook {
  CMatrix matrix;
  CodebookAxis axis = CodebookAxis::RxAz;
  std::vector<int> beam_indices;

  int elements() const { return static_cast<int>(matrix.rows()); }
  int beams() const { return static_cast<int>(matrix.cols()); }
  bool is_transmit() const { return axis == CodebookAxis::TxAz || axis == CodebookAxis::TxEl; }
};

BeamCodebook dft_codebook(int axis_size, int num_beams, CodebookAxis axis = CodebookAxis::RxAz);

struct CodebookSet {
  BeamCodebook rx_el;
  BeamCodebook rx_az;
  BeamCodebook tx_el;
  BeamCodebook tx_az;

  // az codebooks act on the horizontal (n_x) array axis, el on the vertical (n_y).
  static CodebookSet make(const UpaGeometry& rx, const UpaGeometry& tx, int rx_az_beams, int rx_el_beams,
                          int tx_az_beams, int tx_el_beams);
  const BeamCodebook& for_mode(int mode) const;
};

// Tensor mode order.
enum TensorMode : int { kModeRxEl = 0, kModeRxAz = 1, kModeTxEl = 2, kModeTxAz = 3, kModeSubcarrier = 4 };

struct MeasurementTensor {
  Tensor5 data;
  CodebookSet codebooks;
  OfdmConfig ofdm;
  UpaGeometry rx_array;
  UpaGeometry tx_array;
  // Element-level noise variance sigma_z^2 (W) that was injected.
  double noise_variance = 0.0;
  double tx_amplitude = 1.0;
};

// s(tau) = [e^{-j 2 pi df tau k}]_{k=0}^{K-1}.
CVector delay_response(int num_subcarriers, double subcarrier_spacing, double delay);

// Beamspace image of a single-axis phase progression with spatial frequency
// omega: W^H a(omega) at the receiver, conj(F^H a(omega)) at the transmitter.
CVector beam_response(const BeamCodebook& codebook, double omega);

CMatrix channel_matrix(const std::vector<PathRecord>& paths, const UpaGeometry& tx_geom, const UpaGeometry& rx_geom,
                       int subcarrier, double subcarrier_spacing);

struct SynthesisOptions {
  bool add_noise = true;
  // When set, sigma_z^2 is chosen so that the mean per-entry signal power of
  // the beamspace tensor over the mean per-entry noise power equals this.
  std::optional<double> effective_snr_db;
  // When set, overrides OfdmConfig::noise_variance_dbm (W).
  std::optional<double> noise_variance_watts;
};

// Beamspace noise W^H z per (tx beam pair, subcarrier), z ~ CN(0, variance I).
Tensor5 beamspace_noise(const CodebookSet& codebooks, int num_subcarriers, double variance, Philox& rng);

MeasurementTensor synthesize_from_paths(const std::vector<PathRecord>& paths, const UpaGeometry& rx_geom,
                                        const UpaGeometry& tx_geom, const CodebookSet& codebooks,
                                        const OfdmConfig& ofdm, std::uint64_t noise_seed,
                                        const SynthesisOptions& options = {});

MeasurementTensor synthesize_tensor(const Scene& scene, int rx_id, const CodebookSet& codebooks,
                                    const OfdmConfig& ofdm, std::uint64_t noise_seed,
                                    const SynthesisOptions& options = {});

}  // namespace disac
