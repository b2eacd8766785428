#pragma once

#include <cstddef>
#include <vector>

#include "onebit/scene.hpp"

namespace onebit {

/// Window weights normalized to unit peak.
/// Chebyshev: equiripple sidelobes `sidelobe_db` below the main lobe.
/// Taylor: `nbar` nearly constant sidelobes at `sidelobe_db`.
std::vector<double> make_window(const WindowSpec& spec, std::size_t length);

/// SNR loss of a window relative to uniform weighting, 10 log10(M sum w^2 / (sum w)^2) >= 0.
double processing_loss_db(const std::vector<double>& w);

/// Amplitude gain relative to uniform weighting, -20 log10(sum w / M) >= 0 for unit-peak windows.
double coherent_gain_loss_db(const std::vector<double>& w);

/// Highest sidelobe of the zero-padded window spectrum in dB relative to the main-lobe peak.
double peak_sidelobe_db(const std::vector<double>& w, std::size_t pad_factor = 16);

}  // namespace onebit
