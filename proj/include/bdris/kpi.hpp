#pragma once

#include <string>

#include "bdris/netmodel.hpp"

namespace bdris {

/// Transmit power over noise power, linear scale (100 dB -> 1e10).
struct SnrConfig {
    double pt_over_sigma2 = 1e10;
};

enum class Kpi {
    SisoGain,           ///< |h|^2 of a 1x1 channel
    SumRateInterference, ///< two interfering SISO streams, R1 + R2
    SpectralNormSq,     ///< squared largest singular value (low-SNR capacity proxy)
    LogdetCapacity,     ///< log2 det(I + rho H H^H) (high SNR, uniform power)
};

const char* to_string(Kpi k);
Kpi kpi_from_string(const std::string& name);

/// True for KPIs defined on a single TX / single RX choice.
bool kpi_is_siso(Kpi k);

double siso_gain(Cplx h);
double sum_rate_interference(const ChannelMatrix& H, SnrConfig snr);
double spectral_norm_sq(const ChannelMatrix& H);
double logdet_capacity(const ChannelMatrix& H, SnrConfig snr);

double evaluate_kpi(Kpi k, const ChannelMatrix& H, SnrConfig snr);

} // namespace bdris
