#include "bdris/kpi.hpp"

#include <Eigen/Cholesky>
#include <Eigen/SVD>

#include <cmath>

namespace bdris {

const char* to_string(Kpi k) {
    switch (k) {
        case Kpi::SisoGain: return "siso_gain";
        case Kpi::SumRateInterference: return "sum_rate_interference";
        case Kpi::SpectralNormSq: return "spectral_norm_sq";
        case Kpi::LogdetCapacity: return "logdet_capacity";
    }
    return "?";
}

Kpi kpi_from_string(const std::string& name) {
    if (name == "siso_gain") return Kpi::SisoGain;
    if (name == "sum_rate_interference") return Kpi::SumRateInterference;
    if (name == "spectral_norm_sq") return Kpi::SpectralNormSq;
    if (name == "logdet_capacity") return Kpi::LogdetCapacity;
    throw StructuralError("unknown KPI '" + name + "'");
}

bool kpi_is_siso(Kpi k) { return k == Kpi::SisoGain; }

double siso_gain(Cplx h) { return std::norm(h); }

double sum_rate_interference(const ChannelMatrix& H, SnrConfig snr) {
    if (H.rows() != 2 || H.cols() != 2)
        throw StructuralError("sum_rate_interference: channel must be 2x2");
    const double rho = snr.pt_over_sigma2;
    // h_ji is TX i -> RX j; stream i is decoded at RX i, the other TX interferes.
    const double r1 = std::log2(1.0 + rho * std::norm(H(0, 0)) / (rho * std::norm(H(0, 1)) + 1.0));
    const double r2 = std::log2(1.0 + rho * std::norm(H(1, 1)) / (rho * std::norm(H(1, 0)) + 1.0));
    return r1 + r2;
}

double spectral_norm_sq(const ChannelMatrix& H) {
    Eigen::JacobiSVD<CMat> svd(H);
    const double s = svd.singularValues()(0);
    return s * s;
}

double logdet_capacity(const ChannelMatrix& H, SnrConfig snr) {
    // log2 det(I + rho H H^H) = sum_i log2(1 + rho sigma_i^2)
    Eigen::JacobiSVD<CMat> svd(H);
    double c = 0.0;
    for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
        c += std::log2(1.0 + snr.pt_over_sigma2 * svd.singularValues()(i) * svd.singularValues()(i));
    return c;
}

double evaluate_kpi(Kpi k, const ChannelMatrix& H, SnrConfig snr) {
    switch (k) {
        case Kpi::SisoGain:
            if (H.rows() != 1 || H.cols() != 1)
                throw StructuralError("siso_gain: channel must be 1x1");
            return siso_gain(H(0, 0));
        case Kpi::SumRateInterference: return sum_rate_interference(H, snr);
        case Kpi::SpectralNormSq: return spectral_norm_sq(H);
        case Kpi::LogdetCapacity: return logdet_capacity(H, snr);
    }
    throw StructuralError("evaluate_kpi: unknown KPI");
}

} // namespace bdris
