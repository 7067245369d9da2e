#pragma once

#include <string_view>

namespace bpdg {

enum class BandKind { Parabolic, Kane };

/// Isotropic conduction band ε(p). Energies are in k_B·T units.
///
/// Kane: ε(1 + kane_alpha·ε) = p²/(2 m_eff). With kane_alpha = 0 it reduces
/// to the parabolic band.
struct BandModel {
    BandKind kind = BandKind::Parabolic;
    double m_eff = 1.0;
    double kane_alpha = 0.0;

    static BandModel parabolic(double m_eff) { return {BandKind::Parabolic, m_eff, 0.0}; }
    static BandModel kane(double m_eff, double alpha) { return {BandKind::Kane, m_eff, alpha}; }

    /// Throws ConfigError if m_eff <= 0 or kane_alpha < 0.
    void validate() const;
};

BandKind band_kind_from_string(std::string_view name);
std::string_view to_string(BandKind kind);

double energy(const BandModel& band, double p);
/// dε/dp.
double velocity(const BandModel& band, double p);
double momentum_of_energy(const BandModel& band, double eps);
/// p(ε)² · dp/dε, the density-of-states factor entering Q and ν.
/// Returns the analytic limit 0 at the band minimum.
double dos_factor(const BandModel& band, double eps);

} // namespace bpdg
