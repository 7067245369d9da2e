#include "bpdg/band.hpp"

#include "bpdg/errors.hpp"

#include <cmath>
#include <string>

namespace bpdg {

void BandModel::validate() const {
    if (!(m_eff > 0.0) || !std::isfinite(m_eff))
        throw ConfigError("band: m_eff must be positive");
    if (kind == BandKind::Kane && (!(kane_alpha >= 0.0) || !std::isfinite(kane_alpha)))
        throw ConfigError("band: kane_alpha must be non-negative");
}

BandKind band_kind_from_string(std::string_view name) {
    if (name == "parabolic") return BandKind::Parabolic;
    if (name == "kane") return BandKind::Kane;
    throw ConfigError("band: unknown kind '" + std::string(name) + "'");
}

std::string_view to_string(BandKind kind) {
    return kind == BandKind::Parabolic ? "parabolic" : "kane";
}

namespace {

double nonparabolicity(const BandModel& band) {
    return band.kind == BandKind::Kane ? band.kane_alpha : 0.0;
}

} // namespace

double energy(const BandModel& band, double p) {
    if (!(p >= 0.0)) throw DomainError("energy: negative momentum");
    const double gamma = p * p / (2.0 * band.m_eff);
    const double a = nonparabolicity(band);
    if (a == 0.0) return gamma;
    // Positive root of a ε² + ε − γ = 0 in cancellation-free form.
    return 2.0 * gamma / (1.0 + std::sqrt(1.0 + 4.0 * a * gamma));
}

double velocity(const BandModel& band, double p) {
    if (!(p >= 0.0)) throw DomainError("velocity: negative momentum");
    const double a = nonparabolicity(band);
    if (a == 0.0) return p / band.m_eff;
    return p / (band.m_eff * (1.0 + 2.0 * a * energy(band, p)));
}

double momentum_of_energy(const BandModel& band, double eps) {
    if (!(eps >= 0.0)) throw DomainError("momentum_of_energy: negative energy");
    const double a = nonparabolicity(band);
    return std::sqrt(2.0 * band.m_eff * eps * (1.0 + a * eps));
}

double dos_factor(const BandModel& band, double eps) {
    if (!(eps >= 0.0)) throw DomainError("dos_factor: negative energy");
    // p² dp/dε = p · m (1 + 2aε), which vanishes with p at ε = 0.
    const double a = nonparabolicity(band);
    return momentum_of_energy(band, eps) * band.m_eff * (1.0 + 2.0 * a * eps);
}

} // namespace bpdg
