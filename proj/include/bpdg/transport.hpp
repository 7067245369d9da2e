#pragma once

#include "bpdg/band.hpp"
#include "bpdg/field.hpp"
#include "bpdg/poisson.hpp"

#include <cmath>
#include <functional>
#include <string_view>
#include <vector>

namespace bpdg {

enum class BoundaryMode { Periodic, Diode };

BoundaryMode boundary_mode_from_string(std::string_view name);
std::string_view to_string(BoundaryMode mode);

/// Contact distribution f_in(p, μ) imposed on inflow at x = 0 and x = L.
using InflowFunction = std::function<double(double p, double mu)>;

struct TransportSettings {
    BoundaryMode boundary = BoundaryMode::Periodic;
    double q = 1.0;
    InflowFunction inflow_left;  ///< diode only
    InflowFunction inflow_right; ///< diode only
};

/// Advection coefficients of the three phase directions.
/// H^(x) = μ ∂_pε, H^(p) = -qEμ, H^(μ) = -qE.
struct TransportCoeffs {
    static double hx(double mu, double vel) { return mu * vel; }
    static double hp(double q, double E, double mu) { return -q * E * mu; }
    static double hmu(double q, double E) { return -q * E; }
};

/// vel·[((μ+|μ|)/2) f⁻ + ((μ-|μ|)/2) f⁺]; vel = ∂_pε ≥ 0.
inline double upwind_flux_x(double mu, double vel, double f_minus, double f_plus) {
    const double a = 0.5 * (mu + std::abs(mu));
    const double b = 0.5 * (mu - std::abs(mu));
    return vel * (a * f_minus + b * f_plus);
}

/// Upwind on -qEμ.
inline double upwind_flux_p(double E, double mu, double f_minus, double f_plus, double q = 1.0) {
    const double h = TransportCoeffs::hp(q, E, mu);
    return 0.5 * (h + std::abs(h)) * f_minus + 0.5 * (h - std::abs(h)) * f_plus;
}

/// Upwind on -qE.
inline double upwind_flux_mu(double E, double f_minus, double f_plus, double q = 1.0) {
    const double h = TransportCoeffs::hmu(q, E);
    return 0.5 * (h + std::abs(h)) * f_minus + 0.5 * (h - std::abs(h)) * f_plus;
}

/// Rate of change produced by one operator.
struct Residual {
    explicit Residual(SpacePtr space) : rate(std::move(space)) {}
    /// dc/dt in coefficient space (p²-weighted mass matrix already inverted).
    Field rate;
    /// d f̄/dt per cell.
    std::vector<double> cell_average_rate;
    /// Net mass entering the domain per unit time through its boundaries
    /// (transport) or created by the operator (collision mass residual).
    double mass_rate = 0.0;
};

/// Applies the inverse p²-weighted mass matrix to a weak-form residual and
/// returns the per-cell average rates (weak (0,0,0) entry over V_ikm).
void apply_inverse_mass(const DgSpace& space, std::vector<double>& weak, std::vector<double>* cell_average_rate);

/// Semi-discrete DG transport operator with upwind fluxes in x, p and μ.
class TransportOperator {
public:
    TransportOperator(SpacePtr space, BandModel band, TransportSettings settings);

    const DgSpace& space() const { return *space_; }
    const BandModel& band() const { return band_; }
    const TransportSettings& settings() const { return settings_; }

    /// Weak-form residual ∫(volume) - ∮(upwind flux) for every test function, accumulated into `weak`.
    void assemble_weak(const Field& field, const PotentialState& potential, std::vector<double>& weak,
                       int threads = 1) const;
    /// Total mass inflow rate through x = 0, x = L and p = p_max.
    double boundary_mass_rate(const Field& field, const PotentialState& potential) const;

    Residual assemble(const Field& field, const PotentialState& potential, int threads = 1) const;

    /// Γ_T/Δt for one cell: minus the six-face flux balance over V_ikm,
    /// evaluated from the directional node-set traces.
    double gamma_T(const Field& field, const PotentialState& potential, int cell) const;

    /// E at the Gauss x nodes of every x cell, [i][q].
    std::vector<double> efield_nodes(const PotentialState& potential) const;

private:
    double inflow(int side, int k, int m, int node) const;

    SpacePtr space_;
    BandModel band_;
    TransportSettings settings_;
    std::vector<double> vel_nodes_; ///< ∂_pε at Gauss p nodes, [k][r]
    std::vector<double> p_nodes_;   ///< Gauss p nodes, [k][r]
    std::vector<double> inflow_[2]; ///< contact values at x-face nodes, [k][m][r][s]
};

Residual assemble_transport(const TransportOperator& op, const Field& field, const PotentialState& potential);
double gamma_T(const TransportOperator& op, const Field& field, const PotentialState& potential, int cell);

} // namespace bpdg
