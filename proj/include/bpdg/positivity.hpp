#pragma once

#include "bpdg/band.hpp"
#include "bpdg/collision.hpp"
#include "bpdg/field.hpp"
#include "bpdg/poisson.hpp"

#include <array>
#include <vector>

namespace bpdg {

/// Transport bounds written as α·s_l·B_l; B_l = +∞ when direction l carries no advection.
struct TransportCflCoeffs {
    std::array<double, 3> B{};
};

/// Per-cell minima of the x, p and μ positivity bounds divided by α·s_l.
/// `lobatto` supplies ŵ_N and the velocity nodes; `gauss` the E nodes and the
/// smallest p node used for the μ bound in cells touching p = 0.
TransportCflCoeffs transport_cfl_coefficients(const PhaseMesh& mesh, const BandModel& band,
                                              const PotentialState& potential, const QuadRule& lobatto,
                                              const QuadRule& gauss, double q = 1.0);
TransportCflCoeffs transport_cfl_coefficients(const DgSpace& space, const BandModel& band,
                                              const PotentialState& potential, double q = 1.0);

/// The three transport bounds α s_l B_l. Throws ConfigError if α ∉ (0,1), s is
/// not in the simplex, or s_l = 0 for a direction with finite B_l.
std::array<double, 3> transport_cfl(const TransportCflCoeffs& coeffs, double alpha, const std::array<double, 3>& s);
std::array<double, 3> transport_cfl(const PhaseMesh& mesh, const BandModel& band, const PotentialState& potential,
                                    const QuadRule& lobatto, const QuadRule& gauss, double alpha,
                                    const std::array<double, 3>& s, double q = 1.0);

/// min over nodes with Q < 0 of f/|Q| (the collision bound divided by 1-α);
/// +∞ if Q >= 0 everywhere. StallError if f <= 0 where Q < 0.
double collision_cfl_coefficient(const CollisionOperator& op, const CollisionNodeValues& nodes);
double collision_cfl_coefficient(std::span<const double> f, std::span<const double> Q);
/// (1-α) times the coefficient above.
double collision_cfl(std::span<const double> f, std::span<const double> Q, double alpha);

struct StepControl {
    double alpha = 1.0;
    std::array<double, 3> s{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
    double dt_transport_x = 0.0;
    double dt_transport_p = 0.0;
    double dt_transport_mu = 0.0;
    double dt_collision = 0.0;
    /// safety × the equalized bound, before any clipping by the driver.
    double dt_accepted = 0.0;
    double safety = 0.9;
};

inline constexpr double kAlphaMax = 1.0 - 1e-6;
inline constexpr double kAlphaMin = 1e-6;

/// Equalizes the transport and collision bounds: s_l ∝ 1/B_l, α = B_c/(B*+B_c).
/// Throws StallError when the accepted step is zero.
StepControl choose_split(const TransportCflCoeffs& transport, double B_c, double safety = 0.9);

struct LimiterReport {
    int limited_cells = 0;
    double min_theta = 1.0;
    double min_node_before = 0.0;
};

/// Scales the non-constant content of every cell with a negative positivity
/// node toward its p²-weighted average. PositivityError if an average is below -1e-12.
LimiterReport apply_limiter(Field& field, int threads = 1);

} // namespace bpdg
