#pragma once

#include "bpdg/band.hpp"
#include "bpdg/field.hpp"
#include "bpdg/transport.hpp"

#include <array>
#include <functional>
#include <vector>

namespace bpdg {

/// Electron-phonon coupling: c_{+1} = (n_ph+1)K, c_{-1} = n_ph K, c_0 elastic.
struct PhononParams {
    double hbar_omega = 1.0;
    double n_ph = 0.0;
    double K = 0.0;
    double c0 = 0.0;
    bool detailed_balance = false;

    /// n_ph = 1/(e^{ħω} - 1).
    static PhononParams with_detailed_balance(double hbar_omega, double K, double c0);
    static double bose_einstein(double hbar_omega);

    /// c_j for j ∈ {-1, 0, +1}.
    double c(int j) const;
    /// Throws ConfigError on negative couplings, ħω <= 0, or a detailed-balance mismatch.
    void validate() const;
};

/// χ(ε) = 1 on [0, ε_max], ε_max = ε(p_max).
struct EnergyCutoff {
    double eps_max = 0.0;

    static EnergyCutoff from_band(const BandModel& band, double p_max) { return {energy(band, p_max)}; }
    bool admits(double eps) const { return eps >= 0.0 && eps <= eps_max; }
};

/// ν(ε) = Σ_j c_j 4π χ(ε - jħω) dos(ε - jħω).
double collision_frequency(const BandModel& band, const PhononParams& params, const EnergyCutoff& cutoff, double eps);

/// ∫_{-1}^{1} f(x, p, μ') dμ'.
using MuIntegral = std::function<double(double x, double p)>;

/// μ'-integral of a DG field (exact: ∫φ_c dμ = Δμ δ_c0).
MuIntegral mu_integral(const Field& field);
/// μ'-integral of a callable by composite Gauss quadrature (`cells` panels of `order` points).
MuIntegral mu_integral(const PhaseFunction& f, int cells = 16, int order = 5);

/// 2π Σ_j c_j χ(ε+jħω) dos(ε+jħω) ∫ f(x, p(ε+jħω), μ') dμ'.
double gain(const MuIntegral& f_mu, const BandModel& band, const PhononParams& params, const EnergyCutoff& cutoff,
            double p_max, double x, double p);
double gain(const Field& field, const BandModel& band, const PhononParams& params, const EnergyCutoff& cutoff,
            double x, double p);

/// Q(f) = gain(x,p) - ν(ε(p)) f(x,p,μ).
double q_operator(const Field& field, const BandModel& band, const PhononParams& params, const EnergyCutoff& cutoff,
                  double x, double p, double mu);
double q_operator(const PhaseFunction& f, const BandModel& band, const PhononParams& params,
                  const EnergyCutoff& cutoff, double p_max, double x, double p, double mu);

/// f_h and Q(f_h) at the tensor Gauss volume nodes of every cell, [cell][node].
struct CollisionNodeValues {
    int nodes_per_cell = 0;
    std::vector<double> f;
    std::vector<double> Q;
};

/// DG weak form of the gain/loss operator with precomputed shifted-energy tables.
class CollisionOperator {
public:
    /// `quad_order` <= 0 selects Gauss N = k+2, the volume rule of the space.
    CollisionOperator(SpacePtr space, BandModel band, PhononParams params, int quad_order = 0);

    const DgSpace& space() const { return *space_; }
    const BandModel& band() const { return band_; }
    const PhononParams& params() const { return params_; }
    const EnergyCutoff& cutoff() const { return cutoff_; }
    const QuadRule& rule() const { return rule_; }
    bool active() const { return params_.K > 0.0 || params_.c0 > 0.0; }

    CollisionNodeValues node_values(const Field& field, int threads = 1) const;
    /// Adds ∫ Q(f_h) g p² dV to `weak` for every test function.
    void assemble_weak(const CollisionNodeValues& nodes, std::vector<double>& weak, int threads = 1) const;
    /// Σ_cells ∫ Q(f_h) p² dV.
    double mass_residual(const CollisionNodeValues& nodes) const;

    Residual assemble(const Field& field, int threads = 1) const;

    /// Physical coordinates of volume node n of a cell.
    std::array<double, 3> node_point(CellIndex c, int n) const;
    /// Quadrature weight times |Ω_ikm| times p² at node n of cell c.
    double node_measure(CellIndex c, int n) const;

private:
    struct Shift {
        int cell = -1;       ///< target p cell, -1 when χ rejects the shift
        double eta = 0.0;    ///< local coordinate in the target cell
        double weight = 0.0; ///< 2π c_j dos(ε + jħω)
    };

    SpacePtr space_;
    BandModel band_;
    PhononParams params_;
    EnergyCutoff cutoff_;
    QuadRule rule_;
    NodeTable table_;              ///< basis at the collision rule's volume nodes
    std::vector<double> weights_;  ///< tensor weights, sum 1
    std::vector<double> nu_;       ///< ν at the p nodes, [k][r]
    std::vector<Shift> shifts_;    ///< [k][r][j+1]
};

Residual assemble_collision(const CollisionOperator& op, const Field& field);
double mass_residual(const CollisionOperator& op, const Field& field);

} // namespace bpdg
