#pragma once

#include "bpdg/band.hpp"
#include "bpdg/collision.hpp"
#include "bpdg/errors.hpp"
#include "bpdg/field.hpp"
#include "bpdg/poisson.hpp"
#include "bpdg/positivity.hpp"
#include "bpdg/transport.hpp"

#include <array>
#include <functional>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace bpdg {

enum class PotentialMode { SelfConsistent, Frozen, Zero };
enum class InitialKind { Uniform, Maxwellian, Table };

PotentialMode potential_mode_from_string(std::string_view name);
std::string_view to_string(PotentialMode mode);
InitialKind initial_kind_from_string(std::string_view name);
std::string_view to_string(InitialKind kind);

struct RunConfig {
    // mesh
    double L = 1.0;
    double p_max = 6.0;
    int nx = 16;
    int np = 16;
    int nmu = 8;
    int degree = 1;

    BandModel band = BandModel::parabolic(1.0);

    double hbar_omega = 1.0;
    double K = 0.0;
    double c0 = 0.0;
    bool detailed_balance = true;
    std::optional<double> n_ph; ///< required when detailed_balance is false

    double doping_background = 1.0;
    std::vector<DopingProfile::Region> doping_regions;

    PoissonParams poisson;
    PotentialMode potential_mode = PotentialMode::SelfConsistent;
    BoundaryMode boundary = BoundaryMode::Periodic;

    InitialKind initial = InitialKind::Maxwellian;
    double initial_value = 1.0;   ///< uniform level
    std::string initial_table;    ///< snapshot path for InitialKind::Table

    double t_end = 1.0;
    int max_steps = 1000;
    int rk_order = 3;
    double safety = 0.9;

    std::string output_dir = "out";
    int snapshot_every = 0; ///< 0: initial and final snapshots only

    PhononParams phonon() const;
    /// Throws ConfigError on any out-of-range field.
    void validate() const;
};

/// Parses the JSON schema documented in the README; unknown keys are rejected.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::string& path);

/// ∫ f² e^{ε(p) - qV(x)} p² dV by Gauss N = k+2. When ε_max - q·min V > 700
/// the integrand is multiplied by e^{-ε_max} and `log_scale` = -ε_max.
struct EntropyNorm {
    double value = 0.0;
    double log_scale = 0.0;
};
EntropyNorm entropy_norm(const Field& field, const PotentialState& potential, const BandModel& band);

/// ∫ Q(f_h) f_h e^{ε - qV} p² dV on the collision volume nodes (same scaling rule as entropy_norm).
EntropyNorm entropy_dissipation(const CollisionOperator& op, const Field& field, const PotentialState& potential);

/// Residuals of ∂·β = 0 and β·∂H = 0 for β = (p²μ∂_pε, -qEp²μ, -qEp(1-μ²)).
struct BetaReport {
    double max_divergence = 0.0;
    double max_orthogonality = 0.0;
    int samples = 0;
};
BetaReport beta_identities_check(const PotentialState& potential, const BandModel& band, double p_max,
                                 const std::vector<std::array<double, 3>>& points);
BetaReport beta_identities_check(const PotentialState& potential, const BandModel& band, double p_max, int samples,
                                 std::mt19937_64& rng);

/// Maxwellian A(x) e^{-ε(p)} with ∫∫ f p² dp dμ scaled so that n(x) = N(x).
double maxwellian_normalization(const BandModel& band, double p_max);

struct StageRecord {
    StepControl control;
    double boundary_mass_rate = 0.0;
    double collision_mass_rate = 0.0;
    int limited_cells = 0;
};

struct StepReport {
    double dt = 0.0;
    /// dt Σ b_i × rate_i with the RK weights b_i of the final convex combination.
    double boundary_mass_change = 0.0;
    double collision_mass_change = 0.0;
    int limited_cells = 0;
    int retries = 0;
    std::vector<StageRecord> stages;
};

/// The assembled scheme: mesh, operators, Poisson coupling.
class Simulation {
public:
    explicit Simulation(const RunConfig& config, int threads = 1);

    const RunConfig& config() const { return config_; }
    const SpacePtr& space() const { return space_; }
    const TransportOperator& transport() const { return transport_; }
    const CollisionOperator& collision() const { return collision_; }
    const DopingProfile& doping() const { return doping_; }
    int threads() const { return threads_; }

    Field initial_field() const;
    /// Potential seen by a state: solved, frozen, or zero according to the mode.
    PotentialState potential_for(const Field& field) const;
    /// Fixes the potential used in frozen mode.
    void freeze_potential(PotentialState potential) { frozen_ = std::move(potential); }

    /// Step control for the current state (α, s, bounds, dt_accepted).
    StepControl step_control(const Field& field, const PotentialState& potential) const;

    /// f ← f + dt L(f) with a fresh potential, then the limiter.
    StageRecord euler_step(Field& field, double dt) const;
    /// Shu-Osher SSP-RK of order 1, 2 or 3 with the limiter after every stage.
    /// When `enforce_stage_bounds` is set, a stage whose dt exceeds its own raw
    /// positivity bound throws StageBoundExceeded.
    StepReport ssp_rk_step(Field& field, double dt, int order, bool enforce_stage_bounds = true) const;

    struct StageBoundExceeded {
        double bound;
    };

    /// dt from the step control, reduced on stage-bound failures (at most 20 halvings).
    StepReport advance(Field& field, double dt_max) const;

    /// Called with the stage state after every limiter application inside a step.
    using StageObserver = std::function<void(const Field&)>;
    void set_stage_observer(StageObserver observer) { observer_ = std::move(observer); }
    const StageObserver& stage_observer() const { return observer_; }

private:
    RunConfig config_;
    int threads_;
    SpacePtr space_;
    BandModel band_;
    DopingProfile doping_;
    TransportOperator transport_;
    CollisionOperator collision_;
    std::optional<PotentialState> frozen_;
    StageObserver observer_;
};

/// Scalar SSP-RK on du/dt = L(u) (same Shu-Osher coefficients as Simulation).
double ssp_rk_scalar(double u, double dt, int order, const std::function<double(double)>& L);

/// One diagnostics row; `collision_mass_residual` is the collision mass created during the step.
struct DiagnosticsRow {
    double t = 0.0;
    double dt = 0.0;
    double total_mass = 0.0;
    double entropy_norm = 0.0;
    double min_nodal_value = 0.0;
    double min_cell_average = 0.0;
    double collision_mass_residual = 0.0;
    int limited_cells = 0;
};

DiagnosticsRow diagnostics_row(const Field& field, const PotentialState& potential, const BandModel& band, double t);

inline constexpr const char* kDiagnosticsHeader =
    "t,dt,total_mass,entropy_norm,min_nodal_value,min_cell_average,collision_mass_residual,limited_cells";
void write_diagnostics_row(std::ostream& out, const DiagnosticsRow& row);

struct RunResult {
    int exit_code = kExitOk;
    int steps = 0;
    double t = 0.0;
    std::string message;
};

/// Full run with outputs in config.output_dir (or `out_dir` when non-empty).
/// Maps ConfigError/StallError/PositivityError to exit codes 1/2/3.
RunResult run(const RunConfig& config, int threads = 1, const std::string& out_dir = "");

} // namespace bpdg
