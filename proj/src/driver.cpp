#include "bpdg/driver.hpp"

#include "bpdg/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

namespace bpdg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kOverflowExponent = 700.0;

double min_v_at_nodes(const PotentialState& pot, const QuadRule& rule) {
    double v = kInf;
    for (int i = 0; i < pot.nx(); ++i) {
        const double h = pot.x_edges[i + 1] - pot.x_edges[i];
        for (double t : rule.nodes) v = std::min(v, pot.V[i](h * t));
    }
    return v;
}

TransportSettings make_settings(const RunConfig& c, const DopingProfile& doping) {
    TransportSettings s;
    s.boundary = c.boundary;
    s.q = c.poisson.q;
    if (c.boundary == BoundaryMode::Diode) {
        const double A = maxwellian_normalization(c.band, c.p_max);
        const BandModel band = c.band;
        const double left = A * doping.values.front();
        const double right = A * doping.values.back();
        s.inflow_left = [band, left](double p, double) { return left * std::exp(-energy(band, p)); };
        s.inflow_right = [band, right](double p, double) { return right * std::exp(-energy(band, p)); };
    }
    return s;
}

} // namespace

double maxwellian_normalization(const BandModel& band, double p_max) {
    const QuadRule g = quad_rule(QuadKind::Gauss, 5);
    constexpr int panels = 400;
    const double h = p_max / panels;
    double s = 0.0;
    for (int j = 0; j < panels; ++j)
        for (int r = 0; r < g.size(); ++r) {
            const double p = h * (j + g.nodes[r]);
            s += h * g.weights[r] * std::exp(-energy(band, p)) * p * p;
        }
    // n = 2π ∫∫ f p² dp dμ and the μ integral contributes 2.
    return 1.0 / (4.0 * std::numbers::pi * s);
}

EntropyNorm entropy_norm(const Field& field, const PotentialState& potential, const BandModel& band) {
    const DgSpace& sp = field.space();
    const auto& mesh = sp.mesh();
    const auto& vol = sp.volume_nodes();
    const auto& w = sp.volume_weights();
    const double q = potential.params.q;
    EntropyNorm out;
    if (energy(band, mesh.p_max()) - q * min_v_at_nodes(potential, sp.gauss()) > kOverflowExponent)
        out.log_scale = -energy(band, mesh.p_max());
    for (int c = 0; c < mesh.num_cells(); ++c) {
        const CellIndex ci = mesh.unflat(c);
        const auto u = field.cell(c);
        const double vol_c = mesh.dx(ci.i) * mesh.dp(ci.k) * mesh.dmu(ci.m);
        for (int n = 0; n < vol.num_points; ++n) {
            const auto& r = vol.points[n];
            const double p = mesh.p_edges()[ci.k] + mesh.dp(ci.k) * r[1];
            const double V = potential.V[ci.i](mesh.dx(ci.i) * r[0]);
            const double f = vol.value(u, n);
            out.value += w[n] * vol_c * p * p * f * f * std::exp(energy(band, p) - q * V + out.log_scale);
        }
    }
    return out;
}

EntropyNorm entropy_dissipation(const CollisionOperator& op, const Field& field, const PotentialState& potential) {
    const auto& mesh = op.space().mesh();
    const BandModel& band = op.band();
    const double q = potential.params.q;
    EntropyNorm out;
    if (energy(band, mesh.p_max()) - q * min_v_at_nodes(potential, op.rule()) > kOverflowExponent)
        out.log_scale = -energy(band, mesh.p_max());
    const auto nodes = op.node_values(field);
    for (int c = 0; c < mesh.num_cells(); ++c) {
        const CellIndex ci = mesh.unflat(c);
        for (int n = 0; n < nodes.nodes_per_cell; ++n) {
            const auto pt = op.node_point(ci, n);
            const double V = potential.V[ci.i](pt[0] - mesh.x_edges()[ci.i]);
            const std::size_t j = static_cast<std::size_t>(c) * nodes.nodes_per_cell + n;
            out.value += op.node_measure(ci, n) * nodes.Q[j] * nodes.f[j] *
                         std::exp(energy(band, pt[1]) - q * V + out.log_scale);
        }
    }
    return out;
}

BetaReport beta_identities_check(const PotentialState& potential, const BandModel& band, double p_max,
                                 const std::vector<std::array<double, 3>>& points) {
    const double q = potential.params.q;
    BetaReport rep;
    for (const auto& pt : points) {
        const double x = pt[0], p = pt[1], mu = pt[2];
        const double E = efield_at(potential, x);
        auto beta_x = [&](double xx, double pp, double mm) {
            (void)xx;
            return pp * pp * mm * velocity(band, pp);
        };
        auto beta_p = [&](double pp, double mm) { return -q * E * pp * pp * mm; };
        auto beta_mu = [&](double pp, double mm) { return -q * E * pp * (1.0 - mm * mm); };
        // β_p is quadratic in p and β_μ quadratic in μ, so wide central differences are exact up to rounding.
        const double hp = 0.5 * std::max(p, 1.0);
        const double hm = 0.5;
        const double hx = 1e-4 * potential.length();
        const double xl = std::max(0.0, x - hx), xr = std::min(potential.length(), x + hx);
        const double d_x = xr > xl ? (beta_x(xr, p, mu) - beta_x(xl, p, mu)) / (xr - xl) : 0.0;
        const double d_p = (beta_p(p + hp, mu) - beta_p(p - hp, mu)) / (2.0 * hp);
        const double d_mu = (beta_mu(p, mu + hm) - beta_mu(p, mu - hm)) / (2.0 * hm);
        const double scale = std::max(1.0, std::abs(q * E) * p);
        rep.max_divergence = std::max(rep.max_divergence, std::abs(d_x + d_p + d_mu) / scale);
        // ∂H = (∂_x(ε - qV), ∂_p ε, 0) = (qE, ∂_p ε, 0).
        const double dot = beta_x(x, p, mu) * q * E + beta_p(p, mu) * velocity(band, p);
        rep.max_orthogonality = std::max(rep.max_orthogonality, std::abs(dot) / std::max(1.0, p * p * std::abs(q * E)));
        ++rep.samples;
    }
    (void)p_max;
    return rep;
}

BetaReport beta_identities_check(const PotentialState& potential, const BandModel& band, double p_max, int samples,
                                 std::mt19937_64& rng) {
    std::uniform_real_distribution<double> ux(0.0, potential.length()), up(0.0, p_max), um(-1.0, 1.0);
    std::vector<std::array<double, 3>> pts(samples);
    for (auto& pt : pts) pt = {ux(rng), up(rng), um(rng)};
    return beta_identities_check(potential, band, p_max, pts);
}

Simulation::Simulation(const RunConfig& config, int threads)
    : config_((config.validate(), config)),
      threads_(std::max(1, threads)),
      space_(make_space(build_uniform(config.L, config.p_max, config.nx, config.np, config.nmu), config.degree)),
      band_(config.band),
      doping_(DopingProfile::from_regions(space_->mesh(), config.doping_background, config.doping_regions)),
      transport_(space_, band_, make_settings(config, doping_)),
      collision_(space_, band_, config.phonon()) {}

Field Simulation::initial_field() const {
    const auto& mesh = space_->mesh();
    switch (config_.initial) {
    case InitialKind::Uniform: {
        const double v = config_.initial_value;
        return project(space_, [v](double, double, double) { return v; });
    }
    case InitialKind::Maxwellian: {
        const double A = maxwellian_normalization(band_, mesh.p_max());
        const BandModel band = band_;
        const DopingProfile doping = doping_;
        return project(space_, [&mesh, A, band, doping](double x, double p, double) {
            return A * doping.values[mesh.locate_x(x)] * std::exp(-energy(band, p));
        });
    }
    case InitialKind::Table: {
        std::ifstream in(config_.initial_table);
        if (!in) throw ConfigError("cannot open initial table '" + config_.initial_table + "'");
        return read_snapshot(in, space_);
    }
    }
    throw ConfigError("unknown initial condition");
}

PotentialState Simulation::potential_for(const Field& field) const {
    switch (config_.potential_mode) {
    case PotentialMode::Zero: return PotentialState::zero(space_->mesh().x_edges(), config_.poisson);
    case PotentialMode::Frozen:
        if (frozen_) return *frozen_;
        [[fallthrough]];
    case PotentialMode::SelfConsistent: break;
    }
    return solve_potential(electron_density(field), doping_, config_.poisson);
}

StepControl Simulation::step_control(const Field& field, const PotentialState& potential) const {
    const auto coeffs = transport_cfl_coefficients(*space_, band_, potential, config_.poisson.q);
    const double B_c =
        collision_.active() ? collision_cfl_coefficient(collision_, collision_.node_values(field, threads_)) : kInf;
    return choose_split(coeffs, B_c, config_.safety);
}

namespace {

StageRecord euler_stage(const Simulation& sim, Field& field, double dt, bool enforce) {
    const DgSpace& sp = *sim.space();
    const PotentialState pot = sim.potential_for(field);
    StageRecord rec;
    const auto coeffs = transport_cfl_coefficients(sp, sim.transport().band(), pot, sim.config().poisson.q);
    CollisionNodeValues nodes;
    double B_c = kInf;
    if (sim.collision().active()) {
        nodes = sim.collision().node_values(field, sim.threads());
        B_c = collision_cfl_coefficient(sim.collision(), nodes);
    }
    rec.control = choose_split(coeffs, B_c, sim.config().safety);
    if (enforce) {
        const double raw = rec.control.dt_accepted / rec.control.safety;
        if (dt > raw) throw Simulation::StageBoundExceeded{raw};
    }

    std::vector<double> weak(sp.num_coeffs(), 0.0);
    sim.transport().assemble_weak(field, pot, weak, sim.threads());
    rec.boundary_mass_rate = sim.transport().boundary_mass_rate(field, pot);
    if (sim.collision().active()) {
        sim.collision().assemble_weak(nodes, weak, sim.threads());
        rec.collision_mass_rate = sim.collision().mass_residual(nodes);
    }
    apply_inverse_mass(sp, weak, nullptr);
    auto& c = field.coeffs();
    for (std::size_t j = 0; j < c.size(); ++j) c[j] += dt * weak[j];
    rec.limited_cells = apply_limiter(field, sim.threads()).limited_cells;
    if (sim.stage_observer()) sim.stage_observer()(field);
    return rec;
}

void convex(Field& target, double a, const Field& other) {
    // target ← (1-a)·target + a·other
    auto& t = target.coeffs();
    const auto& o = other.coeffs();
    for (std::size_t j = 0; j < t.size(); ++j) t[j] = (1.0 - a) * t[j] + a * o[j];
}

} // namespace

StageRecord Simulation::euler_step(Field& field, double dt) const { return euler_stage(*this, field, dt, false); }

StepReport Simulation::ssp_rk_step(Field& field, double dt, int order, bool enforce_stage_bounds) const {
    if (order < 1 || order > 3) throw ConfigError("ssp_rk_step: order must be 1, 2 or 3");
    StepReport rep;
    rep.dt = dt;
    auto record = [&](const StageRecord& s, double b) {
        rep.stages.push_back(s);
        rep.boundary_mass_change += dt * b * s.boundary_mass_rate;
        rep.collision_mass_change += dt * b * s.collision_mass_rate;
        rep.limited_cells += s.limited_cells;
    };
    if (order == 1) {
        record(euler_stage(*this, field, dt, enforce_stage_bounds), 1.0);
        return rep;
    }
    Field u1 = field;
    record(euler_stage(*this, u1, dt, enforce_stage_bounds), order == 2 ? 0.5 : 1.0 / 6.0);
    if (order == 2) {
        record(euler_stage(*this, u1, dt, enforce_stage_bounds), 0.5);
        convex(field, 0.5, u1);
        return rep;
    }
    record(euler_stage(*this, u1, dt, enforce_stage_bounds), 1.0 / 6.0);
    Field u2 = field;
    convex(u2, 0.25, u1);
    record(euler_stage(*this, u2, dt, enforce_stage_bounds), 2.0 / 3.0);
    convex(field, 2.0 / 3.0, u2);
    return rep;
}

StepReport Simulation::advance(Field& field, double dt_max) const {
    const StepControl sc = step_control(field, potential_for(field));
    double dt = std::min(sc.dt_accepted, dt_max);
    for (int retry = 0; retry <= 20; ++retry) {
        Field trial = field;
        try {
            StepReport rep = ssp_rk_step(trial, dt, config_.rk_order, true);
            rep.retries = retry;
            field = std::move(trial);
            return rep;
        } catch (const StageBoundExceeded& e) {
            dt = std::min(0.5 * dt, config_.safety * e.bound);
        }
    }
    throw StallError("advance: stage positivity bounds not met after 20 step reductions");
}

double ssp_rk_scalar(double u, double dt, int order, const std::function<double(double)>& L) {
    switch (order) {
    case 1: return u + dt * L(u);
    case 2: {
        const double u1 = u + dt * L(u);
        return 0.5 * u + 0.5 * (u1 + dt * L(u1));
    }
    case 3: {
        const double u1 = u + dt * L(u);
        const double u2 = 0.75 * u + 0.25 * (u1 + dt * L(u1));
        return u / 3.0 + 2.0 / 3.0 * (u2 + dt * L(u2));
    }
    default: throw ConfigError("ssp_rk_scalar: order must be 1, 2 or 3");
    }
}

DiagnosticsRow diagnostics_row(const Field& field, const PotentialState& potential, const BandModel& band, double t) {
    DiagnosticsRow row;
    row.t = t;
    row.total_mass = total_mass(field);
    row.entropy_norm = entropy_norm(field, potential, band).value;
    row.min_nodal_value = kInf;
    row.min_cell_average = kInf;
    for (int c = 0; c < field.space().num_cells(); ++c) {
        row.min_nodal_value = std::min(row.min_nodal_value, min_positivity_node(field, c));
        row.min_cell_average = std::min(row.min_cell_average, cell_average(field, c));
    }
    return row;
}

void write_diagnostics_row(std::ostream& out, const DiagnosticsRow& r) {
    char buf[512];
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d\n", r.t, r.dt, r.total_mass,
                  r.entropy_norm, r.min_nodal_value, r.min_cell_average, r.collision_mass_residual, r.limited_cells);
    out << buf;
    out.flush();
}

namespace {

std::string numbered(const char* stem, int step) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s_%06d.csv", stem, step);
    return buf;
}

void write_outputs(const std::filesystem::path& dir, int step, const Field& f, const PotentialState& pot,
                   const DopingProfile& doping) {
    {
        std::ofstream out(dir / numbered("snapshot", step));
        write_snapshot(out, f);
    }
    std::ofstream out(dir / numbered("poisson", step));
    write_poisson_csv(out, pot, electron_density(f), doping, f.space().lobatto());
}

void write_cfl_row(std::ostream& out, int step, double t, const StepControl& sc, int limited) {
    char buf[512];
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d\n", step, t,
                  sc.alpha, sc.s[0], sc.s[1], sc.s[2], sc.dt_transport_x, sc.dt_transport_p, sc.dt_transport_mu,
                  sc.dt_collision, sc.dt_accepted, limited);
    out << buf;
    out.flush();
}

} // namespace

RunResult run(const RunConfig& config, int threads, const std::string& out_dir) {
    RunResult result;
    try {
        Simulation sim(config, threads);
        const std::filesystem::path dir = out_dir.empty() ? config.output_dir : out_dir;
        std::filesystem::create_directories(dir);

        Field f = sim.initial_field();
        PotentialState pot = sim.potential_for(f);
        if (config.potential_mode == PotentialMode::Frozen) sim.freeze_potential(pot);
        const int initial_limited = apply_limiter(f, threads).limited_cells;

        std::ofstream diag(dir / "diagnostics.csv");
        diag << kDiagnosticsHeader << '\n';
        std::ofstream cfl(dir / "cfl.csv");
        cfl << "step,t,alpha,s1,s2,s3,dt_transport_x,dt_transport_p,dt_transport_mu,dt_collision,dt_accepted,limited_cells\n";

        double log_scale = entropy_norm(f, pot, config.band).log_scale;
        DiagnosticsRow row = diagnostics_row(f, pot, config.band, 0.0);
        row.limited_cells = initial_limited;
        write_diagnostics_row(diag, row);
        write_outputs(dir, 0, f, pot, sim.doping());

        double t = 0.0;
        int step = 0;
        while (t < config.t_end && step < config.max_steps) {
            const StepReport rep = sim.advance(f, config.t_end - t);
            ++step;
            t = (config.t_end - (t + rep.dt) <= 1e-14 * config.t_end) ? config.t_end : t + rep.dt;
            pot = sim.potential_for(f);
            row = diagnostics_row(f, pot, config.band, t);
            row.dt = rep.dt;
            row.collision_mass_residual = rep.collision_mass_change;
            row.limited_cells = rep.limited_cells;
            write_diagnostics_row(diag, row);
            write_cfl_row(cfl, step, t, rep.stages.front().control, rep.limited_cells);
            const bool last = !(t < config.t_end && step < config.max_steps);
            if (last || (config.snapshot_every > 0 && step % config.snapshot_every == 0))
                write_outputs(dir, step, f, pot, sim.doping());
        }

        nlohmann::json info = {{"steps", step},
                               {"t", t},
                               {"entropy_log_scale", log_scale},
                               {"rk_order", config.rk_order},
                               {"degree", config.degree},
                               {"potential_mode", std::string(to_string(config.potential_mode))},
                               {"boundary", std::string(to_string(config.boundary))}};
        std::ofstream(dir / "run_info.json") << info.dump(2) << '\n';
        result.steps = step;
        result.t = t;
        result.exit_code = kExitOk;
    } catch (const ConfigError& e) {
        result.exit_code = kExitConfig;
        result.message = e.what();
    } catch (const StallError& e) {
        result.exit_code = kExitStall;
        result.message = e.what();
    } catch (const PositivityError& e) {
        result.exit_code = kExitPositivity;
        result.message = e.what();
    }
    return result;
}

} // namespace bpdg
