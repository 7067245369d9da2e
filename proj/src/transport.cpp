#include "bpdg/transport.hpp"

#include "bpdg/errors.hpp"
#include "bpdg/parallel.hpp"

#include <string>

namespace bpdg {

BoundaryMode boundary_mode_from_string(std::string_view name) {
    if (name == "periodic") return BoundaryMode::Periodic;
    if (name == "diode") return BoundaryMode::Diode;
    throw ConfigError("unknown boundary mode '" + std::string(name) + "'");
}

std::string_view to_string(BoundaryMode mode) { return mode == BoundaryMode::Periodic ? "periodic" : "diode"; }

void apply_inverse_mass(const DgSpace& space, std::vector<double>& weak, std::vector<double>* cell_average_rate) {
    const auto& mesh = space.mesh();
    const int K = space.basis_per_dim();
    const int nb = space.num_basis();
    if (cell_average_rate) cell_average_rate->assign(mesh.num_cells(), 0.0);
    std::vector<double> tmp(nb);
    for (int c = 0; c < mesh.num_cells(); ++c) {
        const CellIndex ci = mesh.unflat(c);
        double* w = weak.data() + static_cast<std::size_t>(c) * nb;
        if (cell_average_rate) (*cell_average_rate)[c] = w[0] / mesh.cell_volume(ci);
        const auto inv = space.p_mass_inverse(ci.k);
        const double scale = 1.0 / (mesh.dx(ci.i) * mesh.dmu(ci.m));
        for (int a = 0; a < K; ++a)
            for (int b = 0; b < K; ++b)
                for (int cc = 0; cc < K; ++cc) {
                    double s = 0.0;
                    for (int b2 = 0; b2 < K; ++b2) s += inv[b * K + b2] * w[DgSpace::basis_index(a, b2, cc, K)];
                    tmp[DgSpace::basis_index(a, b, cc, K)] = scale * s;
                }
        std::copy(tmp.begin(), tmp.end(), w);
    }
}

TransportOperator::TransportOperator(SpacePtr space, BandModel band, TransportSettings settings)
    : space_(std::move(space)), band_(band), settings_(std::move(settings)) {
    band_.validate();
    const auto& mesh = space_->mesh();
    const auto& g = space_->gauss();
    const int N = g.size();
    for (int k = 0; k < mesh.np(); ++k)
        for (int r = 0; r < N; ++r) {
            const double p = mesh.p_edges()[k] + mesh.dp(k) * g.nodes[r];
            p_nodes_.push_back(p);
            vel_nodes_.push_back(velocity(band_, p));
        }
    if (settings_.boundary == BoundaryMode::Diode) {
        if (!settings_.inflow_left || !settings_.inflow_right)
            throw ConfigError("diode boundary needs contact inflow distributions");
        for (int side = 0; side < 2; ++side) {
            const auto& fn = side == 0 ? settings_.inflow_left : settings_.inflow_right;
            for (int k = 0; k < mesh.np(); ++k)
                for (int m = 0; m < mesh.nmu(); ++m)
                    for (int r = 0; r < N; ++r)
                        for (int s = 0; s < N; ++s) {
                            const double v = fn(p_nodes_[k * N + r], mesh.mu_edges()[m] + mesh.dmu(m) * g.nodes[s]);
                            if (!(v >= 0.0)) throw ConfigError("contact inflow distribution must be non-negative");
                            inflow_[side].push_back(v);
                        }
        }
    }
}

double TransportOperator::inflow(int side, int k, int m, int node) const {
    const int N = space_->gauss().size();
    return inflow_[side][(static_cast<std::size_t>(k) * space_->mesh().nmu() + m) * N * N + node];
}

std::vector<double> TransportOperator::efield_nodes(const PotentialState& potential) const {
    const auto& mesh = space_->mesh();
    const auto& g = space_->gauss();
    if (potential.nx() != mesh.nx()) throw ConfigError("potential grid does not match the mesh");
    std::vector<double> E;
    E.reserve(static_cast<std::size_t>(mesh.nx()) * g.size());
    for (int i = 0; i < mesh.nx(); ++i)
        for (double xi : g.nodes) E.push_back(potential.efield_local(i, mesh.dx(i) * xi));
    return E;
}

void TransportOperator::assemble_weak(const Field& field, const PotentialState& potential, std::vector<double>& weak,
                                      int threads) const {
    const DgSpace& sp = *space_;
    const auto& mesh = sp.mesh();
    const auto& g = sp.gauss();
    const int N = g.size();
    const int nb = sp.num_basis();
    const double q = settings_.q;
    const bool periodic = settings_.boundary == BoundaryMode::Periodic;
    const auto E = efield_nodes(potential);
    const auto& vol = sp.volume_nodes();
    const auto& vw = sp.volume_weights();
    const auto& Dx = sp.volume_dphi(Direction::X);
    const auto& Dp = sp.volume_dphi(Direction::P);
    const auto& Dm = sp.volume_dphi(Direction::Mu);
    const auto& fw = sp.face_weights();
    weak.resize(sp.num_coeffs(), 0.0);

    parallel_for(mesh.num_cells(), threads, [&](int c) {
        const CellIndex ci = mesh.unflat(c);
        const auto u = field.cell(c);
        double* R = weak.data() + static_cast<std::size_t>(c) * nb;
        const double hx = mesh.dx(ci.i), hp = mesh.dp(ci.k), hm = mesh.dmu(ci.m);
        const double p_lo = mesh.p_edges()[ci.k], p_hi = mesh.p_edges()[ci.k + 1];
        const double mu_lo = mesh.mu_edges()[ci.m], mu_hi = mesh.mu_edges()[ci.m + 1];
        const double* Ei = E.data() + static_cast<std::size_t>(ci.i) * N;
        const double* vel = vel_nodes_.data() + static_cast<std::size_t>(ci.k) * N;
        const double* pn = p_nodes_.data() + static_cast<std::size_t>(ci.k) * N;

        // Volume terms: ∫ H f ∂g with weights p², p², p in x, p, μ.
        for (int n = 0; n < vol.num_points; ++n) {
            const int qx = n / (N * N), r = (n / N) % N, s = n % N;
            const double f = vol.value(u, n);
            const double p = pn[r];
            const double mu = mu_lo + hm * g.nodes[s];
            const double w = vw[n] * hx * hp * hm * f;
            const double gx = w * TransportCoeffs::hx(mu, vel[r]) * p * p / hx;
            const double gp = w * p * p * TransportCoeffs::hp(q, Ei[qx], mu) / hp;
            const double gm = w * (1.0 - mu * mu) * TransportCoeffs::hmu(q, Ei[qx]) * p / hm;
            const std::size_t row = static_cast<std::size_t>(n) * nb;
            for (int b = 0; b < nb; ++b) R[b] += gx * Dx[row + b] + gp * Dp[row + b] + gm * Dm[row + b];
        }

        // x faces; nodes (p_r, μ_s).
        {
            const auto& lo = sp.face_nodes(Direction::X, 0);
            const auto& hi = sp.face_nodes(Direction::X, 1);
            const bool has_left = periodic || ci.i > 0;
            const bool has_right = periodic || ci.i < mesh.nx() - 1;
            const int il = (ci.i + mesh.nx() - 1) % mesh.nx();
            const int ir = (ci.i + 1) % mesh.nx();
            const auto ul = field.cell(mesh.flat(il, ci.k, ci.m));
            const auto ur = field.cell(mesh.flat(ir, ci.k, ci.m));
            for (int n = 0; n < N * N; ++n) {
                const int r = n / N, s = n % N;
                const double p = pn[r];
                const double mu = mu_lo + hm * g.nodes[s];
                const double w = fw[n] * hp * hm * p * p;
                // Upper face x_{i+}: f⁻ = own, f⁺ = right neighbour.
                const double own_hi = hi.value(u, n);
                const double nb_hi = has_right ? lo.value(ur, n) : inflow(1, ci.k, ci.m, n);
                const double F_hi = upwind_flux_x(mu, vel[r], own_hi, nb_hi);
                // Lower face x_{i-}: f⁻ = left neighbour, f⁺ = own.
                const double own_lo = lo.value(u, n);
                const double nb_lo = has_left ? hi.value(ul, n) : inflow(0, ci.k, ci.m, n);
                const double F_lo = upwind_flux_x(mu, vel[r], nb_lo, own_lo);
                const std::size_t rh = static_cast<std::size_t>(n) * nb;
                for (int b = 0; b < nb; ++b) R[b] += w * (F_lo * lo.phi[rh + b] - F_hi * hi.phi[rh + b]);
            }
        }

        // p faces; nodes (x_q, μ_s), geometric factor p²_{k±}. Zero at p = 0,
        // zero inflow at p_max.
        {
            const auto& lo = sp.face_nodes(Direction::P, 0);
            const auto& hi = sp.face_nodes(Direction::P, 1);
            const bool top = ci.k == mesh.np() - 1;
            const bool bottom = ci.k == 0;
            for (int n = 0; n < N * N; ++n) {
                const int qx = n / N, s = n % N;
                const double mu = mu_lo + hm * g.nodes[s];
                const double w = fw[n] * hx * hm;
                const std::size_t rh = static_cast<std::size_t>(n) * nb;
                const double own_hi = hi.value(u, n);
                const double nb_hi = top ? 0.0 : lo.value(field.cell(mesh.flat(ci.i, ci.k + 1, ci.m)), n);
                const double F_hi = p_hi * p_hi * upwind_flux_p(Ei[qx], mu, own_hi, nb_hi, q);
                double F_lo = 0.0;
                if (!bottom) {
                    const double own_lo = lo.value(u, n);
                    const double nb_lo = hi.value(field.cell(mesh.flat(ci.i, ci.k - 1, ci.m)), n);
                    F_lo = p_lo * p_lo * upwind_flux_p(Ei[qx], mu, nb_lo, own_lo, q);
                }
                for (int b = 0; b < nb; ++b) R[b] += w * (F_lo * lo.phi[rh + b] - F_hi * hi.phi[rh + b]);
            }
        }

        // μ faces; nodes (x_q, p_r), factor (1 - μ²_{m±}) and weight p. Zero at μ = ±1.
        {
            const auto& lo = sp.face_nodes(Direction::Mu, 0);
            const auto& hi = sp.face_nodes(Direction::Mu, 1);
            const bool top = ci.m == mesh.nmu() - 1;
            const bool bottom = ci.m == 0;
            const double gh = 1.0 - mu_hi * mu_hi;
            const double gl = 1.0 - mu_lo * mu_lo;
            for (int n = 0; n < N * N; ++n) {
                const int qx = n / N, r = n % N;
                const double w = fw[n] * hx * hp * pn[r];
                const std::size_t rh = static_cast<std::size_t>(n) * nb;
                double F_hi = 0.0, F_lo = 0.0;
                if (!top) {
                    const double own = hi.value(u, n);
                    const double nbv = lo.value(field.cell(mesh.flat(ci.i, ci.k, ci.m + 1)), n);
                    F_hi = gh * upwind_flux_mu(Ei[qx], own, nbv, q);
                }
                if (!bottom) {
                    const double own = lo.value(u, n);
                    const double nbv = hi.value(field.cell(mesh.flat(ci.i, ci.k, ci.m - 1)), n);
                    F_lo = gl * upwind_flux_mu(Ei[qx], nbv, own, q);
                }
                for (int b = 0; b < nb; ++b) R[b] += w * (F_lo * lo.phi[rh + b] - F_hi * hi.phi[rh + b]);
            }
        }
    });
}

double TransportOperator::boundary_mass_rate(const Field& field, const PotentialState& potential) const {
    const DgSpace& sp = *space_;
    const auto& mesh = sp.mesh();
    const auto& g = sp.gauss();
    const int N = g.size();
    const auto& fw = sp.face_weights();
    double rate = 0.0;
    if (settings_.boundary == BoundaryMode::Diode) {
        const auto& lo = sp.face_nodes(Direction::X, 0);
        const auto& hi = sp.face_nodes(Direction::X, 1);
        for (int k = 0; k < mesh.np(); ++k)
            for (int m = 0; m < mesh.nmu(); ++m) {
                const auto u0 = field.cell(mesh.flat(0, k, m));
                const auto uL = field.cell(mesh.flat(mesh.nx() - 1, k, m));
                for (int n = 0; n < N * N; ++n) {
                    const int r = n / N, s = n % N;
                    const double p = p_nodes_[k * N + r];
                    const double mu = mesh.mu_edges()[m] + mesh.dmu(m) * g.nodes[s];
                    const double w = fw[n] * mesh.dp(k) * mesh.dmu(m) * p * p;
                    const double v = vel_nodes_[k * N + r];
                    rate += w * upwind_flux_x(mu, v, inflow(0, k, m, n), lo.value(u0, n));
                    rate -= w * upwind_flux_x(mu, v, hi.value(uL, n), inflow(1, k, m, n));
                }
            }
    }
    const auto E = efield_nodes(potential);
    const auto& hi = sp.face_nodes(Direction::P, 1);
    const int k = mesh.np() - 1;
    const double pm = mesh.p_max();
    for (int i = 0; i < mesh.nx(); ++i)
        for (int m = 0; m < mesh.nmu(); ++m) {
            const auto u = field.cell(mesh.flat(i, k, m));
            for (int n = 0; n < N * N; ++n) {
                const int qx = n / N, s = n % N;
                const double mu = mesh.mu_edges()[m] + mesh.dmu(m) * g.nodes[s];
                const double w = fw[n] * mesh.dx(i) * mesh.dmu(m);
                rate -= w * pm * pm * upwind_flux_p(E[i * N + qx], mu, hi.value(u, n), 0.0, settings_.q);
            }
        }
    return rate;
}

Residual TransportOperator::assemble(const Field& field, const PotentialState& potential, int threads) const {
    Residual res(space_);
    std::vector<double>& weak = res.rate.coeffs();
    std::fill(weak.begin(), weak.end(), 0.0);
    assemble_weak(field, potential, weak, threads);
    apply_inverse_mass(*space_, weak, &res.cell_average_rate);
    res.mass_rate = boundary_mass_rate(field, potential);
    return res;
}

double TransportOperator::gamma_T(const Field& field, const PotentialState& potential, int cell) const {
    const DgSpace& sp = *space_;
    const auto& mesh = sp.mesh();
    const auto& g = sp.gauss();
    const int N = g.size();
    const int NL = sp.lobatto().size();
    const auto& fw = sp.face_weights();
    const CellIndex ci = mesh.unflat(cell);
    const bool periodic = settings_.boundary == BoundaryMode::Periodic;
    const double q = settings_.q;
    const double hx = mesh.dx(ci.i), hp = mesh.dp(ci.k), hm = mesh.dmu(ci.m);
    const double mu_lo = mesh.mu_edges()[ci.m], mu_hi = mesh.mu_edges()[ci.m + 1];
    const double p_lo = mesh.p_edges()[ci.k], p_hi = mesh.p_edges()[ci.k + 1];
    const auto E = efield_nodes(potential);
    // Traces taken from the Lobatto end points of the directional node sets.
    auto lower = [&](int c, Direction d, int n) { return nodal_values(field, c, d).values[n]; };
    auto upper = [&](int c, Direction d, int n) { return nodal_values(field, c, d).values[(NL - 1) * N * N + n]; };

    double balance = 0.0; // outflow minus inflow
    for (int n = 0; n < N * N; ++n) {
        const int a = n / N, b = n % N;
        // x faces: (p_a, μ_b).
        {
            const double p = mesh.p_edges()[ci.k] + hp * g.nodes[a];
            const double mu = mu_lo + hm * g.nodes[b];
            const double v = velocity(band_, p);
            const double w = fw[n] * hp * hm * p * p;
            const int ir = (ci.i + 1) % mesh.nx(), il = (ci.i + mesh.nx() - 1) % mesh.nx();
            const double right = (periodic || ci.i < mesh.nx() - 1) ? lower(mesh.flat(ir, ci.k, ci.m), Direction::X, n)
                                                                     : inflow(1, ci.k, ci.m, n);
            const double left = (periodic || ci.i > 0) ? upper(mesh.flat(il, ci.k, ci.m), Direction::X, n)
                                                       : inflow(0, ci.k, ci.m, n);
            balance += w * upwind_flux_x(mu, v, upper(cell, Direction::X, n), right);
            balance -= w * upwind_flux_x(mu, v, left, lower(cell, Direction::X, n));
        }
        // p faces: (x_a, μ_b).
        {
            const double Ex = E[ci.i * N + a];
            const double mu = mu_lo + hm * g.nodes[b];
            const double w = fw[n] * hx * hm;
            const double above = ci.k + 1 < mesh.np() ? lower(mesh.flat(ci.i, ci.k + 1, ci.m), Direction::P, n) : 0.0;
            balance += w * p_hi * p_hi * upwind_flux_p(Ex, mu, upper(cell, Direction::P, n), above, q);
            if (ci.k > 0) {
                const double below = upper(mesh.flat(ci.i, ci.k - 1, ci.m), Direction::P, n);
                balance -= w * p_lo * p_lo * upwind_flux_p(Ex, mu, below, lower(cell, Direction::P, n), q);
            }
        }
        // μ faces: (x_a, p_b).
        {
            const double Ex = E[ci.i * N + a];
            const double p = p_lo + hp * g.nodes[b];
            const double w = fw[n] * hx * hp * p;
            if (ci.m + 1 < mesh.nmu()) {
                const double above = lower(mesh.flat(ci.i, ci.k, ci.m + 1), Direction::Mu, n);
                balance += w * (1.0 - mu_hi * mu_hi) * upwind_flux_mu(Ex, upper(cell, Direction::Mu, n), above, q);
            }
            if (ci.m > 0) {
                const double below = upper(mesh.flat(ci.i, ci.k, ci.m - 1), Direction::Mu, n);
                balance -= w * (1.0 - mu_lo * mu_lo) * upwind_flux_mu(Ex, below, lower(cell, Direction::Mu, n), q);
            }
        }
    }
    return -balance / mesh.cell_volume(ci);
}

Residual assemble_transport(const TransportOperator& op, const Field& field, const PotentialState& potential) {
    return op.assemble(field, potential);
}

double gamma_T(const TransportOperator& op, const Field& field, const PotentialState& potential, int cell) {
    return op.gamma_T(field, potential, cell);
}

} // namespace bpdg
