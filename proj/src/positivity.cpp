#include "bpdg/positivity.hpp"

#include "bpdg/errors.hpp"
#include "bpdg/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace bpdg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double max_abs_efield(const PotentialState& pot, int i, const QuadRule& lobatto, const QuadRule& gauss) {
    double e = 0.0;
    for (double s : lobatto.nodes) e = std::max(e, std::abs(pot.efield_local(i, s)));
    for (double s : gauss.nodes) e = std::max(e, std::abs(pot.efield_local(i, s)));
    return e;
}

} // namespace

TransportCflCoeffs transport_cfl_coefficients(const PhaseMesh& mesh, const BandModel& band,
                                              const PotentialState& potential, const QuadRule& lobatto,
                                              const QuadRule& gauss, double q) {
    if (potential.nx() != mesh.nx()) throw ConfigError("transport_cfl: potential does not match the mesh");
    const double w_hat = lobatto.weights.back();
    TransportCflCoeffs out;
    out.B = {kInf, kInf, kInf};

    double emax_global = 0.0;
    std::vector<double> emax(mesh.nx());
    for (int i = 0; i < mesh.nx(); ++i) {
        emax[i] = q * max_abs_efield(potential, i, lobatto, gauss);
        emax_global = std::max(emax_global, emax[i]);
    }

    for (int k = 0; k < mesh.np(); ++k) {
        const double p_lo = mesh.p_edges()[k];
        double vmax = 0.0;
        for (double t : lobatto.nodes) vmax = std::max(vmax, velocity(band, p_lo + mesh.dp(k) * t));
        const double p_mu = p_lo > 0.0 ? p_lo : mesh.dp(k) * gauss.nodes.front();
        for (int m = 0; m < mesh.nmu(); ++m) {
            const double mu_lo = mesh.mu_edges()[m];
            const double mu_hi = mesh.mu_edges()[m + 1];
            const double mu_abs = std::max(std::abs(mu_lo), std::abs(mu_hi));
            const double sin2 = std::max(1.0 - mu_lo * mu_lo, 1.0 - mu_hi * mu_hi);
            for (int i = 0; i < mesh.nx(); ++i) {
                const double ax = vmax * mu_abs;
                if (ax > 0.0) out.B[0] = std::min(out.B[0], w_hat * mesh.dx(i) / ax);
                const double ap = emax[i] * mu_abs;
                if (ap > 0.0) out.B[1] = std::min(out.B[1], w_hat * mesh.dp(k) / ap);
                const double am = emax[i] * sin2;
                if (am > 0.0) out.B[2] = std::min(out.B[2], w_hat * mesh.dmu(m) * p_mu / am);
            }
        }
    }
    return out;
}

TransportCflCoeffs transport_cfl_coefficients(const DgSpace& space, const BandModel& band,
                                              const PotentialState& potential, double q) {
    return transport_cfl_coefficients(space.mesh(), band, potential, space.lobatto(), space.gauss(), q);
}

std::array<double, 3> transport_cfl(const TransportCflCoeffs& coeffs, double alpha, const std::array<double, 3>& s) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("transport_cfl: alpha must lie in (0,1)");
    double sum = 0.0;
    for (double v : s) {
        if (!(v >= 0.0)) throw ConfigError("transport_cfl: negative split weight");
        sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-12) throw ConfigError("transport_cfl: split weights must sum to 1");
    std::array<double, 3> out{};
    for (int l = 0; l < 3; ++l) {
        if (std::isinf(coeffs.B[l])) {
            out[l] = kInf;
        } else if (s[l] == 0.0) {
            throw ConfigError("transport_cfl: zero split weight for a direction with advection");
        } else {
            out[l] = alpha * s[l] * coeffs.B[l];
        }
    }
    return out;
}

std::array<double, 3> transport_cfl(const PhaseMesh& mesh, const BandModel& band, const PotentialState& potential,
                                    const QuadRule& lobatto, const QuadRule& gauss, double alpha,
                                    const std::array<double, 3>& s, double q) {
    return transport_cfl(transport_cfl_coefficients(mesh, band, potential, lobatto, gauss, q), alpha, s);
}

double collision_cfl_coefficient(std::span<const double> f, std::span<const double> Q) {
    if (f.size() != Q.size()) throw DomainError("collision_cfl: size mismatch");
    double b = kInf;
    for (std::size_t n = 0; n < f.size(); ++n) {
        if (!(Q[n] < 0.0)) continue;
        if (f[n] <= 0.0) {
            std::ostringstream msg;
            msg << "collision_cfl: f = " << f[n] << " with Q = " << Q[n] << " at node " << n;
            throw StallError(msg.str());
        }
        b = std::min(b, f[n] / -Q[n]);
    }
    return b;
}

double collision_cfl_coefficient(const CollisionOperator& op, const CollisionNodeValues& nodes) {
    try {
        return collision_cfl_coefficient(nodes.f, nodes.Q);
    } catch (const StallError&) {
        const auto& mesh = op.space().mesh();
        for (std::size_t n = 0; n < nodes.f.size(); ++n) {
            if (nodes.Q[n] < 0.0 && nodes.f[n] <= 0.0) {
                const int cell = static_cast<int>(n / nodes.nodes_per_cell);
                const CellIndex c = mesh.unflat(cell);
                const auto pt = op.node_point(c, static_cast<int>(n % nodes.nodes_per_cell));
                std::ostringstream msg;
                msg << "collision bound is zero in cell (i=" << c.i << ", k=" << c.k << ", m=" << c.m << ") at (x=" << pt[0]
                    << ", p=" << pt[1] << ", mu=" << pt[2] << "): f = " << nodes.f[n] << ", Q = " << nodes.Q[n];
                throw StallError(msg.str());
            }
        }
        throw;
    }
}

double collision_cfl(std::span<const double> f, std::span<const double> Q, double alpha) {
    if (!(alpha >= 0.0 && alpha < 1.0)) throw ConfigError("collision_cfl: alpha must lie in [0,1)");
    return (1.0 - alpha) * collision_cfl_coefficient(f, Q);
}

StepControl choose_split(const TransportCflCoeffs& transport, double B_c, double safety) {
    if (!(safety > 0.0 && safety <= 1.0)) throw ConfigError("choose_split: safety must lie in (0,1]");
    StepControl sc;
    sc.safety = safety;
    double inv = 0.0;
    for (double b : transport.B) {
        if (!(b >= 0.0)) throw DomainError("choose_split: negative transport coefficient");
        if (b == 0.0) throw StallError("choose_split: a transport bound is zero");
        if (!std::isinf(b)) inv += 1.0 / b;
    }
    if (!(B_c >= 0.0)) throw DomainError("choose_split: negative collision coefficient");
    if (B_c == 0.0) throw StallError("choose_split: the collision bound is zero");
    const double B_star = inv > 0.0 ? 1.0 / inv : kInf;

    if (std::isinf(B_star) && std::isinf(B_c)) {
        sc.alpha = 0.5;
    } else if (std::isinf(B_c)) {
        sc.alpha = kAlphaMax;
    } else if (std::isinf(B_star)) {
        sc.alpha = kAlphaMin;
    } else {
        sc.alpha = std::clamp(B_c / (B_star + B_c), kAlphaMin, kAlphaMax);
    }
    if (inv > 0.0) {
        for (int l = 0; l < 3; ++l) sc.s[l] = std::isinf(transport.B[l]) ? 0.0 : B_star / transport.B[l];
    }
    const auto bounds = transport_cfl(transport, sc.alpha, sc.s);
    sc.dt_transport_x = bounds[0];
    sc.dt_transport_p = bounds[1];
    sc.dt_transport_mu = bounds[2];
    sc.dt_collision = (1.0 - sc.alpha) * B_c;
    const double raw = std::min({bounds[0], bounds[1], bounds[2], sc.dt_collision});
    sc.dt_accepted = safety * raw;
    if (!(sc.dt_accepted > 0.0)) throw StallError("choose_split: accepted time step is zero");
    return sc;
}

LimiterReport apply_limiter(Field& field, int threads) {
    const DgSpace& space = field.space();
    const NodeTable& nodes = space.positivity_nodes();
    const int nc = space.num_cells();
    const int nb = space.num_basis();
    std::vector<double> theta(nc, 1.0);
    std::vector<double> mins(nc, 0.0);
    std::vector<char> bad(nc, 0);

    auto node_min = [&](std::span<const double> c) {
        double m = std::numeric_limits<double>::infinity();
        for (int n = 0; n < nodes.num_points; ++n) m = std::min(m, nodes.value(c, n));
        return m;
    };

    parallel_for(nc, threads, [&](int c) {
        const double avg = cell_average(field, c);
        auto u = field.cell(c);
        const double m = node_min(u);
        mins[c] = m;
        if (avg < -1e-12) {
            bad[c] = 1;
            return;
        }
        if (m >= 0.0) return;
        if (avg <= 0.0) {
            std::fill(u.begin(), u.end(), 0.0);
            theta[c] = 0.0;
            return;
        }
        std::vector<double> orig(u.begin(), u.end());
        double t = std::min(1.0, avg / (avg - m));
        for (int attempt = 0; attempt < 8; ++attempt) {
            for (int b = 0; b < nb; ++b) u[b] = t * orig[b];
            u[0] += (1.0 - t) * avg;
            if (node_min(u) >= 0.0) break;
            t = attempt < 7 ? t * (1.0 - 1e-12 * (1 << attempt)) : 0.0;
            if (t == 0.0) {
                std::fill(u.begin(), u.end(), 0.0);
                u[0] = avg;
            }
        }
        theta[c] = t;
    });

    for (int c = 0; c < nc; ++c) {
        if (bad[c]) {
            const CellIndex ci = space.mesh().unflat(c);
            std::ostringstream msg;
            msg << "negative cell average " << cell_average(field, c) << " in cell (i=" << ci.i << ", k=" << ci.k
                << ", m=" << ci.m << ")";
            throw PositivityError(msg.str());
        }
    }

    LimiterReport rep;
    rep.min_node_before = nc > 0 ? *std::min_element(mins.begin(), mins.end()) : 0.0;
    for (int c = 0; c < nc; ++c) {
        if (theta[c] < 1.0) {
            ++rep.limited_cells;
            rep.min_theta = std::min(rep.min_theta, theta[c]);
        }
    }
    return rep;
}

} // namespace bpdg
