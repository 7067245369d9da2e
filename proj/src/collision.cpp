#include "bpdg/collision.hpp"

#include "bpdg/errors.hpp"
#include "bpdg/legendre.hpp"
#include "bpdg/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace bpdg {

namespace {
constexpr double kPi = std::numbers::pi;
}

double PhononParams::bose_einstein(double hbar_omega) { return 1.0 / std::expm1(hbar_omega); }

PhononParams PhononParams::with_detailed_balance(double hbar_omega, double K, double c0) {
    return {hbar_omega, bose_einstein(hbar_omega), K, c0, true};
}

double PhononParams::c(int j) const {
    switch (j) {
    case -1: return n_ph * K;
    case 0: return c0;
    case 1: return (n_ph + 1.0) * K;
    default: throw DomainError("PhononParams::c: j must be -1, 0 or 1");
    }
}

void PhononParams::validate() const {
    if (!(hbar_omega > 0.0)) throw ConfigError("phonon: hbar_omega must be positive");
    if (!(n_ph >= 0.0) || !(K >= 0.0) || !(c0 >= 0.0)) throw ConfigError("phonon: n_ph, K and c0 must be non-negative");
    if (detailed_balance && std::abs(n_ph - bose_einstein(hbar_omega)) > 1e-12 * std::max(1.0, n_ph))
        throw ConfigError("phonon: n_ph violates detailed balance");
}

double collision_frequency(const BandModel& band, const PhononParams& params, const EnergyCutoff& cutoff, double eps) {
    if (!(eps >= 0.0)) throw DomainError("collision_frequency: negative energy");
    double nu = 0.0;
    for (int j = -1; j <= 1; ++j) {
        const double e = eps - j * params.hbar_omega;
        if (params.c(j) != 0.0 && cutoff.admits(e)) nu += params.c(j) * 4.0 * kPi * dos_factor(band, e);
    }
    return nu;
}

MuIntegral mu_integral(const Field& field) {
    return [&field](double x, double p) {
        const auto& mesh = field.mesh();
        const auto& sp = field.space();
        const int K = sp.basis_per_dim();
        const int i = mesh.locate_x(x);
        const int k = mesh.locate_p(p);
        const double xi = std::clamp((x - mesh.x_edges()[i]) / mesh.dx(i), 0.0, 1.0);
        const double eta = std::clamp((p - mesh.p_edges()[k]) / mesh.dp(k), 0.0, 1.0);
        double s = 0.0;
        for (int m = 0; m < mesh.nmu(); ++m) {
            const auto c = field.cell(mesh.flat(i, k, m));
            double cell = 0.0;
            for (int a = 0; a < K; ++a)
                for (int b = 0; b < K; ++b)
                    cell += c[DgSpace::basis_index(a, b, 0, K)] * legendre_phi(a, xi) * legendre_phi(b, eta);
            s += mesh.dmu(m) * cell;
        }
        return s;
    };
}

MuIntegral mu_integral(const PhaseFunction& f, int cells, int order) {
    const QuadRule rule = quad_rule(QuadKind::Gauss, order);
    return [f, cells, rule](double x, double p) {
        double s = 0.0;
        const double h = 2.0 / cells;
        for (int m = 0; m < cells; ++m)
            for (int j = 0; j < rule.size(); ++j) s += h * rule.weights[j] * f(x, p, -1.0 + h * (m + rule.nodes[j]));
        return s;
    };
}

double gain(const MuIntegral& f_mu, const BandModel& band, const PhononParams& params, const EnergyCutoff& cutoff,
            double p_max, double x, double p) {
    const double eps = energy(band, p);
    double g = 0.0;
    for (int j = -1; j <= 1; ++j) {
        const double e = eps + j * params.hbar_omega;
        if (params.c(j) == 0.0 || !cutoff.admits(e)) continue;
        double ps = momentum_of_energy(band, e);
        if (ps > p_max) {
            if (ps > p_max * (1.0 + 1e-12)) throw InternalError("gain: shifted momentum beyond p_max");
            ps = p_max;
        }
        g += 2.0 * kPi * params.c(j) * dos_factor(band, e) * f_mu(x, ps);
    }
    return g;
}

double gain(const Field& field, const BandModel& band, const PhononParams& params, const EnergyCutoff& cutoff,
            double x, double p) {
    return gain(mu_integral(field), band, params, cutoff, field.mesh().p_max(), x, p);
}

double q_operator(const Field& field, const BandModel& band, const PhononParams& params, const EnergyCutoff& cutoff,
                  double x, double p, double mu) {
    return gain(field, band, params, cutoff, x, p) -
           collision_frequency(band, params, cutoff, energy(band, p)) * evaluate_at(field, x, p, mu);
}

double q_operator(const PhaseFunction& f, const BandModel& band, const PhononParams& params,
                  const EnergyCutoff& cutoff, double p_max, double x, double p, double mu) {
    return gain(mu_integral(f), band, params, cutoff, p_max, x, p) -
           collision_frequency(band, params, cutoff, energy(band, p)) * f(x, p, mu);
}

CollisionOperator::CollisionOperator(SpacePtr space, BandModel band, PhononParams params, int quad_order)
    : space_(std::move(space)), band_(band), params_(params) {
    band_.validate();
    params_.validate();
    const auto& mesh = space_->mesh();
    cutoff_ = EnergyCutoff::from_band(band_, mesh.p_max());
    rule_ = quad_rule(QuadKind::Gauss, quad_order > 0 ? quad_order : space_->degree() + 2);
    const int N = rule_.size();
    const int K = space_->basis_per_dim();

    std::vector<std::array<double, 3>> pts;
    for (int q = 0; q < N; ++q)
        for (int r = 0; r < N; ++r)
            for (int s = 0; s < N; ++s) {
                pts.push_back({rule_.nodes[q], rule_.nodes[r], rule_.nodes[s]});
                weights_.push_back(rule_.weights[q] * rule_.weights[r] * rule_.weights[s]);
            }
    table_.num_points = static_cast<int>(pts.size());
    table_.num_basis = K * K * K;
    table_.points = pts;
    table_.phi.resize(pts.size() * table_.num_basis);
    for (std::size_t n = 0; n < pts.size(); ++n)
        for (int a = 0; a < K; ++a)
            for (int b = 0; b < K; ++b)
                for (int c = 0; c < K; ++c)
                    table_.phi[n * table_.num_basis + DgSpace::basis_index(a, b, c, K)] =
                        legendre_phi(a, pts[n][0]) * legendre_phi(b, pts[n][1]) * legendre_phi(c, pts[n][2]);

    for (int k = 0; k < mesh.np(); ++k)
        for (int r = 0; r < N; ++r) {
            const double p = mesh.p_edges()[k] + mesh.dp(k) * rule_.nodes[r];
            const double eps = energy(band_, p);
            nu_.push_back(collision_frequency(band_, params_, cutoff_, eps));
            for (int j = -1; j <= 1; ++j) {
                Shift sh;
                const double e = eps + j * params_.hbar_omega;
                if (params_.c(j) != 0.0 && cutoff_.admits(e)) {
                    double ps = momentum_of_energy(band_, e);
                    if (ps > mesh.p_max()) {
                        if (ps > mesh.p_max() * (1.0 + 1e-12))
                            throw InternalError("collision: shifted momentum beyond p_max");
                        ps = mesh.p_max();
                    }
                    sh.cell = mesh.locate_p(ps);
                    sh.eta = std::clamp((ps - mesh.p_edges()[sh.cell]) / mesh.dp(sh.cell), 0.0, 1.0);
                    sh.weight = 2.0 * kPi * params_.c(j) * dos_factor(band_, e);
                }
                shifts_.push_back(sh);
            }
        }
}

std::array<double, 3> CollisionOperator::node_point(CellIndex c, int n) const {
    return space_->physical_point(c, table_.points[n]);
}

double CollisionOperator::node_measure(CellIndex c, int n) const {
    const auto& mesh = space_->mesh();
    const double p = mesh.p_edges()[c.k] + mesh.dp(c.k) * table_.points[n][1];
    return weights_[n] * mesh.dx(c.i) * mesh.dp(c.k) * mesh.dmu(c.m) * p * p;
}

CollisionNodeValues CollisionOperator::node_values(const Field& field, int threads) const {
    const auto& mesh = space_->mesh();
    const int N = rule_.size();
    const int K = space_->basis_per_dim();
    const int npts = table_.num_points;
    CollisionNodeValues out;
    out.nodes_per_cell = npts;
    out.f.assign(static_cast<std::size_t>(mesh.num_cells()) * npts, 0.0);
    out.Q.assign(out.f.size(), 0.0);

    // φ_a at the x nodes.
    std::vector<double> phix(static_cast<std::size_t>(N) * K);
    for (int q = 0; q < N; ++q)
        for (int a = 0; a < K; ++a) phix[q * K + a] = legendre_phi(a, rule_.nodes[q]);

    parallel_for(mesh.nx(), threads, [&](int i) {
        // μ-integrated (a, b) modes per p cell: S[k][a][b] = Σ_m Δμ_m c_{a b 0}.
        std::vector<double> S(static_cast<std::size_t>(mesh.np()) * K * K, 0.0);
        for (int k = 0; k < mesh.np(); ++k)
            for (int m = 0; m < mesh.nmu(); ++m) {
                const auto c = field.cell(mesh.flat(i, k, m));
                for (int a = 0; a < K; ++a)
                    for (int b = 0; b < K; ++b)
                        S[(static_cast<std::size_t>(k) * K + a) * K + b] += mesh.dmu(m) * c[DgSpace::basis_index(a, b, 0, K)];
            }
        std::vector<double> gainv(static_cast<std::size_t>(N) * N);
        for (int k = 0; k < mesh.np(); ++k) {
            if (active()) {
                for (int q = 0; q < N; ++q)
                    for (int r = 0; r < N; ++r) {
                        double g = 0.0;
                        for (int j = 0; j < 3; ++j) {
                            const Shift& sh = shifts_[(static_cast<std::size_t>(k) * N + r) * 3 + j];
                            if (sh.cell < 0) continue;
                            double v = 0.0;
                            for (int a = 0; a < K; ++a) {
                                double inner = 0.0;
                                for (int b = 0; b < K; ++b)
                                    inner += S[(static_cast<std::size_t>(sh.cell) * K + a) * K + b] * legendre_phi(b, sh.eta);
                                v += phix[q * K + a] * inner;
                            }
                            g += sh.weight * v;
                        }
                        gainv[q * N + r] = g;
                    }
            }
            for (int m = 0; m < mesh.nmu(); ++m) {
                const int c = mesh.flat(i, k, m);
                const auto u = field.cell(c);
                const std::size_t base = static_cast<std::size_t>(c) * npts;
                for (int n = 0; n < npts; ++n) {
                    const int q = n / (N * N), r = (n / N) % N;
                    const double f = table_.value(u, n);
                    out.f[base + n] = f;
                    out.Q[base + n] = active() ? gainv[q * N + r] - nu_[static_cast<std::size_t>(k) * N + r] * f : 0.0;
                }
            }
        }
    });
    return out;
}

void CollisionOperator::assemble_weak(const CollisionNodeValues& nodes, std::vector<double>& weak, int threads) const {
    const auto& mesh = space_->mesh();
    const int nb = space_->num_basis();
    const int npts = table_.num_points;
    weak.resize(space_->num_coeffs(), 0.0);
    parallel_for(mesh.num_cells(), threads, [&](int c) {
        const CellIndex ci = mesh.unflat(c);
        double* R = weak.data() + static_cast<std::size_t>(c) * nb;
        for (int n = 0; n < npts; ++n) {
            const double w = node_measure(ci, n) * nodes.Q[static_cast<std::size_t>(c) * npts + n];
            const double* row = table_.phi.data() + static_cast<std::size_t>(n) * nb;
            for (int b = 0; b < nb; ++b) R[b] += w * row[b];
        }
    });
}

double CollisionOperator::mass_residual(const CollisionNodeValues& nodes) const {
    const auto& mesh = space_->mesh();
    const int npts = table_.num_points;
    double s = 0.0;
    for (int c = 0; c < mesh.num_cells(); ++c) {
        const CellIndex ci = mesh.unflat(c);
        for (int n = 0; n < npts; ++n) s += node_measure(ci, n) * nodes.Q[static_cast<std::size_t>(c) * npts + n];
    }
    return s;
}

Residual CollisionOperator::assemble(const Field& field, int threads) const {
    Residual res(space_);
    const auto nodes = node_values(field, threads);
    auto& weak = res.rate.coeffs();
    std::fill(weak.begin(), weak.end(), 0.0);
    assemble_weak(nodes, weak, threads);
    apply_inverse_mass(*space_, weak, &res.cell_average_rate);
    res.mass_rate = mass_residual(nodes);
    return res;
}

Residual assemble_collision(const CollisionOperator& op, const Field& field) { return op.assemble(field); }

double mass_residual(const CollisionOperator& op, const Field& field) { return op.mass_residual(op.node_values(field)); }

} // namespace bpdg
