#include "bpdg/legendre.hpp"
#include "bpdg/transport.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace bpdg;
using bpdg::testing::random_field;

namespace {

PotentialState linear_potential(const PhaseMesh& mesh, const std::vector<std::array<double, 2>>& ab) {
    PotentialState s = PotentialState::zero(mesh.x_edges());
    for (int i = 0; i < mesh.nx(); ++i) s.E[i] = Polynomial{{ab[i][0], ab[i][1]}};
    return s;
}

PotentialState random_potential(const PhaseMesh& mesh, std::mt19937_64& rng, double scale = 1.0) {
    std::uniform_real_distribution<double> u(-scale, scale);
    std::vector<std::array<double, 2>> ab(mesh.nx());
    for (auto& v : ab) v = {u(rng), u(rng)};
    return linear_potential(mesh, ab);
}

double residual_mass_rate(const Residual& r, const PhaseMesh& mesh) {
    double s = 0.0;
    for (int c = 0; c < mesh.num_cells(); ++c) s += mesh.cell_volume(mesh.unflat(c)) * r.cell_average_rate[c];
    return s;
}

TransportSettings diode_settings() {
    TransportSettings s;
    s.boundary = BoundaryMode::Diode;
    s.inflow_left = [](double p, double) { return std::exp(-p * p / 2); };
    s.inflow_right = [](double p, double mu) { return 0.5 * std::exp(-p * p / 2) * (1.0 + 0.2 * mu); };
    return s;
}

} // namespace

TEST_CASE("upwind flux examples") {
    CHECK(upwind_flux_x(0.5, 1.0, 2.0, 7.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(upwind_flux_x(-0.5, 1.0, 2.0, 7.0) == doctest::Approx(-3.5).epsilon(1e-15));
    CHECK(upwind_flux_x(0.0, 1.0, 2.0, 7.0) == 0.0);
    CHECK(upwind_flux_p(-1.0, 0.5, 2.0, 7.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(upwind_flux_p(1.0, 0.5, 2.0, 7.0) == doctest::Approx(-3.5).epsilon(1e-15));
    CHECK(upwind_flux_p(0.0, 0.5, 2.0, 7.0) == 0.0);
    CHECK(upwind_flux_mu(0.0, 2.0, 7.0) == 0.0);
    CHECK(upwind_flux_mu(-2.0, 2.0, 7.0) == doctest::Approx(4.0).epsilon(1e-15));
    CHECK(upwind_flux_mu(2.0, 2.0, 7.0) == doctest::Approx(-14.0).epsilon(1e-15));
    // Equal traces give the advection coefficient times the value.
    for (double mu : {-0.7, 0.0, 0.3})
        for (double E : {-1.5, 0.0, 2.0}) {
            CHECK(std::abs(upwind_flux_x(mu, 1.7, 3.0, 3.0) - TransportCoeffs::hx(mu, 1.7) * 3.0) < 1e-15);
            CHECK(std::abs(upwind_flux_p(E, mu, 3.0, 3.0) - TransportCoeffs::hp(1.0, E, mu) * 3.0) < 1e-15);
            CHECK(std::abs(upwind_flux_mu(E, 3.0, 3.0) - TransportCoeffs::hmu(1.0, E) * 3.0) < 1e-15);
        }
    CHECK(boundary_mode_from_string("diode") == BoundaryMode::Diode);
}

TEST_CASE("constant state is stationary without force") {
    const auto space = make_space(build_uniform(1.0, 3.0, 4, 3, 4), 1);
    const TransportOperator op(space, BandModel::parabolic(1.0), {});
    const Field f = project(space, [](double, double, double) { return 2.0; });
    const auto pot = PotentialState::zero(space->mesh().x_edges());
    const auto r = op.assemble(f, pot);
    for (double v : r.rate.coeffs()) CHECK(std::abs(v) < 1e-13);
    for (int c = 0; c < space->num_cells(); ++c) CHECK(std::abs(op.gamma_T(f, pot, c)) < 1e-13);
}

TEST_CASE("single occupied cell streams out through its upper x face") {
    const auto mesh = build_uniform(1.0, 2.0, 3, 2, 2);
    const auto space = make_space(mesh, 1);
    const TransportOperator op(space, BandModel::parabolic(1.0), {});
    const int cell = mesh.flat(1, 1, 1); // μ ∈ [0,1]
    Field f(space);
    f.cell(cell)[0] = 1.0;
    f.cell(cell)[DgSpace::basis_index(1, 0, 0, 2)] = 0.2;
    f.cell(cell)[DgSpace::basis_index(0, 1, 1, 2)] = 0.1;
    const auto pot = PotentialState::zero(mesh.x_edges());
    const auto r = op.assemble(f, pot);
    // Outflux ∫∫ v μ f(x_{i+}) p² dp dμ by refined quadrature.
    const double out = bpdg::testing::integrate(
        [&](double mu) {
            return bpdg::testing::integrate(
                [&](double p) { return p * mu * evaluate(f, cell, 1.0, p - 1.0, mu) * p * p; }, 1.0, 2.0, 8);
        },
        0.0, 1.0, 8);
    const double expected = -out / mesh.cell_volume(1, 1, 1);
    CHECK(std::abs(r.cell_average_rate[cell] - expected) < 1e-12);
    CHECK(std::abs(op.gamma_T(f, pot, cell) - expected) < 1e-12);
    CHECK(std::abs(r.cell_average_rate[mesh.flat(2, 1, 1)] * mesh.cell_volume(2, 1, 1) - out) < 1e-12);
    CHECK(r.cell_average_rate[mesh.flat(0, 1, 1)] == 0.0);
}

TEST_CASE("gamma_T matches the assembled cell-average rate") {
    std::mt19937_64 rng(21);
    const auto mesh = build_uniform(1.0, 2.5, 3, 4, 3);
    for (int degree = 1; degree <= 2; ++degree) {
        const auto space = make_space(mesh, degree);
        for (auto settings : {TransportSettings{}, diode_settings()}) {
            for (const auto& band : {BandModel::parabolic(1.0), BandModel::kane(0.7, 0.4)}) {
                const TransportOperator op(space, band, settings);
                const Field f = random_field(space, rng);
                const auto pot = random_potential(mesh, rng);
                const auto r = op.assemble(f, pot);
                double balance = 0.0;
                for (int c = 0; c < mesh.num_cells(); ++c) {
                    const double g = op.gamma_T(f, pot, c);
                    CHECK(std::abs(g - r.cell_average_rate[c]) <= 1e-12 * std::max(1.0, std::abs(g)));
                    balance += g * mesh.cell_volume(mesh.unflat(c));
                }
                CHECK(std::abs(balance - r.mass_rate) <= 1e-12 * std::max(1.0, std::abs(r.mass_rate)));
                CHECK(std::abs(residual_mass_rate(r, mesh) - r.mass_rate) <= 1e-12 * std::max(1.0, std::abs(r.mass_rate)));
            }
        }
    }
}

TEST_CASE("periodic conservation without force") {
    std::mt19937_64 rng(4);
    const auto mesh = build_uniform(2.0, 3.0, 5, 4, 4);
    const auto space = make_space(mesh, 1);
    const TransportOperator op(space, BandModel::kane(1.0, 0.5), {});
    const Field f = random_field(space, rng);
    const auto pot = PotentialState::zero(mesh.x_edges());
    const auto r = op.assemble(f, pot);
    double total = 0.0;
    for (int c = 0; c < mesh.num_cells(); ++c) total += op.gamma_T(f, pot, c) * mesh.cell_volume(mesh.unflat(c));
    CHECK(std::abs(total) < 1e-12);
    CHECK(r.mass_rate == 0.0);
    CHECK(std::abs(residual_mass_rate(r, mesh)) < 1e-12);
}

TEST_CASE("mirror symmetry x -> L - x, mu -> -mu, E -> -E") {
    std::mt19937_64 rng(8);
    const auto mesh = build_uniform(1.0, 2.0, 4, 3, 4);
    const auto space = make_space(mesh, 1);
    const TransportOperator op(space, BandModel::parabolic(1.0), {});
    const Field f = random_field(space, rng);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<std::array<double, 2>> ab(mesh.nx()), mirrored(mesh.nx());
    for (int i = 0; i < mesh.nx(); ++i) ab[i] = {u(rng), u(rng)};
    for (int i = 0; i < mesh.nx(); ++i) {
        const auto& a = ab[mesh.nx() - 1 - i];
        mirrored[i] = {-(a[0] + a[1] * mesh.dx(i)), a[1]};
    }
    const Field g = project(space, [&](double x, double p, double mu) { return evaluate_at(f, 1.0 - x, p, -mu); });
    const auto rf = op.assemble(f, linear_potential(mesh, ab));
    const auto rg = op.assemble(g, linear_potential(mesh, mirrored));
    std::uniform_real_distribution<double> ux(0.01, 0.99), up(0.01, 1.99), um(-0.99, 0.99);
    for (int n = 0; n < 200; ++n) {
        const double x = ux(rng), p = up(rng), mu = um(rng);
        const double a = evaluate_at(rf.rate, 1.0 - x, p, -mu);
        const double b = evaluate_at(rg.rate, x, p, mu);
        CHECK(std::abs(a - b) <= 1e-11 * std::max(1.0, std::abs(a)));
    }
}

TEST_CASE("free-streaming residual converges to the analytic right-hand side") {
    // f = (1 + 0.5 sin 2πx)(1 + 0.3p)(1 + 0.5μ) is resolved exactly in (p, μ); ∂_t f = -μ p ∂_x f.
    auto f0 = [](double x, double p, double mu) {
        return (1.0 + 0.5 * std::sin(2 * std::numbers::pi * x)) * (1.0 + 0.3 * p) * (1.0 + 0.5 * mu);
    };
    auto rhs = [](double x, double p, double mu) {
        return -mu * p * std::numbers::pi * std::cos(2 * std::numbers::pi * x) * (1.0 + 0.3 * p) * (1.0 + 0.5 * mu);
    };
    const auto g = quad_rule(QuadKind::Gauss, 5);
    std::vector<double> errs;
    for (int n : {8, 16, 32, 64}) {
        const auto mesh = build_uniform(1.0, 2.0, n, 2, 2);
        const auto space = make_space(mesh, 1);
        const TransportOperator op(space, BandModel::parabolic(1.0), {});
        const auto r = op.assemble(project(space, f0), PotentialState::zero(mesh.x_edges()));
        // Oracle: p²-weighted L² projection of the analytic right-hand side (5-point Gauss moments).
        const int nb = space->num_basis();
        std::vector<double> weak(space->num_coeffs(), 0.0);
        for (int c = 0; c < mesh.num_cells(); ++c) {
            const auto ci = mesh.unflat(c);
            for (int a = 0; a < 5; ++a)
                for (int b = 0; b < 5; ++b)
                    for (int d = 0; d < 5; ++d) {
                        const std::array<double, 3> ref{g.nodes[a], g.nodes[b], g.nodes[d]};
                        const auto x = space->physical_point(ci, ref);
                        const double w = g.weights[a] * g.weights[b] * g.weights[d] * mesh.dx(ci.i) * mesh.dp(ci.k) *
                                         mesh.dmu(ci.m) * x[1] * x[1] * rhs(x[0], x[1], x[2]);
                        for (int j = 0; j < nb; ++j) {
                            const int K = 2;
                            weak[static_cast<std::size_t>(c) * nb + j] +=
                                w * legendre_phi(j / (K * K), ref[0]) * legendre_phi((j / K) % K, ref[1]) *
                                legendre_phi(j % K, ref[2]);
                        }
                    }
        }
        apply_inverse_mass(*space, weak, nullptr);
        const Field exact(space, weak);
        double e2 = 0.0;
        for (int c = 0; c < mesh.num_cells(); ++c) {
            const auto ci = mesh.unflat(c);
            for (int a = 0; a < 5; ++a)
                for (int b = 0; b < 5; ++b)
                    for (int d = 0; d < 5; ++d) {
                        const double diff = evaluate(r.rate, c, g.nodes[a], g.nodes[b], g.nodes[d]) -
                                            evaluate(exact, c, g.nodes[a], g.nodes[b], g.nodes[d]);
                        e2 += g.weights[a] * g.weights[b] * g.weights[d] * diff * diff * mesh.dx(ci.i) *
                              mesh.dp(ci.k) * mesh.dmu(ci.m);
                    }
        }
        errs.push_back(std::sqrt(e2));
    }
    MESSAGE("free-streaming residual errors: " << errs[0] << " " << errs[1] << " " << errs[2] << " " << errs[3]);
    for (std::size_t j = 1; j < errs.size(); ++j) CHECK(std::log2(errs[j - 1] / errs[j]) > 0.9);
}
