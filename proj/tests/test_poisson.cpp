#include "bpdg/errors.hpp"
#include "bpdg/field.hpp"
#include "bpdg/poisson.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace bpdg;

namespace {

ElectronDensity density_from(const std::vector<double>& edges, const std::vector<Polynomial>& n) { return {edges, n}; }

std::vector<double> uniform_edges(double L, int nx) {
    std::vector<double> e(nx + 1);
    for (int i = 0; i <= nx; ++i) e[i] = L * i / nx;
    return e;
}

/// Dense three-point finite-difference solve of -ϵ V'' = ρ_q(x), V(0)=0, V(L)=V0.
std::vector<double> fd_solve(const std::function<double(double)>& rho, double L, double V0, double eps, int n) {
    const double h = L / n;
    std::vector<double> a(n - 1, -1.0), b(n - 1, 2.0), c(n - 1, -1.0), d(n - 1);
    for (int j = 1; j < n; ++j) d[j - 1] = h * h * rho(j * h) / eps;
    d[n - 2] += V0;
    for (int j = 1; j < n - 1; ++j) {
        const double m = a[j] / b[j - 1];
        b[j] -= m * c[j - 1];
        d[j] -= m * d[j - 1];
    }
    std::vector<double> V(n + 1, 0.0);
    V[n] = V0;
    V[n - 1] = d[n - 2] / b[n - 2];
    for (int j = n - 3; j >= 0; --j) V[j + 1] = (d[j] - c[j] * V[j + 2]) / b[j];
    return V;
}

} // namespace

TEST_CASE("electron density") {
    const double pm = 2.0;
    const auto space = make_space(build_uniform(1.0, pm, 3, 4, 2), 1);
    const double f0 = 0.7;
    const Field f = project(space, [&](double, double, double) { return f0; });
    const auto n = electron_density(f);
    for (double x : {0.0, 0.2, 0.5, 0.9, 1.0})
        CHECK(std::abs(n.at(x) - 4.0 * std::numbers::pi * f0 * pm * pm * pm / 3.0) < 1e-12);
    const auto n0 = electron_density(Field(space));
    CHECK(n0.at(0.3) == 0.0);

    // f_h = project(a(x) g(p,μ)); oracle: 2π ∫∫ f_h p² dp dμ by refined quadrature of f_h itself.
    const auto sp2 = make_space(build_uniform(1.0, pm, 4, 3, 2), 1);
    const Field fs = project(sp2, [](double x, double p, double mu) {
        return (1.0 + 0.5 * std::sin(6.0 * x)) * std::exp(-p * p / 2.0) * (1.0 + 0.3 * mu);
    });
    const auto ns = electron_density(fs);
    for (double x : {0.05, 0.3, 0.61, 0.97}) {
        const double oracle = 2.0 * std::numbers::pi * bpdg::testing::integrate(
            [&](double mu) {
                return bpdg::testing::integrate([&](double p) { return evaluate_at(fs, x, p, mu) * p * p; }, 0.0, pm,
                                                24);
            },
            -1.0, 1.0, 8);
        CHECK(std::abs(ns.at(x) - oracle) < 1e-10);
    }
}

TEST_CASE("neutral and constant-charge solutions") {
    const double L = 2.0, V0 = 0.8;
    const auto edges = uniform_edges(L, 5);
    const auto neutral = solve_potential(density_from(edges, std::vector<Polynomial>(5, Polynomial{{1.5}})),
                                         DopingProfile::uniform(5, 1.5), {1.0, V0, 1.0});
    for (double x : {0.0, 0.3, 1.1, 2.0}) {
        CHECK(std::abs(neutral.potential_at(x) - V0 * x / L) < 1e-14);
        CHECK(std::abs(efield_at(neutral, x) + V0 / L) < 1e-14);
    }
    CHECK(neutral.potential_at(0.0) == 0.0);
    CHECK(std::abs(neutral.potential_at(L) - V0) < 1e-14);

    const double c = 3.0;
    const auto pot = solve_potential(density_from(edges, std::vector<Polynomial>(5, Polynomial{{0.0}})),
                                     DopingProfile::uniform(5, c), {1.0, 0.0, 1.0});
    double err = 0.0;
    for (int j = 0; j <= 200; ++j) {
        const double x = L * j / 200.0;
        err = std::max(err, std::abs(pot.potential_at(x) - (-c * x * x / 2.0 + c * L * x / 2.0)));
        err = std::max(err, std::abs(efield_at(pot, x) - (c * x - c * L / 2.0)));
    }
    CHECK(err < 1e-12);
    CHECK(std::abs(efield_at(pot, L / 2.0)) < 1e-13);
    CHECK_THROWS_AS(efield_at(pot, -0.1), DomainError);
    CHECK_THROWS_AS(efield_at(pot, L + 0.1), DomainError);
}

TEST_CASE("piecewise charge: finite-difference oracle, continuity and Gauss law") {
    const double L = 1.0, V0 = -0.4, eps = 0.5, q = 1.3;
    const int nx = 8;
    const auto edges = uniform_edges(L, nx);
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 2.0);
    DopingProfile doping;
    std::vector<Polynomial> n(nx);
    for (int i = 0; i < nx; ++i) {
        doping.values.push_back(u(rng));
        n[i] = Polynomial{{u(rng)}};
    }
    const auto pot = solve_potential(density_from(edges, n), doping, {eps, V0, q});
    const auto cell_rho = [&](int i) { return q * (doping.values[i] - n[i].c[0]); };
    // Grid nodes on an interface take the mean of the one-sided values (second-order FD there).
    const auto rho = [&](double x) {
        const double s = x / L * nx;
        const int i = std::min(nx - 1, static_cast<int>(s));
        if (i > 0 && std::abs(s - std::round(s)) < 1e-9) return 0.5 * (cell_rho(i - 1) + cell_rho(i));
        return cell_rho(i);
    };
    const int nfd = 10000;
    const auto V = fd_solve(rho, L, V0, eps, nfd);
    double err = 0.0;
    for (int j = 0; j <= nfd; ++j) err = std::max(err, std::abs(V[j] - pot.potential_at(L * j / nfd)));
    CHECK(err < 1e-8);

    for (int i = 1; i < nx; ++i) {
        const double h = edges[i] - edges[i - 1];
        CHECK(std::abs(pot.V[i - 1](h) - pot.V[i](0.0)) < 1e-12);
    }
    CHECK(pot.potential_at(0.0) == 0.0);
    CHECK(std::abs(pot.potential_at(L) - V0) < 1e-14);

    double charge = 0.0;
    for (int i = 0; i < nx; ++i) charge += q * (doping.values[i] - n[i].c[0]) * (edges[i + 1] - edges[i]);
    const double lhs = eps * (efield_at(pot, L) - pot.efield_local(0, 0.0));
    CHECK(std::abs(lhs - charge) <= 1e-10 * std::abs(charge));

    // Central difference of V matches E away from the interfaces.
    for (int j = 0; j < 50; ++j) {
        const double x = (j + 0.37) / 50.0 * L;
        const double h = 1e-5;
        const double fd = -(pot.potential_at(x + h) - pot.potential_at(x - h)) / (2 * h);
        const double frac = std::fmod(x * nx, 1.0);
        if (std::min(frac, 1.0 - frac) / nx > 2 * h) CHECK(std::abs(fd - efield_at(pot, x)) < 1e-8);
    }

    const auto again = solve_potential(density_from(edges, n), doping, {eps, V0, q});
    for (int i = 0; i < nx; ++i) CHECK(again.V[i].c == pot.V[i].c);
}

TEST_CASE("linear density polynomials satisfy the ODE") {
    const double L = 1.0;
    const int nx = 4;
    const auto edges = uniform_edges(L, nx);
    std::vector<Polynomial> n(nx);
    for (int i = 0; i < nx; ++i) n[i] = Polynomial{{1.0 + 0.1 * i, 0.5 - 0.2 * i}};
    const DopingProfile doping = DopingProfile::uniform(nx, 1.2);
    const PoissonParams params{2.0, 0.3, 1.0};
    const auto pot = solve_potential(density_from(edges, n), doping, params);
    for (int i = 0; i < nx; ++i) {
        const auto d2 = pot.V[i].derivative().derivative();
        for (double s : {0.0, 0.1, 0.2}) {
            const double rho = params.q * (doping.values[i] - n[i](s));
            CHECK(std::abs(-params.permittivity * d2(s) - rho) <= 1e-10 * std::max(1.0, std::abs(rho)));
        }
        CHECK(std::abs(pot.E[i](0.1) + pot.V[i].derivative()(0.1)) < 1e-14);
    }
    CHECK_THROWS_AS(DopingProfile::uniform(3, -1.0), ConfigError);
}
