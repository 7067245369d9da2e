#include "bpdg/poisson.hpp"

#include "bpdg/errors.hpp"
#include "bpdg/field.hpp"
#include "bpdg/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>

namespace bpdg {

double Polynomial::operator()(double s) const {
    double v = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) v = v * s + *it;
    return v;
}

Polynomial Polynomial::derivative() const {
    Polynomial d;
    for (std::size_t j = 1; j < c.size(); ++j) d.c.push_back(j * c[j]);
    if (d.c.empty()) d.c.push_back(0.0);
    return d;
}

Polynomial Polynomial::antiderivative() const {
    Polynomial a;
    a.c.push_back(0.0);
    for (std::size_t j = 0; j < c.size(); ++j) a.c.push_back(c[j] / static_cast<double>(j + 1));
    return a;
}

DopingProfile DopingProfile::uniform(int nx, double value) {
    DopingProfile d{std::vector<double>(nx, value)};
    d.validate(nx);
    return d;
}

DopingProfile DopingProfile::from_regions(const PhaseMesh& mesh, double background, const std::vector<Region>& regions) {
    DopingProfile d{std::vector<double>(mesh.nx(), background)};
    for (int i = 0; i < mesh.nx(); ++i) {
        const double xc = 0.5 * (mesh.x_edges()[i] + mesh.x_edges()[i + 1]);
        for (const auto& r : regions)
            if (xc >= r.x_min && xc < r.x_max) d.values[i] = r.value;
    }
    d.validate(mesh.nx());
    return d;
}

void DopingProfile::validate(int nx) const {
    if (static_cast<int>(values.size()) != nx) throw ConfigError("doping: profile size does not match Nx");
    for (double v : values)
        if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("doping: values must be finite and non-negative");
}

namespace {

// Monomial coefficients (in ξ) of the orthonormal shifted Legendre polynomial φ_n.
std::vector<double> legendre_monomials(int n) {
    // P_n(t) by recurrence on coefficient vectors in t, then substitute t = 2ξ - 1.
    std::vector<std::vector<double>> P{{1.0}, {0.0, 1.0}};
    for (int j = 1; j < n; ++j) {
        std::vector<double> next(j + 2, 0.0);
        for (int e = 0; e <= j; ++e) next[e + 1] += (2.0 * j + 1.0) * P[j][e] / (j + 1.0);
        for (int e = 0; e < j; ++e) next[e] -= j * P[j - 1][e] / (j + 1.0);
        P.push_back(next);
    }
    const auto& t = P[n];
    // (2ξ - 1)^e expanded with binomial coefficients.
    std::vector<double> out(n + 1, 0.0);
    for (int e = 0; e <= n; ++e) {
        double binom = 1.0;
        for (int j = 0; j <= e; ++j) {
            out[j] += t[e] * binom * std::pow(2.0, j) * ((e - j) % 2 ? -1.0 : 1.0);
            binom = binom * (e - j) / (j + 1);
        }
    }
    const double norm = std::sqrt(2.0 * n + 1.0);
    for (double& v : out) v *= norm;
    return out;
}

int owning_cell_left(const std::vector<double>& edges, double x) {
    if (x < edges.front() || x > edges.back()) throw DomainError("x outside [0, L]");
    const int idx = static_cast<int>(std::lower_bound(edges.begin(), edges.end(), x) - edges.begin()) - 1;
    return std::clamp(idx, 0, static_cast<int>(edges.size()) - 2);
}

} // namespace

double ElectronDensity::at(double x) const {
    const int i = owning_cell_left(x_edges, x);
    return n[i](x - x_edges[i]);
}

double PotentialState::potential_at(double x) const {
    const int i = owning_cell_left(x_edges, x);
    return V[i](x - x_edges[i]);
}

PotentialState PotentialState::zero(const std::vector<double>& x_edges, PoissonParams params) {
    PotentialState s;
    s.x_edges = x_edges;
    const std::size_t nx = x_edges.size() - 1;
    s.V.assign(nx, Polynomial{{0.0}});
    s.E.assign(nx, Polynomial{{0.0}});
    s.params = params;
    return s;
}

ElectronDensity electron_density(const Field& field) {
    const auto& sp = field.space();
    const auto& mesh = sp.mesh();
    const int K = sp.basis_per_dim();
    ElectronDensity out;
    out.x_edges = mesh.x_edges();
    out.n.resize(mesh.nx());
    for (int i = 0; i < mesh.nx(); ++i) {
        // Legendre coefficients in x of 2π ∫∫ f p² dp dμ: ∫φ_c dμ = Δμ δ_c0.
        std::vector<double> d(K, 0.0);
        for (int k = 0; k < mesh.np(); ++k) {
            const auto mom = sp.p_moments(k);
            for (int m = 0; m < mesh.nmu(); ++m) {
                const auto c = field.cell(mesh.flat(i, k, m));
                for (int a = 0; a < K; ++a)
                    for (int b = 0; b < K; ++b) d[a] += mesh.dmu(m) * c[DgSpace::basis_index(a, b, 0, K)] * mom[b];
            }
        }
        Polynomial poly{std::vector<double>(K, 0.0)};
        const double h = mesh.dx(i);
        for (int a = 0; a < K; ++a) {
            const auto mono = legendre_monomials(a);
            for (int j = 0; j <= a; ++j) poly.c[j] += 2.0 * std::numbers::pi * d[a] * mono[j] / std::pow(h, j);
        }
        out.n[i] = std::move(poly);
    }
    return out;
}

PotentialState solve_potential(const ElectronDensity& n, const DopingProfile& doping, const PoissonParams& params) {
    if (!(params.permittivity > 0.0)) throw ConfigError("poisson: permittivity must be positive");
    const int nx = static_cast<int>(n.n.size());
    doping.validate(nx);
    const auto& edges = n.x_edges;
    const double L = edges.back();

    // W'' = ρ = q (N - n)/ϵ, W(0) = W'(0) = 0, C¹ across cells.
    std::vector<Polynomial> W(nx), dW(nx);
    double w0 = 0.0, dw0 = 0.0;
    for (int i = 0; i < nx; ++i) {
        Polynomial rho;
        rho.c.resize(std::max<std::size_t>(n.n[i].c.size(), 1), 0.0);
        for (std::size_t j = 0; j < n.n[i].c.size(); ++j) rho.c[j] = -params.q * n.n[i].c[j] / params.permittivity;
        rho.c[0] += params.q * doping.values[i] / params.permittivity;
        Polynomial A = rho.antiderivative();
        Polynomial B = A.antiderivative();
        A.c[0] += dw0;
        B.c[0] += w0;
        B.c[1] += dw0;
        const double h = edges[i + 1] - edges[i];
        w0 = B(h);
        dw0 = A(h);
        W[i] = std::move(B);
        dW[i] = std::move(A);
    }
    const double slope = (params.V0 + w0) / L;

    PotentialState out;
    out.x_edges = edges;
    out.params = params;
    out.V.resize(nx);
    out.E.resize(nx);
    for (int i = 0; i < nx; ++i) {
        Polynomial v = W[i];
        for (double& c : v.c) c = -c;
        v.c[0] += slope * edges[i];
        v.c[1] += slope;
        Polynomial e = dW[i];
        e.c[0] -= slope;
        out.V[i] = std::move(v);
        out.E[i] = std::move(e);
    }
    // Pin the Dirichlet values exactly.
    out.V.front().c[0] = 0.0;
    return out;
}

double efield_at(const PotentialState& potential, double x) {
    const int i = owning_cell_left(potential.x_edges, x);
    return potential.E[i](x - potential.x_edges[i]);
}

void write_poisson_csv(std::ostream& out, const PotentialState& potential, const ElectronDensity& n,
                       const DopingProfile& doping, const QuadRule& nodes) {
    out << "x_node,V,E,n,N\n";
    char buf[160];
    for (int i = 0; i < potential.nx(); ++i) {
        const double lo = potential.x_edges[i];
        const double h = potential.x_edges[i + 1] - lo;
        for (double xi : nodes.nodes) {
            const double s = h * xi;
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", lo + s, potential.V[i](s),
                          potential.E[i](s), n.n[i](s), doping.values[i]);
            out << buf;
        }
    }
}

} // namespace bpdg
