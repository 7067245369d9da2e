#pragma once

#include "bpdg/mesh.hpp"

#include <iosfwd>
#include <vector>

namespace bpdg {

class Field;
struct QuadRule;

/// Polynomial in a cell-local coordinate s = x - x_left, coefficients by power.
struct Polynomial {
    std::vector<double> c;

    double operator()(double s) const;
    Polynomial derivative() const;
    /// Antiderivative vanishing at s = 0.
    Polynomial antiderivative() const;
    int degree() const { return static_cast<int>(c.size()) - 1; }
};

/// Piecewise-constant doping N(x), one value per x cell.
struct DopingProfile {
    std::vector<double> values;

    static DopingProfile uniform(int nx, double value);
    /// Region-wise values; a cell takes the value of the region containing its centre,
    /// otherwise `background`. Throws ConfigError on negative values.
    struct Region {
        double x_min = 0.0;
        double x_max = 0.0;
        double value = 0.0;
    };
    static DopingProfile from_regions(const PhaseMesh& mesh, double background, const std::vector<Region>& regions);

    void validate(int nx) const;
};

struct PoissonParams {
    double permittivity = 1.0;
    double V0 = 0.0;
    double q = 1.0;
};

/// Electron density n(x) = 2π ∫∫ f p² dp dμ, one polynomial of degree k per x cell.
struct ElectronDensity {
    std::vector<double> x_edges;
    std::vector<Polynomial> n;

    double at(double x) const;
};

/// Piecewise-polynomial V(x) (degree k+2) and E = -V' (degree k+1).
struct PotentialState {
    std::vector<double> x_edges;
    std::vector<Polynomial> V;
    std::vector<Polynomial> E;
    PoissonParams params;

    int nx() const { return static_cast<int>(V.size()); }
    double length() const { return x_edges.back(); }
    double potential_at(double x) const;
    /// E in cell i at local coordinate s.
    double efield_local(int i, double s) const { return E[i](s); }

    /// V ≡ 0, E ≡ 0 on the given x grid.
    static PotentialState zero(const std::vector<double>& x_edges, PoissonParams params = {});
};

ElectronDensity electron_density(const Field& field);

/// Exact double integration of -ϵ V'' = q (N - n) with V(0) = 0, V(L) = V0.
PotentialState solve_potential(const ElectronDensity& n, const DopingProfile& doping, const PoissonParams& params);

/// -V'(x) from the owning cell; interfaces use the left cell. Throws DomainError outside [0,L].
double efield_at(const PotentialState& potential, double x);

/// CSV of (x_node, V, E, n, N) at the given reference nodes of every x cell.
void write_poisson_csv(std::ostream& out, const PotentialState& potential, const ElectronDensity& n,
                       const DopingProfile& doping, const QuadRule& nodes);

} // namespace bpdg
