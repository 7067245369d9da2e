#include "bpdg/mesh.hpp"

#include "bpdg/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace bpdg {

namespace {

void check_edges(const std::vector<double>& e, const char* name, double lo, double hi, bool fixed_hi) {
    if (e.size() < 2) throw ConfigError(std::string("mesh: ") + name + " needs at least two edges");
    if (e.front() != lo) throw ConfigError(std::string("mesh: ") + name + " must start at its lower bound");
    if (fixed_hi && e.back() != hi) throw ConfigError(std::string("mesh: ") + name + " must end at its upper bound");
    for (std::size_t j = 0; j + 1 < e.size(); ++j) {
        if (!std::isfinite(e[j + 1]) || !(e[j + 1] > e[j]))
            throw ConfigError(std::string("mesh: ") + name + " must be strictly increasing");
    }
}

std::vector<double> uniform_edges(double lo, double hi, int n) {
    std::vector<double> e(n + 1);
    for (int j = 0; j <= n; ++j) e[j] = lo + (hi - lo) * j / n;
    e.back() = hi;
    return e;
}

int locate(const std::vector<double>& e, double v) {
    auto it = std::upper_bound(e.begin(), e.end(), v);
    int idx = static_cast<int>(it - e.begin()) - 1;
    return std::clamp(idx, 0, static_cast<int>(e.size()) - 2);
}

} // namespace

PhaseMesh::PhaseMesh(std::vector<double> x_edges, std::vector<double> p_edges, std::vector<double> mu_edges)
    : x_edges_(std::move(x_edges)), p_edges_(std::move(p_edges)), mu_edges_(std::move(mu_edges)) {
    check_edges(x_edges_, "x_edges", 0.0, 0.0, false);
    check_edges(p_edges_, "p_edges", 0.0, 0.0, false);
    check_edges(mu_edges_, "mu_edges", -1.0, 1.0, true);
}

CellIndex PhaseMesh::unflat(int c) const {
    CellIndex idx;
    idx.m = c % nmu();
    c /= nmu();
    idx.k = c % np();
    idx.i = c / np();
    return idx;
}

double PhaseMesh::cell_volume(int i, int k, int m) const {
    if (i < 0 || i >= nx() || k < 0 || k >= np() || m < 0 || m >= nmu())
        throw std::out_of_range("cell_volume: index out of range");
    const double a = p_edges_[k];
    const double b = p_edges_[k + 1];
    // (b³ - a³)/3 = (b - a)(a² + ab + b²)/3, free of cancellation.
    return dx(i) * dmu(m) * (b - a) * (a * a + a * b + b * b) / 3.0;
}

int PhaseMesh::locate_p(double p) const { return locate(p_edges_, p); }
int PhaseMesh::locate_x(double x) const { return locate(x_edges_, x); }

PhaseMesh build_uniform(double L, double p_max, int nx, int np, int nmu) {
    if (nx < 1 || np < 1 || nmu < 1) throw ConfigError("mesh: cell counts must be >= 1");
    if (!(L > 0.0) || !(p_max > 0.0) || !std::isfinite(L) || !std::isfinite(p_max))
        throw ConfigError("mesh: L and p_max must be positive");
    return PhaseMesh(uniform_edges(0.0, L, nx), uniform_edges(0.0, p_max, np), uniform_edges(-1.0, 1.0, nmu));
}

} // namespace bpdg
