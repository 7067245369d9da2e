#include "bpdg/field.hpp"

#include "bpdg/errors.hpp"
#include "bpdg/legendre.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

namespace bpdg {

double NodeTable::value(std::span<const double> coeffs, int point) const {
    const double* row = phi.data() + static_cast<std::size_t>(point) * num_basis;
    double v = 0.0;
    for (int b = 0; b < num_basis; ++b) v += row[b] * coeffs[b];
    return v;
}

namespace {

NodeTable make_table(const std::vector<std::array<double, 3>>& pts, int K) {
    NodeTable t;
    t.num_points = static_cast<int>(pts.size());
    t.num_basis = K * K * K;
    t.points = pts;
    t.phi.resize(static_cast<std::size_t>(t.num_points) * t.num_basis);
    for (int n = 0; n < t.num_points; ++n) {
        for (int a = 0; a < K; ++a)
            for (int b = 0; b < K; ++b)
                for (int c = 0; c < K; ++c) {
                    t.phi[static_cast<std::size_t>(n) * t.num_basis + DgSpace::basis_index(a, b, c, K)] =
                        legendre_phi(a, pts[n][0]) * legendre_phi(b, pts[n][1]) * legendre_phi(c, pts[n][2]);
                }
    }
    return t;
}

// Remaining two directions of d, in (x, p, μ) order.
std::array<int, 2> others(Direction d) {
    switch (d) {
    case Direction::X: return {1, 2};
    case Direction::P: return {0, 2};
    default: return {0, 1};
    }
}

std::vector<double> invert_small(std::vector<double> a, int n) {
    std::vector<double> inv(static_cast<std::size_t>(n) * n, 0.0);
    for (int j = 0; j < n; ++j) inv[j * n + j] = 1.0;
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(a[r * n + col]) > std::abs(a[piv * n + col])) piv = r;
        if (a[piv * n + col] == 0.0) throw InternalError("singular p mass matrix");
        if (piv != col)
            for (int j = 0; j < n; ++j) {
                std::swap(a[col * n + j], a[piv * n + j]);
                std::swap(inv[col * n + j], inv[piv * n + j]);
            }
        const double d = a[col * n + col];
        for (int j = 0; j < n; ++j) {
            a[col * n + j] /= d;
            inv[col * n + j] /= d;
        }
        for (int r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = a[r * n + col];
            if (f == 0.0) continue;
            for (int j = 0; j < n; ++j) {
                a[r * n + j] -= f * a[col * n + j];
                inv[r * n + j] -= f * inv[col * n + j];
            }
        }
    }
    return inv;
}

} // namespace

DgSpace::DgSpace(PhaseMesh mesh, int degree)
    : mesh_(std::move(mesh)), degree_(degree), nb_((degree + 1) * (degree + 1) * (degree + 1)) {
    if (degree < 1 || degree > 3) throw ConfigError("degree must be 1, 2 or 3");
    const int K = degree + 1;
    gauss_ = quad_rule(QuadKind::Gauss, degree + 2);
    lobatto_ = quad_rule(QuadKind::Lobatto, degree + 2);
    const int N = gauss_.size();

    // Volume nodes.
    std::vector<std::array<double, 3>> pts;
    for (int q = 0; q < N; ++q)
        for (int r = 0; r < N; ++r)
            for (int s = 0; s < N; ++s) {
                pts.push_back({gauss_.nodes[q], gauss_.nodes[r], gauss_.nodes[s]});
                volume_w_.push_back(gauss_.weights[q] * gauss_.weights[r] * gauss_.weights[s]);
            }
    volume_ = make_table(pts, K);
    for (int d = 0; d < 3; ++d) {
        auto& D = volume_dphi_[d];
        D.resize(static_cast<std::size_t>(volume_.num_points) * nb_);
        for (int n = 0; n < volume_.num_points; ++n)
            for (int a = 0; a < K; ++a)
                for (int b = 0; b < K; ++b)
                    for (int c = 0; c < K; ++c) {
                        const auto& x = pts[n];
                        const double fa = d == 0 ? legendre_dphi(a, x[0]) : legendre_phi(a, x[0]);
                        const double fb = d == 1 ? legendre_dphi(b, x[1]) : legendre_phi(b, x[1]);
                        const double fc = d == 2 ? legendre_dphi(c, x[2]) : legendre_phi(c, x[2]);
                        D[static_cast<std::size_t>(n) * nb_ + basis_index(a, b, c)] = fa * fb * fc;
                    }
    }

    // Faces.
    for (int u = 0; u < N; ++u)
        for (int v = 0; v < N; ++v) face_w_.push_back(gauss_.weights[u] * gauss_.weights[v]);
    for (int d = 0; d < 3; ++d) {
        const auto oth = others(static_cast<Direction>(d));
        for (int side = 0; side < 2; ++side) {
            std::vector<std::array<double, 3>> fp;
            for (int u = 0; u < N; ++u)
                for (int v = 0; v < N; ++v) {
                    std::array<double, 3> x{};
                    x[d] = static_cast<double>(side);
                    x[oth[0]] = gauss_.nodes[u];
                    x[oth[1]] = gauss_.nodes[v];
                    fp.push_back(x);
                }
            face_[d][side] = make_table(fp, K);
        }
    }

    // Directional positivity node sets and their union with the volume nodes.
    std::vector<std::array<double, 3>> all = pts;
    for (int d = 0; d < 3; ++d) {
        const auto oth = others(static_cast<Direction>(d));
        std::vector<std::array<double, 3>> dp;
        for (int l = 0; l < lobatto_.size(); ++l)
            for (int u = 0; u < N; ++u)
                for (int v = 0; v < N; ++v) {
                    std::array<double, 3> x{};
                    x[d] = lobatto_.nodes[l];
                    x[oth[0]] = gauss_.nodes[u];
                    x[oth[1]] = gauss_.nodes[v];
                    dp.push_back(x);
                }
        dir_[d].direction = static_cast<Direction>(d);
        dir_[d].table = make_table(dp, K);
        for (const auto& x : dp)
            if (std::find(all.begin(), all.end(), x) == all.end()) all.push_back(x);
    }
    positivity_ = make_table(all, K);

    // p-weighted moments and mass matrices, exact with Gauss N = k+2 (degree 2k+2).
    const int np = mesh_.np();
    p_moments_.assign(static_cast<std::size_t>(np) * K, 0.0);
    p_mass_inv_.assign(static_cast<std::size_t>(np) * K * K, 0.0);
    for (int k = 0; k < np; ++k) {
        const double lo = mesh_.p_edges()[k];
        const double h = mesh_.dp(k);
        std::vector<double> M(static_cast<std::size_t>(K) * K, 0.0);
        for (int r = 0; r < N; ++r) {
            const double p = lo + h * gauss_.nodes[r];
            const double w = h * gauss_.weights[r] * p * p;
            for (int b = 0; b < K; ++b) {
                const double pb = legendre_phi(b, gauss_.nodes[r]);
                p_moments_[static_cast<std::size_t>(k) * K + b] += w * pb;
                for (int b2 = 0; b2 < K; ++b2) M[b * K + b2] += w * pb * legendre_phi(b2, gauss_.nodes[r]);
            }
        }
        const auto inv = invert_small(M, K);
        std::copy(inv.begin(), inv.end(), p_mass_inv_.begin() + static_cast<std::ptrdiff_t>(k) * K * K);
    }

    // The average-reproducing node weights must form a convex combination.
    for (int k = 0; k < np; ++k)
        for (int d = 0; d < 3; ++d) {
            const auto w = convex_weights(static_cast<Direction>(d), k);
            double sum = 0.0;
            for (double x : w) {
                if (x < 0.0) throw ConfigError("positivity node weights are not convex for p cell " + std::to_string(k));
                sum += x;
            }
            if (std::abs(sum - 1.0) > 1e-12)
                throw ConfigError("positivity node weights do not reproduce the cell average for p cell " +
                                  std::to_string(k));
        }
}

std::span<const double> DgSpace::p_moments(int k) const {
    const std::size_t K = degree_ + 1;
    return {p_moments_.data() + k * K, K};
}

std::span<const double> DgSpace::p_mass_inverse(int k) const {
    const std::size_t K = degree_ + 1;
    return {p_mass_inv_.data() + k * K * K, K * K};
}

std::vector<double> DgSpace::convex_weights(Direction d, int k) const {
    const double lo = mesh_.p_edges()[k];
    const double hi = mesh_.p_edges()[k + 1];
    const double h = hi - lo;
    const double p2_integral = h * (lo * lo + lo * hi + hi * hi) / 3.0;
    const int N = gauss_.size();
    const int L = lobatto_.size();
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(L) * N * N);
    for (int l = 0; l < L; ++l)
        for (int u = 0; u < N; ++u)
            for (int v = 0; v < N; ++v) {
                double wt = lobatto_.weights[l] * gauss_.weights[u] * gauss_.weights[v];
                double pref = 0.0;
                switch (d) {
                case Direction::X: pref = gauss_.nodes[u]; break;
                case Direction::P: pref = lobatto_.nodes[l]; break;
                case Direction::Mu: pref = gauss_.nodes[v]; break;
                }
                const double p = lo + h * pref;
                w.push_back(h * wt * p * p / p2_integral);
            }
    return w;
}

std::array<double, 3> DgSpace::physical_point(CellIndex c, const std::array<double, 3>& ref) const {
    return {mesh_.x_edges()[c.i] + mesh_.dx(c.i) * ref[0], mesh_.p_edges()[c.k] + mesh_.dp(c.k) * ref[1],
            mesh_.mu_edges()[c.m] + mesh_.dmu(c.m) * ref[2]};
}

SpacePtr make_space(const PhaseMesh& mesh, int degree) { return std::make_shared<const DgSpace>(mesh, degree); }

Field::Field(SpacePtr space) : space_(std::move(space)), nb_(space_->num_basis()), coeffs_(space_->num_coeffs(), 0.0) {}

Field::Field(SpacePtr space, std::vector<double> coeffs)
    : space_(std::move(space)), nb_(space_->num_basis()), coeffs_(std::move(coeffs)) {
    if (coeffs_.size() != space_->num_coeffs()) throw ConfigError("Field: coefficient count mismatch");
}

void Field::axpy(double a, const Field& other) {
    for (std::size_t j = 0; j < coeffs_.size(); ++j) coeffs_[j] += a * other.coeffs_[j];
}

void Field::scale(double a) {
    for (double& c : coeffs_) c *= a;
}

Field project(const SpacePtr& space, const PhaseFunction& f) {
    Field out(space);
    const auto& vol = space->volume_nodes();
    const auto& w = space->volume_weights();
    const int nb = space->num_basis();
    for (int c = 0; c < space->num_cells(); ++c) {
        const CellIndex ci = space->mesh().unflat(c);
        auto coeffs = out.cell(c);
        for (int n = 0; n < vol.num_points; ++n) {
            const auto x = space->physical_point(ci, vol.points[n]);
            const double fv = w[n] * f(x[0], x[1], x[2]);
            const double* row = vol.phi.data() + static_cast<std::size_t>(n) * nb;
            for (int b = 0; b < nb; ++b) coeffs[b] += fv * row[b];
        }
    }
    return out;
}

Field project(const PhaseMesh& mesh, int degree, const PhaseFunction& f) { return project(make_space(mesh, degree), f); }

double evaluate(const Field& field, int cell, double xi, double eta, double zeta) {
    auto inside = [](double t) { return t >= 0.0 && t <= 1.0; };
    if (!inside(xi) || !inside(eta) || !inside(zeta)) throw DomainError("evaluate: reference coordinates outside [0,1]^3");
    if (cell < 0 || cell >= field.space().num_cells()) throw std::out_of_range("evaluate: cell index");
    const int K = field.space().basis_per_dim();
    std::array<double, 4> fx{}, fp{}, fm{};
    for (int a = 0; a < K; ++a) {
        fx[a] = legendre_phi(a, xi);
        fp[a] = legendre_phi(a, eta);
        fm[a] = legendre_phi(a, zeta);
    }
    const auto c = field.cell(cell);
    double v = 0.0;
    for (int a = 0; a < K; ++a)
        for (int b = 0; b < K; ++b)
            for (int m = 0; m < K; ++m) v += c[DgSpace::basis_index(a, b, m, K)] * fx[a] * fp[b] * fm[m];
    return v;
}

double evaluate_at(const Field& field, double x, double p, double mu) {
    const auto& mesh = field.mesh();
    if (x < 0.0 || x > mesh.length() || p < 0.0 || p > mesh.p_max() || mu < -1.0 || mu > 1.0)
        throw DomainError("evaluate_at: point outside the phase domain");
    const int i = mesh.locate_x(x);
    const int k = mesh.locate_p(p);
    const int m = std::clamp(static_cast<int>(std::upper_bound(mesh.mu_edges().begin(), mesh.mu_edges().end(), mu) -
                                              mesh.mu_edges().begin()) -
                                 1,
                             0, mesh.nmu() - 1);
    auto ref = [](double v, double lo, double h) { return std::clamp((v - lo) / h, 0.0, 1.0); };
    return evaluate(field, mesh.flat(i, k, m), ref(x, mesh.x_edges()[i], mesh.dx(i)),
                    ref(p, mesh.p_edges()[k], mesh.dp(k)), ref(mu, mesh.mu_edges()[m], mesh.dmu(m)));
}

double cell_average(const Field& field, int cell) {
    const auto& sp = field.space();
    const CellIndex ci = sp.mesh().unflat(cell);
    const auto mom = sp.p_moments(ci.k);
    const auto c = field.cell(cell);
    const int K = sp.basis_per_dim();
    // Only the (0, b, 0) modes carry weighted mass; x and μ factors are Δx·Δμ.
    double s = 0.0;
    for (int b = 0; b < K; ++b) s += c[DgSpace::basis_index(0, b, 0, K)] * mom[b];
    const auto& mesh = sp.mesh();
    return mesh.dx(ci.i) * mesh.dmu(ci.m) * s / mesh.cell_volume(ci);
}

std::vector<double> cell_averages(const Field& field) {
    std::vector<double> out(field.space().num_cells());
    for (int c = 0; c < field.space().num_cells(); ++c) out[c] = cell_average(field, c);
    return out;
}

double total_mass(const Field& field) {
    double m = 0.0;
    const auto& mesh = field.mesh();
    for (int c = 0; c < mesh.num_cells(); ++c) m += cell_average(field, c) * mesh.cell_volume(mesh.unflat(c));
    return m;
}

NodalValues nodal_values(const Field& field, int cell, Direction direction) {
    const auto& sp = field.space();
    const auto& set = sp.directional_nodes(direction).table;
    const auto c = field.cell(cell);
    NodalValues out;
    out.direction = direction;
    out.values.resize(set.num_points);
    for (int n = 0; n < set.num_points; ++n) out.values[n] = set.value(c, n);
    const auto& lo = sp.face_nodes(direction, 0);
    const auto& hi = sp.face_nodes(direction, 1);
    out.lower_trace.resize(lo.num_points);
    out.upper_trace.resize(hi.num_points);
    for (int n = 0; n < lo.num_points; ++n) {
        out.lower_trace[n] = lo.value(c, n);
        out.upper_trace[n] = hi.value(c, n);
    }
    return out;
}

double min_positivity_node(const Field& field, int cell) {
    const auto& t = field.space().positivity_nodes();
    const auto c = field.cell(cell);
    double m = std::numeric_limits<double>::infinity();
    for (int n = 0; n < t.num_points; ++n) m = std::min(m, t.value(c, n));
    return m;
}

namespace {

void put(std::ostream& out, double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << buf;
}

} // namespace

void write_snapshot(std::ostream& out, const Field& field) {
    const auto& mesh = field.mesh();
    const int nb = field.space().num_basis();
    out << "i,k,m,x_c,p_c,mu_c,cell_average";
    for (int b = 0; b < nb; ++b) out << ",coeff_" << b;
    out << '\n';
    for (int c = 0; c < mesh.num_cells(); ++c) {
        const CellIndex ci = mesh.unflat(c);
        out << ci.i << ',' << ci.k << ',' << ci.m << ',';
        put(out, 0.5 * (mesh.x_edges()[ci.i] + mesh.x_edges()[ci.i + 1]));
        out << ',';
        put(out, 0.5 * (mesh.p_edges()[ci.k] + mesh.p_edges()[ci.k + 1]));
        out << ',';
        put(out, 0.5 * (mesh.mu_edges()[ci.m] + mesh.mu_edges()[ci.m + 1]));
        out << ',';
        put(out, cell_average(field, c));
        for (double v : field.cell(c)) {
            out << ',';
            put(out, v);
        }
        out << '\n';
    }
}

Field read_snapshot(std::istream& in, const SpacePtr& space) {
    Field f(space);
    const auto& mesh = space->mesh();
    const int nb = space->num_basis();
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("snapshot: empty input");
    int rows = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string tok;
        std::vector<double> vals;
        while (std::getline(ss, tok, ',')) vals.push_back(std::stod(tok));
        if (static_cast<int>(vals.size()) != 7 + nb) throw ConfigError("snapshot: wrong column count");
        const int i = static_cast<int>(vals[0]), k = static_cast<int>(vals[1]), m = static_cast<int>(vals[2]);
        if (i < 0 || i >= mesh.nx() || k < 0 || k >= mesh.np() || m < 0 || m >= mesh.nmu())
            throw ConfigError("snapshot: cell index outside the mesh");
        auto c = f.cell(mesh.flat(i, k, m));
        for (int b = 0; b < nb; ++b) c[b] = vals[7 + b];
        ++rows;
    }
    if (rows != mesh.num_cells()) throw ConfigError("snapshot: row count does not match the mesh");
    return f;
}

} // namespace bpdg
