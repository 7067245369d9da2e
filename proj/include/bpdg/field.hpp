#pragma once

#include "bpdg/mesh.hpp"
#include "bpdg/quadrature.hpp"

#include <array>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace bpdg {

enum class Direction { X = 0, P = 1, Mu = 2 };

/// Basis values (and optionally reference derivatives) at a fixed set of
/// reference points, stored row-major as [point][basis].
struct NodeTable {
    int num_points = 0;
    int num_basis = 0;
    std::vector<std::array<double, 3>> points; ///< reference coordinates in [0,1]³
    std::vector<double> phi;

    double value(std::span<const double> coeffs, int point) const;
};

/// Positivity node set of one direction: Gauss-Lobatto along the direction
/// crossed with Gauss in the two others. Layout is [lobatto][gauss_a][gauss_b]
/// where (a, b) are the remaining directions in (x, p, μ) order.
struct DirectionalNodeSet {
    Direction direction = Direction::X;
    NodeTable table;
};

/// Reference element and mesh-dependent tables for a tensor Legendre space of
/// degree k on a PhaseMesh. Immutable after construction.
class DgSpace {
public:
    /// Throws ConfigError for degree outside [1,3], and aborts (ConfigError)
    /// if the average-reproducing node weights are not a convex combination.
    DgSpace(PhaseMesh mesh, int degree);

    const PhaseMesh& mesh() const { return mesh_; }
    int degree() const { return degree_; }
    int basis_per_dim() const { return degree_ + 1; }
    int num_basis() const { return nb_; }
    int num_cells() const { return mesh_.num_cells(); }
    std::size_t num_coeffs() const { return static_cast<std::size_t>(nb_) * mesh_.num_cells(); }

    static int basis_index(int a, int b, int c, int K) { return (a * K + b) * K + c; }
    int basis_index(int a, int b, int c) const { return basis_index(a, b, c, degree_ + 1); }

    /// Gauss rule with N = k+2 points (volume and face integrals).
    const QuadRule& gauss() const { return gauss_; }
    /// Gauss-Lobatto rule with N = k+2 points (positivity analysis).
    const QuadRule& lobatto() const { return lobatto_; }

    /// Tensor Gauss volume nodes, ordered [q(x)][r(p)][s(μ)].
    const NodeTable& volume_nodes() const { return volume_; }
    /// Reference derivatives of the basis at the volume nodes, per direction.
    const std::vector<double>& volume_dphi(Direction d) const { return volume_dphi_[static_cast<int>(d)]; }
    /// Tensor Gauss volume weights (sum 1).
    const std::vector<double>& volume_weights() const { return volume_w_; }

    /// Face traces: Gauss² nodes on the lower (side=0) or upper (side=1) face
    /// normal to direction d, ordered over the remaining directions.
    const NodeTable& face_nodes(Direction d, int side) const { return face_[static_cast<int>(d)][side]; }
    /// Gauss² face weights (sum 1), same ordering as face_nodes.
    const std::vector<double>& face_weights() const { return face_w_; }

    const DirectionalNodeSet& directional_nodes(Direction d) const { return dir_[static_cast<int>(d)]; }
    /// Union of the volume Gauss nodes and the three directional node sets:
    /// the set on which the limiter enforces non-negativity.
    const NodeTable& positivity_nodes() const { return positivity_; }

    /// ∫ φ_b(η) p² dp over p cell k, for b = 0..K-1.
    std::span<const double> p_moments(int k) const;
    /// Inverse of the p²-weighted 1D mass matrix M_k[b][b'] = ∫ φ_b φ_b' p² dp (row-major K×K).
    std::span<const double> p_mass_inverse(int k) const;

    /// Convex weights w (one per node of directional_nodes(d)) for p cell k
    /// such that the p²-weighted cell average equals Σ w_n f(node_n).
    std::vector<double> convex_weights(Direction d, int k) const;

    /// Physical coordinates of a reference point in a cell.
    std::array<double, 3> physical_point(CellIndex c, const std::array<double, 3>& ref) const;

private:
    PhaseMesh mesh_;
    int degree_;
    int nb_;
    QuadRule gauss_;
    QuadRule lobatto_;
    NodeTable volume_;
    std::array<std::vector<double>, 3> volume_dphi_;
    std::vector<double> volume_w_;
    std::array<std::array<NodeTable, 2>, 3> face_;
    std::vector<double> face_w_;
    std::array<DirectionalNodeSet, 3> dir_;
    NodeTable positivity_;
    std::vector<double> p_moments_;
    std::vector<double> p_mass_inv_;
};

using SpacePtr = std::shared_ptr<const DgSpace>;

SpacePtr make_space(const PhaseMesh& mesh, int degree);

/// DG coefficients of f_h: per cell a (k+1)³ tensor Legendre expansion.
class Field {
public:
    explicit Field(SpacePtr space);
    Field(SpacePtr space, std::vector<double> coeffs);

    const DgSpace& space() const { return *space_; }
    const SpacePtr& space_ptr() const { return space_; }
    const PhaseMesh& mesh() const { return space_->mesh(); }

    std::span<double> cell(int c) { return {coeffs_.data() + static_cast<std::size_t>(c) * nb_, static_cast<std::size_t>(nb_)}; }
    std::span<const double> cell(int c) const {
        return {coeffs_.data() + static_cast<std::size_t>(c) * nb_, static_cast<std::size_t>(nb_)};
    }
    std::vector<double>& coeffs() { return coeffs_; }
    const std::vector<double>& coeffs() const { return coeffs_; }

    /// this += a * other (same space).
    void axpy(double a, const Field& other);
    void scale(double a);

private:
    SpacePtr space_;
    int nb_;
    std::vector<double> coeffs_;
};

using PhaseFunction = std::function<double(double x, double p, double mu)>;

/// Per-cell L² projection (unweighted reference measure, Gauss N=k+2).
Field project(const SpacePtr& space, const PhaseFunction& f);
Field project(const PhaseMesh& mesh, int degree, const PhaseFunction& f);

/// Value at reference coordinates (ξ,η,ζ) ∈ [0,1]³; throws DomainError outside.
double evaluate(const Field& field, int cell, double xi, double eta, double zeta);
/// Value at a physical point (owning cell by edge search; upper edge belongs to the last cell).
double evaluate_at(const Field& field, double x, double p, double mu);

/// p²-weighted cell average.
double cell_average(const Field& field, int cell);
std::vector<double> cell_averages(const Field& field);

/// Σ_cells ∫ f_h p² dV.
double total_mass(const Field& field);

/// Values of one cell on the positivity node set of one direction.
struct NodalValues {
    Direction direction = Direction::X;
    std::vector<double> values;      ///< [lobatto][gauss_a][gauss_b]
    std::vector<double> lower_trace; ///< [gauss_a][gauss_b] at the lower face
    std::vector<double> upper_trace; ///< [gauss_a][gauss_b] at the upper face
};

NodalValues nodal_values(const Field& field, int cell, Direction direction);

/// Minimum over the full positivity node set of one cell.
double min_positivity_node(const Field& field, int cell);

/// Writes the snapshot CSV: i,k,m,x_c,p_c,mu_c,cell_average,coeff_0..coeff_{nb-1}.
void write_snapshot(std::ostream& out, const Field& field);
/// Reads a snapshot written by write_snapshot into a field on `space`.
Field read_snapshot(std::istream& in, const SpacePtr& space);

} // namespace bpdg
