#pragma once

#include <cstddef>
#include <vector>

namespace bpdg {

/// Flat index of a phase-space cell (i, k, m) over (x, p, μ).
struct CellIndex {
    int i = 0; ///< x cell
    int k = 0; ///< p cell
    int m = 0; ///< μ cell
};

/// Tensor grid over x ∈ [0,L], p ∈ [0,p_max], μ ∈ [-1,1].
class PhaseMesh {
public:
    /// Validates edges (strictly increasing, correct end points); throws ConfigError.
    PhaseMesh(std::vector<double> x_edges, std::vector<double> p_edges, std::vector<double> mu_edges);

    int nx() const { return static_cast<int>(x_edges_.size()) - 1; }
    int np() const { return static_cast<int>(p_edges_.size()) - 1; }
    int nmu() const { return static_cast<int>(mu_edges_.size()) - 1; }
    int num_cells() const { return nx() * np() * nmu(); }

    double length() const { return x_edges_.back(); }
    double p_max() const { return p_edges_.back(); }

    const std::vector<double>& x_edges() const { return x_edges_; }
    const std::vector<double>& p_edges() const { return p_edges_; }
    const std::vector<double>& mu_edges() const { return mu_edges_; }

    double dx(int i) const { return x_edges_[i + 1] - x_edges_[i]; }
    double dp(int k) const { return p_edges_[k + 1] - p_edges_[k]; }
    double dmu(int m) const { return mu_edges_[m + 1] - mu_edges_[m]; }

    int flat(int i, int k, int m) const { return (i * np() + k) * nmu() + m; }
    int flat(CellIndex c) const { return flat(c.i, c.k, c.m); }
    CellIndex unflat(int c) const;

    /// ∫ p² dp dμ dx over the cell.
    double cell_volume(int i, int k, int m) const;
    double cell_volume(CellIndex c) const { return cell_volume(c.i, c.k, c.m); }

    /// Index of the p cell containing p (the last cell for p == p_max).
    int locate_p(double p) const;
    int locate_x(double x) const;

private:
    std::vector<double> x_edges_;
    std::vector<double> p_edges_;
    std::vector<double> mu_edges_;
};

/// Uniform grid. Throws ConfigError for zero counts or non-positive extents.
PhaseMesh build_uniform(double L, double p_max, int nx, int np, int nmu);

} // namespace bpdg
