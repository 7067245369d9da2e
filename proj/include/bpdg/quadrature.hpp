#pragma once

#include <string_view>
#include <vector>

namespace bpdg {

enum class QuadKind { Gauss, Lobatto };

/// One-dimensional quadrature rule on the reference interval [0,1].
/// Weights sum to one.
struct QuadRule {
    QuadKind kind = QuadKind::Gauss;
    int order = 0;
    std::vector<double> nodes;
    std::vector<double> weights;

    int size() const { return static_cast<int>(nodes.size()); }
    /// Highest polynomial degree integrated exactly: 2N-1 (Gauss), 2N-3 (Lobatto).
    int exactness_degree() const;
};

/// Tabulated Gauss (1 <= N <= 5) or Gauss-Lobatto (2 <= N <= 5) rule.
/// Throws ConfigError for unsupported orders.
QuadRule quad_rule(QuadKind kind, int order);

QuadKind quad_kind_from_string(std::string_view name);
std::string_view to_string(QuadKind kind);

} // namespace bpdg
