#include "bpdg/quadrature.hpp"

#include "bpdg/errors.hpp"

#include <cmath>
#include <string>
#include <utility>

namespace bpdg {

int QuadRule::exactness_degree() const {
    return kind == QuadKind::Gauss ? 2 * order - 1 : 2 * order - 3;
}

namespace {

// Symmetric rules on [-1,1] given by their non-negative half: pairs (t, w)
// with t >= 0; t == 0 is the centre node.
using HalfRule = std::vector<std::pair<double, double>>;

HalfRule gauss_half(int n) {
    switch (n) {
    case 1: return {{0.0, 2.0}};
    case 2: return {{1.0 / std::sqrt(3.0), 1.0}};
    case 3: return {{0.0, 8.0 / 9.0}, {std::sqrt(3.0 / 5.0), 5.0 / 9.0}};
    case 4: {
        const double r = 2.0 / 7.0 * std::sqrt(6.0 / 5.0);
        const double s30 = std::sqrt(30.0);
        return {{std::sqrt(3.0 / 7.0 - r), (18.0 + s30) / 36.0},
                {std::sqrt(3.0 / 7.0 + r), (18.0 - s30) / 36.0}};
    }
    case 5: {
        const double r = 2.0 * std::sqrt(10.0 / 7.0);
        const double s70 = std::sqrt(70.0);
        return {{0.0, 128.0 / 225.0},
                {std::sqrt(5.0 - r) / 3.0, (322.0 + 13.0 * s70) / 900.0},
                {std::sqrt(5.0 + r) / 3.0, (322.0 - 13.0 * s70) / 900.0}};
    }
    default: throw ConfigError("quad_rule: unsupported Gauss order " + std::to_string(n));
    }
}

HalfRule lobatto_half(int n) {
    switch (n) {
    case 2: return {{1.0, 1.0}};
    case 3: return {{0.0, 4.0 / 3.0}, {1.0, 1.0 / 3.0}};
    case 4: return {{std::sqrt(1.0 / 5.0), 5.0 / 6.0}, {1.0, 1.0 / 6.0}};
    case 5: return {{0.0, 32.0 / 45.0}, {std::sqrt(3.0 / 7.0), 49.0 / 90.0}, {1.0, 1.0 / 10.0}};
    default: throw ConfigError("quad_rule: unsupported Lobatto order " + std::to_string(n));
    }
}

} // namespace

QuadRule quad_rule(QuadKind kind, int order) {
    const HalfRule half = kind == QuadKind::Gauss ? gauss_half(order) : lobatto_half(order);
    QuadRule rule{kind, order, {}, {}};
    rule.nodes.reserve(order);
    rule.weights.reserve(order);
    // Negative side, outermost first; then the centre (if any); then positive side.
    for (auto it = half.rbegin(); it != half.rend(); ++it) {
        if (it->first == 0.0) continue;
        rule.nodes.push_back(0.5 * (1.0 - it->first));
        rule.weights.push_back(0.5 * it->second);
    }
    for (const auto& [t, w] : half) {
        if (t != 0.0) continue;
        rule.nodes.push_back(0.5);
        rule.weights.push_back(0.5 * w);
    }
    for (const auto& [t, w] : half) {
        if (t == 0.0) continue;
        rule.nodes.push_back(0.5 * (1.0 + t));
        rule.weights.push_back(0.5 * w);
    }
    // Exact endpoints for Lobatto.
    if (kind == QuadKind::Lobatto) {
        rule.nodes.front() = 0.0;
        rule.nodes.back() = 1.0;
    }
    return rule;
}

QuadKind quad_kind_from_string(std::string_view name) {
    if (name == "gauss") return QuadKind::Gauss;
    if (name == "lobatto") return QuadKind::Lobatto;
    throw ConfigError("unknown quadrature kind '" + std::string(name) + "'");
}

std::string_view to_string(QuadKind kind) { return kind == QuadKind::Gauss ? "gauss" : "lobatto"; }

} // namespace bpdg
