#include "cvarmix/risk.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "cvarmix/errors.hpp"

namespace cvarmix {

namespace {

void check_sample(std::span<const double> values, double alpha) {
    if (values.empty()) throw ContractViolation("risk: sample must be nonempty");
    if (!(alpha > 0.0 && alpha <= 1.0)) {
        throw ContractViolation("risk: alpha must lie in (0,1]");
    }
    for (double v : values) {
        if (!std::isfinite(v)) throw ContractViolation("risk: sample values must be finite");
    }
}

}  // namespace

std::size_t tail_count(double alpha, std::size_t n) {
    const double m = std::ceil(alpha * static_cast<double>(n) - 1e-9);
    return std::min(n, static_cast<std::size_t>(std::max(1.0, m)));
}

std::vector<std::size_t> tail_indices(std::span<const double> values, double alpha) {
    check_sample(values, alpha);
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    order.resize(tail_count(alpha, values.size()));
    return order;
}

double empirical_quantile(std::span<const double> values, double alpha) {
    check_sample(values, alpha);
    std::vector<double> sorted(values.begin(), values.end());
    const std::size_t m = tail_count(alpha, sorted.size());
    std::nth_element(sorted.begin(), sorted.begin() + (m - 1), sorted.end());
    return sorted[m - 1];
}

double empirical_cvar(std::span<const double> values, double alpha) {
    check_sample(values, alpha);
    std::vector<double> sorted(values.begin(), values.end());
    const std::size_t m = tail_count(alpha, sorted.size());
    std::nth_element(sorted.begin(), sorted.begin() + (m - 1), sorted.end());
    return std::accumulate(sorted.begin(), sorted.begin() + m, 0.0) / static_cast<double>(m);
}

std::pair<double, double> cvar_dual(std::span<const double> values, double alpha,
                                    std::span<const double> k_grid) {
    check_sample(values, alpha);
    if (k_grid.empty()) throw ContractViolation("cvar_dual: k_grid must be nonempty");
    double best_k = k_grid.front();
    double best_value = -std::numeric_limits<double>::infinity();
    for (double k : k_grid) {
        double shortfall = 0.0;
        for (double z : values) shortfall += std::max(k - z, 0.0);
        shortfall /= static_cast<double>(values.size());
        const double value = k - shortfall / alpha;
        if (value > best_value) {
            best_value = value;
            best_k = k;
        }
    }
    return {best_k, best_value};
}

QuantileCurve quantile_curve(std::span<const double> values) {
    if (values.empty()) throw ContractViolation("quantile_curve: sample must be nonempty");
    std::vector<double> sorted(values.begin(), values.end());
    std::stable_sort(sorted.begin(), sorted.end());
    QuantileCurve curve;
    curve.points.reserve(sorted.size());
    const double n = static_cast<double>(sorted.size());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        curve.points.emplace_back(static_cast<double>(i + 1) / n, sorted[i]);
    }
    return curve;
}

std::string QuantileCurve::to_csv() const {
    std::string out = "probability,value\n";
    char buf[64];
    for (const auto& [p, v] : points) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", p, v);
        out += buf;
    }
    return out;
}

bool tail_flatness(std::span<const double> values, double alpha) {
    check_sample(values, alpha);
    std::vector<double> sorted(values.begin(), values.end());
    const std::size_t m = tail_count(alpha, sorted.size());
    std::nth_element(sorted.begin(), sorted.begin() + (m - 1), sorted.end());
    const double q = sorted[m - 1];
    return *std::min_element(sorted.begin(), sorted.begin() + m) == q;
}

}  // namespace cvarmix
