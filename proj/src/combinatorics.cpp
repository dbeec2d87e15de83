#include "hottbandit/combinatorics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace hottbandit {

double binomial(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    k = std::min(k, n - k);
    double result = 1.0;
    for (int i = 1; i <= k; ++i) result = result * (n - k + i) / i;
    return std::round(result);
}

std::int64_t for_each_combination(int n, int k,
                                  const std::function<bool(std::span<const int>)>& visit) {
    if (k < 0 || k > n) return 0;
    std::vector<int> idx(k);
    std::iota(idx.begin(), idx.end(), 0);
    std::int64_t count = 0;
    while (true) {
        ++count;
        if (!visit(idx)) return count;
        int i = k - 1;
        while (i >= 0 && idx[i] == n - k + i) --i;
        if (i < 0) return count;
        ++idx[i];
        for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
}

std::vector<int> sample_combination(int n, int k, Rng& rng) {
    // Floyd's algorithm.
    std::vector<int> out;
    out.reserve(k);
    for (int j = n - k; j < n; ++j) {
        int t = std::uniform_int_distribution<int>(0, j)(rng);
        if (std::find(out.begin(), out.end(), t) == out.end())
            out.push_back(t);
        else
            out.push_back(j);
    }
    std::sort(out.begin(), out.end());
    return out;
}

double small_determinant(const Eigen::Ref<const Eigen::MatrixXd>& m) {
    switch (m.rows()) {
        case 0:
            return 1.0;
        case 1:
            return m(0, 0);
        case 2:
            return m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
        case 3:
            return m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) -
                   m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
                   m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
        default:
            return m.partialPivLu().determinant();
    }
}

void HadamardGuard::check(const Eigen::Ref<const Eigen::MatrixXd>& m, double det) {
    ++checks;
    const double r = static_cast<double>(m.rows());
    const double a = m.size() ? m.cwiseAbs().maxCoeff() : 0.0;
    const double bound = std::pow(a, r) * std::pow(r, r / 2.0);
    if (std::abs(det) > bound * (1.0 + 1e-12) + 1e-300) ++trips;
}

}  // namespace hottbandit
