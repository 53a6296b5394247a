#include "frg/interp.hpp"

#include <algorithm>
#include <stdexcept>

namespace frg {

Eigen::MatrixXd fd_weights(double x0, const Eigen::VectorXd& x, int max_m) {
    const Eigen::Index n = x.size();
    if (n < max_m + 1)
        throw std::invalid_argument("fd_weights: need at least m+1 nodes");
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, max_m + 1);
    double c1 = 1.0;
    double c4 = x[0] - x0;
    c(0, 0) = 1.0;
    for (Eigen::Index i = 1; i < n; ++i) {
        Eigen::Index mn = std::min<Eigen::Index>(i, max_m);
        double c2 = 1.0;
        double c5 = c4;
        c4 = x[i] - x0;
        for (Eigen::Index j = 0; j < i; ++j) {
            double c3 = x[i] - x[j];
            c2 *= c3;
            if (j == i - 1) {
                for (Eigen::Index k = mn; k >= 1; --k)
                    c(i, k) = c1 * (k * c(i - 1, k - 1) - c5 * c(i - 1, k)) / c2;
                c(i, 0) = -c1 * c5 * c(i - 1, 0) / c2;
            }
            for (Eigen::Index k = mn; k >= 1; --k)
                c(j, k) = (c4 * c(j, k) - k * c(j, k - 1)) / c3;
            c(j, 0) = c4 * c(j, 0) / c3;
        }
        c1 = c2;
    }
    return c;
}

double local_derivative(const Eigen::VectorXd& nodes, const Eigen::VectorXd& values,
                        double x0, int m, int window) {
    const Eigen::Index n = nodes.size();
    window = static_cast<int>(std::min<Eigen::Index>(window, n));
    // nearest node, then a contiguous window around it
    Eigen::Index nearest = 0;
    double best = std::abs(nodes[0] - x0);
    for (Eigen::Index i = 1; i < n; ++i) {
        double d = std::abs(nodes[i] - x0);
        if (d < best) {
            best = d;
            nearest = i;
        }
    }
    Eigen::Index i0 = std::clamp<Eigen::Index>(nearest - window / 2, 0, n - window);
    Eigen::VectorXd w = fd_weights(x0, nodes.segment(i0, window), m).col(m);
    return w.dot(values.segment(i0, window));
}

} // namespace frg
