#include "motionspace/error.hpp"
#include "motionspace/motiondata.hpp"

#include <algorithm>
#include <limits>
#include <vector>

namespace motionspace::motion {

double dtw_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b)
{
    if (a.rows() == 0 || b.rows() == 0)
        throw Error(ErrorCode::EmptyInput, "DTW needs two non-empty sequences");
    if (a.cols() != b.cols())
        throw Error(ErrorCode::ShapeMismatch, "DTW inputs must have the same frame width");

    const Eigen::Index n = a.rows();
    const Eigen::Index m = b.rows();
    constexpr double inf = std::numeric_limits<double>::infinity();
    // Two rolling rows of the cumulative cost table.
    std::vector<double> prev(m + 1, inf), cur(m + 1, inf);
    prev[0] = 0.0;
    for (Eigen::Index i = 1; i <= n; ++i) {
        cur[0] = inf;
        for (Eigen::Index j = 1; j <= m; ++j) {
            const double cost = (a.row(i - 1) - b.row(j - 1)).norm();
            cur[j] = cost + std::min({prev[j], cur[j - 1], prev[j - 1]});
        }
        std::swap(prev, cur);
    }
    return prev[m];
}

} // namespace motionspace::motion
