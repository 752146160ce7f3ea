#include "motionspace/error.hpp"
#include "motionspace/latentfit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace motionspace::fit {

namespace {

using Vec3 = Eigen::Vector3d;

void brute_force(const PointSet& queries, const PointSet& targets, NearestResult& out)
{
    for (Eigen::Index q = 0; q < queries.rows(); ++q) {
        double best = std::numeric_limits<double>::infinity();
        int arg = -1;
        for (Eigen::Index t = 0; t < targets.rows(); ++t) {
            const double d = (queries.row(q) - targets.row(t)).squaredNorm();
            if (d < best) {
                best = d;
                arg = static_cast<int>(t);
            }
        }
        out.index[q] = arg;
        out.dist2(q) = best;
    }
}

// Uniform grid over the targets' bounding box with points bucketed per cell.
class Grid
{
public:
    explicit Grid(const PointSet& targets) : targets_(targets)
    {
        lo_ = targets.colwise().minCoeff().transpose();
        const Vec3 hi = targets.colwise().maxCoeff().transpose();
        const double extent = std::max((hi - lo_).maxCoeff(), 1e-9);
        const int per_axis = std::max(1, static_cast<int>(std::cbrt(targets.rows() / 2.0)));
        cell_ = extent / per_axis;
        for (int c = 0; c < 3; ++c)
            dims_[c] = std::max(1, static_cast<int>(std::floor((hi(c) - lo_(c)) / cell_)) + 1);
        start_.assign(static_cast<std::size_t>(dims_[0]) * dims_[1] * dims_[2] + 1, 0);
        std::vector<int> cell_of(targets.rows());
        for (Eigen::Index t = 0; t < targets.rows(); ++t) {
            const auto k = cell_coords(targets.row(t).transpose());
            cell_of[t] = flat(k[0], k[1], k[2]);
            ++start_[cell_of[t] + 1];
        }
        for (std::size_t i = 1; i < start_.size(); ++i)
            start_[i] += start_[i - 1];
        items_.resize(targets.rows());
        std::vector<int> fill(start_.begin(), start_.end() - 1);
        for (Eigen::Index t = 0; t < targets.rows(); ++t)
            items_[fill[cell_of[t]]++] = static_cast<int>(t);
    }

    std::pair<int, double> query(const Vec3& p) const
    {
        std::array<long, 3> c;
        for (int a = 0; a < 3; ++a)
            c[a] = static_cast<long>(std::floor((p(a) - lo_(a)) / cell_));
        // Chebyshev distance in cells from p's cell to the grid box.
        long r_min = 0, r_max = 0;
        for (int a = 0; a < 3; ++a) {
            const long below = -c[a], above = c[a] - (dims_[a] - 1);
            r_min = std::max({r_min, below, above});
            r_max = std::max({r_max, std::abs(c[a]), std::abs(c[a] - (dims_[a] - 1))});
        }
        double best = std::numeric_limits<double>::infinity();
        int arg = -1;
        for (long r = r_min; r <= r_max; ++r) {
            const long x0 = std::max(0L, c[0] - r), x1 = std::min<long>(dims_[0] - 1, c[0] + r);
            const long y0 = std::max(0L, c[1] - r), y1 = std::min<long>(dims_[1] - 1, c[1] + r);
            const long z0 = std::max(0L, c[2] - r), z1 = std::min<long>(dims_[2] - 1, c[2] + r);
            for (long x = x0; x <= x1; ++x)
                for (long y = y0; y <= y1; ++y)
                    for (long z = z0; z <= z1; ++z) {
                        const long cheb = std::max({std::abs(x - c[0]), std::abs(y - c[1]), std::abs(z - c[2])});
                        if (cheb != r)
                            continue;
                        const int cell = flat(static_cast<int>(x), static_cast<int>(y), static_cast<int>(z));
                        for (int i = start_[cell]; i < start_[cell + 1]; ++i) {
                            const int t = items_[i];
                            const double d = (p.transpose() - targets_.row(t)).squaredNorm();
                            if (d < best || (d == best && t < arg)) {
                                best = d;
                                arg = t;
                            }
                        }
                    }
            // Unvisited cells are at least r cells away from p.
            if (arg >= 0 && std::sqrt(best) < r * cell_)
                break;
        }
        return {arg, best};
    }

private:
    std::array<int, 3> cell_coords(const Vec3& p) const
    {
        std::array<int, 3> k;
        for (int a = 0; a < 3; ++a)
            k[a] = std::clamp(static_cast<int>(std::floor((p(a) - lo_(a)) / cell_)), 0, dims_[a] - 1);
        return k;
    }
    int flat(int x, int y, int z) const { return (x * dims_[1] + y) * dims_[2] + z; }

    const PointSet& targets_;
    Vec3 lo_;
    double cell_ = 1.0;
    std::array<int, 3> dims_{1, 1, 1};
    std::vector<int> start_;
    std::vector<int> items_;
};

} // namespace

NearestResult nearest_neighbors(const PointSet& queries, const PointSet& targets, bool use_grid)
{
    if (targets.rows() == 0)
        throw Error(ErrorCode::EmptyInput, "nearest-neighbour search needs at least one target");
    NearestResult out;
    out.index.resize(queries.rows());
    out.dist2.resize(queries.rows());
    if (!use_grid) {
        brute_force(queries, targets, out);
        return out;
    }
    const Grid grid(targets);
    for (Eigen::Index q = 0; q < queries.rows(); ++q) {
        const auto [arg, d] = grid.query(queries.row(q).transpose());
        out.index[q] = arg;
        out.dist2(q) = d;
    }
    return out;
}

double chamfer(const PointSet& A, const PointSet& B, PointSet* grad_a)
{
    if (A.rows() == 0 || B.rows() == 0)
        throw Error(ErrorCode::EmptyInput, "Chamfer distance needs two non-empty point sets");
    const NearestResult ab = nearest_neighbors(A, B, B.rows() > kGridThreshold);
    const NearestResult ba = nearest_neighbors(B, A, A.rows() > kGridThreshold);
    const double na = static_cast<double>(A.rows());
    const double nb = static_cast<double>(B.rows());
    if (grad_a) {
        grad_a->setZero(A.rows(), 3);
        for (Eigen::Index i = 0; i < A.rows(); ++i)
            grad_a->row(i) += (2.0 / na) * (A.row(i) - B.row(ab.index[i]));
        for (Eigen::Index j = 0; j < B.rows(); ++j)
            grad_a->row(ba.index[j]) += (2.0 / nb) * (A.row(ba.index[j]) - B.row(j));
    }
    return ab.dist2.sum() / na + ba.dist2.sum() / nb;
}

} // namespace motionspace::fit
