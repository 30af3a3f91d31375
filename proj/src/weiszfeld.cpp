#include "streamopt/models.hpp"

namespace streamopt {

WeiszfeldResult weiszfeld(const RowMatrix& points, double tol, std::size_t max_iter)
{
    if (points.rows() == 0) {
        throw std::invalid_argument("weiszfeld: no points");
    }
    if (max_iter == 0) {
        throw std::invalid_argument("weiszfeld: max_iter must be at least 1");
    }
    const Eigen::Index n = points.rows();
    WeiszfeldResult result;
    Vec theta = points.colwise().mean().transpose();

    for (std::size_t it = 1; it <= max_iter; ++it) {
        result.iterations = it;
        Vec numer = Vec::Zero(theta.size());
        Vec pull = Vec::Zero(theta.size());
        double denom = 0.0;
        std::size_t coincident = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const Vec diff = points.row(i).transpose() - theta;
            const double dist = diff.norm();
            if (dist == 0.0) {
                ++coincident;
                continue;
            }
            numer += points.row(i).transpose() / dist;
            pull += diff / dist;
            denom += 1.0 / dist;
        }
        if (coincident > 0) {
            // Sitting on a data point: it is the median iff the pull of the
            // remaining points is no stronger than the point's own weight.
            const double strength = pull.norm();
            if (strength <= static_cast<double>(coincident)) {
                result.median = theta;
                result.converged = true;
                return result;
            }
            theta += tol * pull / strength;
            continue;
        }
        const Vec next = numer / denom;
        const double step = (next - theta).norm();
        theta = next;
        if (step < tol) {
            result.converged = true;
            break;
        }
    }
    result.median = theta;
    return result;
}

}  // namespace streamopt
