#include "qtt/decomp.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/LU>
#include <Eigen/QR>
#include <Eigen/SVD>

#include "qtt/errors.hpp"

namespace qtt {

void TruncationRule::validate() const {
    if (max_rank == 0) throw ShapeError("max_rank must be positive");
    if (!(cutoff >= 0.0 && cutoff < 1.0)) throw ShapeError("cutoff must lie in [0, 1)");
}

template <Scalar T>
SvdResult<T> truncated_svd(const Matrix<T>& m, const TruncationRule& rule) {
    SvdResult<T> out;
    const auto rows = m.rows();
    const auto cols = m.cols();
    if (rows == 0 || cols == 0) {
        out.u = Matrix<T>(rows, 0);
        out.vh = Matrix<T>(0, cols);
        return out;
    }
    if (!m.allFinite()) throw NumericError("truncated_svd: non-finite matrix entry");

    using ColMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
    Eigen::BDCSVD<ColMat> svd(ColMat(m), Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const auto k = sv.size();

    std::vector<double> tail(static_cast<std::size_t>(k) + 1, 0.0);
    for (auto j = k; j-- > 0;) tail[j] = tail[j + 1] + sv[j] * sv[j];
    const double total = std::sqrt(tail[0]);

    const double floor = k > 0 ? sv[0] * static_cast<double>(std::max(rows, cols)) *
                                     std::numeric_limits<double>::epsilon()
                               : 0.0;
    std::size_t r_num = 0;
    while (r_num < static_cast<std::size_t>(k) && sv[r_num] > floor) ++r_num;

    std::size_t r_cut = 0;
    while (r_cut < static_cast<std::size_t>(k) && std::sqrt(tail[r_cut]) > rule.cutoff * total) ++r_cut;

    std::size_t r = std::min({rule.max_rank, r_cut, r_num});
    r = std::max<std::size_t>(r, 1);

    const auto ri = static_cast<Eigen::Index>(r);
    out.u = svd.matrixU().leftCols(ri);
    out.vh = svd.matrixV().leftCols(ri).adjoint();
    out.s.assign(sv.data(), sv.data() + r);
    out.discarded = std::sqrt(tail[r]);
    return out;
}

template <Scalar T>
QrResult<T> qr_reduced(const Matrix<T>& m) {
    using ColMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
    const auto rows = m.rows();
    const auto cols = m.cols();
    const auto k = std::min(rows, cols);
    QrResult<T> out;
    if (k == 0) {
        out.q = Matrix<T>(rows, 0);
        out.r = Matrix<T>(0, cols);
        return out;
    }
    Eigen::HouseholderQR<ColMat> qr{ColMat(m)};
    out.q = qr.householderQ() * ColMat::Identity(rows, k);
    out.r = qr.matrixQR().topRows(k).template triangularView<Eigen::Upper>();
    return out;
}

template <Scalar T>
std::vector<std::size_t> maxvol(const Matrix<T>& m, double tol, std::size_t max_iters) {
    using ColMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
    const auto n = m.rows();
    const auto r = m.cols();
    if (r == 0) return {};
    if (n < r) throw ShapeError("maxvol needs at least as many rows as columns");

    Eigen::ColPivHouseholderQR<ColMat> pqr{ColMat(m.transpose())};
    const auto& perm = pqr.colsPermutation().indices();
    std::vector<std::size_t> rows(static_cast<std::size_t>(r));
    for (Eigen::Index j = 0; j < r; ++j) rows[static_cast<std::size_t>(j)] = static_cast<std::size_t>(perm[j]);

    for (std::size_t it = 0; it < max_iters; ++it) {
        ColMat sub(r, r);
        for (Eigen::Index j = 0; j < r; ++j) sub.row(j) = m.row(static_cast<Eigen::Index>(rows[j]));
        Eigen::FullPivLU<ColMat> lu(sub.transpose());
        if (!lu.isInvertible()) break;
        const ColMat b = lu.solve(ColMat(m.transpose())).transpose();

        Eigen::Index bi = 0, bj = 0;
        double best = -1.0;
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < r; ++j) {
                const double v = std::abs(b(i, j));
                if (v > best) {
                    best = v;
                    bi = i;
                    bj = j;
                }
            }
        if (best <= 1.0 + tol) break;
        rows[static_cast<std::size_t>(bj)] = static_cast<std::size_t>(bi);
    }
    return rows;
}

template SvdResult<double> truncated_svd(const Matrix<double>&, const TruncationRule&);
template SvdResult<cplx> truncated_svd(const Matrix<cplx>&, const TruncationRule&);
template QrResult<double> qr_reduced(const Matrix<double>&);
template QrResult<cplx> qr_reduced(const Matrix<cplx>&);
template std::vector<std::size_t> maxvol(const Matrix<double>&, double, std::size_t);
template std::vector<std::size_t> maxvol(const Matrix<cplx>&, double, std::size_t);

} // namespace qtt
