#include "qtt/cross.hpp"

#include <cmath>
#include <optional>
#include <random>
#include <sstream>

#include <Eigen/LU>

#include "detail/linalg.hpp"
#include "qtt/errors.hpp"

namespace qtt {

namespace {

using Local = std::vector<std::size_t>; // one local index per core

std::string format_index(const std::vector<std::size_t>& idx) {
    std::ostringstream os;
    os << "(";
    for (std::size_t k = 0; k < idx.size(); ++k) os << (k ? ", " : "") << idx[k];
    os << ")";
    return os.str();
}

template <Scalar T>
class CrossBuilder {
public:
    using Fn = std::function<std::vector<T>(const IndexBatch&)>;

    CrossBuilder(const TrainShape& shape, const Fn& f, const Cross& policy)
        : shape_(shape.with_ranks(std::vector<std::size_t>(shape.ncores() + 1, 1))), f_(f), policy_(policy),
          rng_(policy.seed) {
        n_ = shape_.ncores();
        for (std::size_t q = 0; q < n_; ++q) ext_.push_back(shape_.core_extent(q));
    }

    TensorTrain run(CrossStats* stats) {
        if (n_ == 1) {
            std::vector<Local> pts;
            for (std::size_t s = 0; s < ext_[0]; ++s) pts.push_back({s});
            auto vals = sample(pts);
            Core<T> c(1, ext_[0], 1, vals);
            TensorTrain t(shape_, std::vector<Core<T>>{c});
            finish(stats, 0.0);
            return t;
        }

        // Start from the largest-magnitude point of a probe set.
        auto probes = probe_points();
        auto pvals = sample(probes);
        std::size_t best = 0;
        for (std::size_t k = 1; k < pvals.size(); ++k)
            if (std::abs(pvals[k]) > std::abs(pvals[best])) best = k;
        const Local& x0 = probes[best];

        left_.assign(n_ + 1, {});
        right_.assign(n_ + 1, {});
        for (std::size_t q = 0; q <= n_; ++q) {
            left_[q] = {Local(x0.begin(), x0.begin() + static_cast<std::ptrdiff_t>(q))};
            right_[q] = {Local(x0.begin() + static_cast<std::ptrdiff_t>(q), x0.end())};
        }

        std::optional<TensorTrain> result;
        double err = 0.0;
        std::size_t sweep = 0;
        while (true) {
            result = forward();
            ++sweep;
            auto pts = probe_points();
            auto fv = sample(pts);
            err = probe_error(*result, pts, fv);
            if (err <= policy_.eps || sweep >= policy_.nsweeps) break;
            backward();
        }
        sweeps_ = sweep;
        finish(stats, err);
        return std::move(*result);
    }

private:
    void finish(CrossStats* stats, double err) {
        if (!stats) return;
        stats->evaluations = evaluations_;
        stats->sweeps = sweeps_;
        stats->probe_error = err;
        stats->pivots.clear();
        for (std::size_t q = 1; q < left_.size() && q < n_; ++q) {
            std::vector<std::vector<std::size_t>> bond;
            for (const auto& l : left_[q]) bond.push_back(l);
            stats->pivots.push_back(std::move(bond));
        }
    }

    std::vector<Local> probe_points() {
        std::vector<Local> pts(kProbes, Local(n_));
        for (auto& p : pts)
            for (std::size_t q = 0; q < n_; ++q) p[q] = std::uniform_int_distribution<std::size_t>(0, ext_[q] - 1)(rng_);
        return pts;
    }

    std::vector<T> sample(const std::vector<Local>& pts) {
        IndexBatch batch(shape_.ndims(), std::vector<std::size_t>(pts.size()));
        std::vector<std::size_t> idx(shape_.ndims());
        for (std::size_t k = 0; k < pts.size(); ++k) {
            shape_.dim_indices(pts[k], idx);
            for (std::size_t d = 0; d < idx.size(); ++d) batch[d][k] = idx[d];
        }
        auto vals = f_(batch);
        evaluations_ += pts.size();
        if (vals.size() != pts.size()) throw ShapeError("index function returned the wrong number of values");
        for (std::size_t k = 0; k < vals.size(); ++k)
            if (!std::isfinite(std::abs(vals[k]))) {
                std::vector<std::size_t> at(shape_.ndims());
                for (std::size_t d = 0; d < at.size(); ++d) at[d] = batch[d][k];
                throw NumericError("non-finite function value at index " + format_index(at));
            }
        return vals;
    }

    double probe_error(const TensorTrain& t, const std::vector<Local>& pts, const std::vector<T>& fv) const {
        std::vector<std::size_t> idx(shape_.ndims());
        double diff = 0.0, scale = 0.0;
        for (std::size_t k = 0; k < pts.size(); ++k) {
            shape_.dim_indices(pts[k], idx);
            diff = std::max(diff, std::abs(evaluate_at(t, idx) - cplx(fv[k])));
            scale = std::max(scale, std::abs(fv[k]));
        }
        return scale > 0.0 ? diff / scale : diff;
    }

    /// f over (left_[q] x s1 x s2 x right_[q+2]) as a (|I| m1) x (m2 |J|) matrix.
    Matrix<T> two_site(std::size_t q) {
        const auto& I = left_[q];
        const auto& J = right_[q + 2];
        const std::size_t m1 = ext_[q], m2 = ext_[q + 1];
        std::vector<Local> pts;
        pts.reserve(I.size() * m1 * m2 * J.size());
        for (const auto& i : I)
            for (std::size_t s1 = 0; s1 < m1; ++s1)
                for (std::size_t s2 = 0; s2 < m2; ++s2)
                    for (const auto& j : J) {
                        Local p(i);
                        p.push_back(s1);
                        p.push_back(s2);
                        p.insert(p.end(), j.begin(), j.end());
                        pts.push_back(std::move(p));
                    }
        auto vals = sample(pts);
        Matrix<T> m(detail::ix(I.size() * m1), detail::ix(m2 * J.size()));
        std::size_t k = 0;
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = vals[k++];
        return m;
    }

    TruncationRule rule() const { return {policy_.max_rank, std::min(policy_.eps, 0.5)}; }

    TensorTrain forward() {
        std::vector<Core<T>> cores(n_);
        for (std::size_t q = 0; q + 1 < n_; ++q) {
            const auto m = two_site(q);
            auto svd = truncated_svd<T>(m, rule());
            const auto rows = maxvol<T>(svd.u);
            const std::size_t r = rows.size();
            Matrix<T> sub(detail::ix(r), detail::ix(r));
            for (std::size_t k = 0; k < r; ++k) sub.row(detail::ix(k)) = svd.u.row(detail::ix(rows[k]));
            using ColMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
            Eigen::FullPivLU<ColMat> lu{ColMat(sub.transpose())};
            Matrix<T> interp = lu.solve(ColMat(svd.u.transpose())).transpose();
            cores[q] = detail::core_from_matrix<T>(interp, left_[q].size(), ext_[q], r);

            std::vector<Local> next;
            for (auto row : rows) {
                Local p(left_[q][row / ext_[q]]);
                p.push_back(row % ext_[q]);
                next.push_back(std::move(p));
            }
            left_[q + 1] = std::move(next);
        }
        // Last core: f sampled on the final row pivots.
        const std::size_t q = n_ - 1;
        std::vector<Local> pts;
        for (const auto& i : left_[q])
            for (std::size_t s = 0; s < ext_[q]; ++s) {
                Local p(i);
                p.push_back(s);
                pts.push_back(std::move(p));
            }
        cores[q] = Core<T>(left_[q].size(), ext_[q], 1, sample(pts));
        return TensorTrain(shape_, std::move(cores));
    }

    void backward() {
        for (std::size_t q = n_ - 1; q-- > 0;) {
            const auto m = two_site(q);
            auto svd = truncated_svd<T>(m, rule());
            Matrix<T> v = svd.vh.transpose();
            const auto cols = maxvol<T>(v);
            const auto& J = right_[q + 2];
            std::vector<Local> next;
            for (auto c : cols) {
                Local p{c / J.size()};
                const auto& tail = J[c % J.size()];
                p.insert(p.end(), tail.begin(), tail.end());
                next.push_back(std::move(p));
            }
            right_[q + 1] = std::move(next);
        }
    }

    static constexpr std::size_t kProbes = 1000;

    TrainShape shape_;
    const Fn& f_;
    Cross policy_;
    std::mt19937_64 rng_;
    std::size_t n_ = 0;
    std::vector<std::size_t> ext_;
    std::vector<std::vector<Local>> left_, right_;
    std::size_t evaluations_ = 0, sweeps_ = 0;
};

void check_policy(const Cross& policy) { validate(ApproxPolicy{policy}); }

} // namespace

TensorTrain cross_build(const TrainShape& shape, const RealFunction& f, const Cross& policy, CrossStats* stats) {
    check_policy(policy);
    return CrossBuilder<double>(shape, f, policy).run(stats);
}

TensorTrain cross_build(const TrainShape& shape, const ComplexFunction& f, const Cross& policy, CrossStats* stats) {
    check_policy(policy);
    return CrossBuilder<cplx>(shape, f, policy).run(stats);
}

TensorTrain transform(const TensorTrain& t, const std::function<double(double)>& g, const Cross& policy,
                      CrossStats* stats) {
    RealFunction f = [&](const IndexBatch& idx) {
        auto v = evaluate(t, idx).real();
        for (auto& x : v) x = g(x);
        return v;
    };
    return cross_build(t.shape(), f, policy, stats);
}

TensorTrain transform(const TensorTrain& t, const std::function<cplx(cplx)>& g, const Cross& policy,
                      CrossStats* stats) {
    ComplexFunction f = [&](const IndexBatch& idx) {
        auto v = evaluate(t, idx).complex();
        for (auto& x : v) x = g(x);
        return v;
    };
    return cross_build(t.shape(), f, policy, stats);
}

namespace {

std::vector<std::size_t> column(const IndexBatch& idx, std::size_t k) {
    std::vector<std::size_t> out(idx.size());
    for (std::size_t d = 0; d < idx.size(); ++d) out[d] = idx[d][k];
    return out;
}

} // namespace

TensorTrain elementwise_div(const TensorTrain& a, const TensorTrain& b, const Cross& policy, CrossStats* stats) {
    if (!a.shape().compatible(b.shape())) throw ShapeError("div: shapes differ");
    auto check = [](const IndexBatch& idx, std::size_t k, cplx den) {
        if (den == cplx(0.0)) throw NumericError("division by zero at index " + format_index(column(idx, k)));
    };
    if (!a.is_complex() && !b.is_complex()) {
        RealFunction f = [&](const IndexBatch& idx) {
            auto num = evaluate(a, idx).real();
            const auto den = evaluate(b, idx).real();
            for (std::size_t k = 0; k < num.size(); ++k) {
                check(idx, k, den[k]);
                num[k] /= den[k];
            }
            return num;
        };
        return cross_build(a.shape(), f, policy, stats);
    }
    ComplexFunction f = [&](const IndexBatch& idx) {
        auto num = evaluate(a, idx).complex();
        const auto den = evaluate(b, idx).complex();
        for (std::size_t k = 0; k < num.size(); ++k) {
            check(idx, k, den[k]);
            num[k] /= den[k];
        }
        return num;
    };
    return cross_build(a.shape(), f, policy, stats);
}

TensorTrain pow(const TensorTrain& t, double e, const Cross& policy, CrossStats* stats) {
    if (e == 2.0) {
        std::string letters;
        for (std::size_t d = 0; d < t.shape().ndims(); ++d) letters.push_back(static_cast<char>('a' + d));
        return einsum(Exact{}, letters + "," + letters + "->" + letters, {t, t});
    }
    const bool integral = std::floor(e) == e;
    if (t.is_complex()) {
        return transform(
            t, std::function<cplx(cplx)>([e](cplx x) { return std::pow(x, e); }), policy, stats);
    }
    RealFunction f = [&](const IndexBatch& idx) {
        auto v = evaluate(t, idx).real();
        for (std::size_t k = 0; k < v.size(); ++k) {
            if (!integral && v[k] < 0.0)
                throw NumericError("negative base for a fractional power at index " + format_index(column(idx, k)));
            v[k] = std::pow(v[k], e);
        }
        return v;
    };
    return cross_build(t.shape(), f, policy, stats);
}

TensorTrain abs(const TensorTrain& t, const Cross& policy, CrossStats* stats) {
    RealFunction f = [&](const IndexBatch& idx) {
        const auto v = evaluate(t, idx);
        std::vector<double> out(v.size());
        for (std::size_t k = 0; k < out.size(); ++k) out[k] = std::abs(v.at(k));
        return out;
    };
    return cross_build(t.shape(), f, policy, stats);
}

} // namespace qtt
