#include "qtt/tensortrain.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "detail/linalg.hpp"
#include "detail/reorder.hpp"
#include "qtt/errors.hpp"

namespace qtt {

template <Scalar T>
TrainShape TensorTrain::validated(const TrainShape& shape, const std::vector<Core<T>>& cores) {
    if (cores.size() != shape.ncores())
        throw ShapeError("expected " + std::to_string(shape.ncores()) + " cores, got " +
                         std::to_string(cores.size()));
    for (std::size_t q = 0; q < cores.size(); ++q) {
        const auto& c = cores[q];
        if (c.data.size() != c.left * c.extent * c.right)
            throw ShapeError("core " + std::to_string(q) + " data size does not match its extents");
        if (c.extent != shape.core_extent(q))
            throw ShapeError("core " + std::to_string(q) + " has extent " + std::to_string(c.extent) +
                             ", shape requires " + std::to_string(shape.core_extent(q)));
        if (c.left == 0 || c.right == 0) throw ShapeError("core " + std::to_string(q) + " has a zero rank");
        const std::size_t expect = q == 0 ? 1 : cores[q - 1].right;
        if (c.left != expect)
            throw ShapeError("rank chain broken at core " + std::to_string(q) + ": left rank " +
                             std::to_string(c.left) + " vs " + std::to_string(expect));
    }
    if (cores.back().right != 1) throw ShapeError("last core must have right rank 1");
    return shape.with_ranks(detail::ranks_of(cores));
}

template TrainShape TensorTrain::validated(const TrainShape&, const std::vector<Core<double>>&);
template TrainShape TensorTrain::validated(const TrainShape&, const std::vector<Core<cplx>>&);

TensorTrain::ComplexCores TensorTrain::complex_cores() const {
    if (is_complex()) return cores<cplx>();
    return detail::promote<cplx>(cores<double>());
}

TensorTrain TensorTrain::to_complex() const { return TensorTrain(shape_, complex_cores(), center_); }

void TensorTrain::refresh_ranks() {
    shape_ = std::visit([&](const auto& cs) { return validated(shape_, cs); }, cores_);
}

template <Scalar T>
std::vector<Core<T>> cores_as(const TensorTrain& t) {
    if constexpr (std::is_same_v<T, cplx>) {
        return t.complex_cores();
    } else {
        if (t.is_complex()) throw ShapeError("complex train where a real one is required");
        return t.cores<double>();
    }
}

template std::vector<Core<double>> cores_as(const TensorTrain&);
template std::vector<Core<cplx>> cores_as(const TensorTrain&);

TensorTrain random_train(const TrainShape& shape, std::uint64_t seed, ScalarKind kind) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    const auto& r = shape.ranks();
    if (kind == ScalarKind::Real) {
        std::vector<Core<double>> cs;
        for (std::size_t q = 0; q < shape.ncores(); ++q) {
            Core<double> c(r[q], shape.core_extent(q), r[q + 1]);
            for (auto& v : c.data) v = nd(rng);
            cs.push_back(std::move(c));
        }
        return TensorTrain(shape, std::move(cs));
    }
    std::vector<Core<cplx>> cs;
    for (std::size_t q = 0; q < shape.ncores(); ++q) {
        Core<cplx> c(r[q], shape.core_extent(q), r[q + 1]);
        for (auto& v : c.data) {
            const double re = nd(rng);
            v = cplx(re, nd(rng));
        }
        cs.push_back(std::move(c));
    }
    return TensorTrain(shape, std::move(cs));
}

namespace {

template <Scalar T>
std::vector<T> contract_all(const std::vector<Core<T>>& cores) {
    // Row vector over (local indices so far) x right rank, core order.
    std::vector<T> acc(cores.front().data);
    std::size_t rows = cores.front().extent;
    for (std::size_t q = 1; q < cores.size(); ++q) {
        const auto& c = cores[q];
        std::vector<T> next(rows * c.extent * c.right);
        detail::Map<T>(next.data(), detail::ix(rows), detail::ix(c.extent * c.right)) =
            detail::CMap<T>(acc.data(), detail::ix(rows), detail::ix(c.left)) * detail::right_unfold(c);
        acc = std::move(next);
        rows *= c.extent;
    }
    return acc;
}

template <Scalar T>
std::vector<T> core_order_to_dense(const TrainShape& shape, const std::vector<T>& flat) {
    const auto n = shape.ncores();
    const auto nd = shape.ndims();
    std::vector<T> out(flat.size());
    std::vector<std::size_t> local(n, 0), idx(nd);
    const auto sizes = shape.sizes();
    for (std::size_t f = 0; f < flat.size(); ++f) {
        shape.dim_indices(local, idx);
        std::size_t g = 0;
        for (std::size_t d = 0; d < nd; ++d) g = g * sizes[d] + idx[d];
        out[g] = flat[f];
        for (std::size_t q = n; q-- > 0;) {
            if (++local[q] < shape.core_extent(q)) break;
            local[q] = 0;
        }
    }
    return out;
}

template <Scalar T>
DenseArray dense_of(const TensorTrain& t) {
    auto flat = contract_all(t.cores<T>());
    return DenseArray(t.shape().sizes(), core_order_to_dense(t.shape(), flat));
}

void check_indices(const TrainShape& shape, std::span<const std::size_t> idx) {
    if (idx.size() != shape.ndims())
        throw RangeError("expected " + std::to_string(shape.ndims()) + " indices, got " + std::to_string(idx.size()));
    for (std::size_t d = 0; d < idx.size(); ++d)
        if (idx[d] >= shape.dims()[d].size())
            throw RangeError("index " + std::to_string(idx[d]) + " out of range for dimension " + std::to_string(d) +
                             " of size " + std::to_string(shape.dims()[d].size()));
}

template <Scalar T>
T evaluate_local(const std::vector<Core<T>>& cores, std::span<const std::size_t> local) {
    std::vector<T> row(1, T(1)), next;
    for (std::size_t q = 0; q < cores.size(); ++q) {
        const auto& c = cores[q];
        next.assign(c.right, T(0));
        for (std::size_t a = 0; a < c.left; ++a) {
            const T ra = row[a];
            const T* p = &c.data[(a * c.extent + local[q]) * c.right];
            for (std::size_t b = 0; b < c.right; ++b) next[b] += ra * p[b];
        }
        row.swap(next);
    }
    return row[0];
}

} // namespace

DenseArray to_tensor(const TensorTrain& t, std::size_t guard) {
    if (t.shape().size() > guard)
        throw RefusalError("dense expansion of " + std::to_string(t.shape().size()) + " entries exceeds the guard of " +
                           std::to_string(guard));
    return t.is_complex() ? dense_of<cplx>(t) : dense_of<double>(t);
}

DenseArray evaluate(const TensorTrain& t, const std::vector<std::vector<std::size_t>>& idxs) {
    const auto& shape = t.shape();
    if (idxs.size() != shape.ndims())
        throw RangeError("expected index arrays for " + std::to_string(shape.ndims()) + " dimensions");
    const std::size_t npts = idxs.empty() ? 1 : idxs.front().size();
    for (const auto& v : idxs)
        if (v.size() != npts) throw RangeError("index arrays differ in length");

    std::vector<std::size_t> idx(shape.ndims()), local(shape.ncores());
    auto run = [&]<Scalar T>(const std::vector<Core<T>>& cores) {
        std::vector<T> out(npts);
        for (std::size_t k = 0; k < npts; ++k) {
            for (std::size_t d = 0; d < idx.size(); ++d) idx[d] = idxs[d][k];
            check_indices(shape, idx);
            shape.local_indices(idx, local);
            out[k] = evaluate_local(cores, local);
        }
        return DenseArray({npts}, std::move(out));
    };
    return t.is_complex() ? run(t.cores<cplx>()) : run(t.cores<double>());
}

cplx evaluate_at(const TensorTrain& t, std::span<const std::size_t> idx) {
    check_indices(t.shape(), idx);
    std::vector<std::size_t> local(t.ncores());
    t.shape().local_indices(idx, local);
    return t.is_complex() ? evaluate_local(t.cores<cplx>(), local) : cplx(evaluate_local(t.cores<double>(), local));
}

void normalize(TensorTrain& t, std::size_t center) {
    if (center >= t.ncores()) throw RangeError("normalization center out of range");
    auto run = [&]<Scalar T>(std::vector<Core<T>>& cs) {
        detail::canonicalize(cs, center);
    };
    if (t.is_complex())
        run(t.mutable_cores<cplx>());
    else
        run(t.mutable_cores<double>());
    t.refresh_ranks();
    t.set_center(center);
}

TensorTrain normalized(TensorTrain t, std::size_t center) {
    normalize(t, center);
    return t;
}

namespace {

void check_compatible(const TrainShape& a, const TrainShape& b, const char* what) {
    if (!a.compatible(b)) throw ShapeError(std::string(what) + ": shapes differ (" + a.describe() + " vs " + b.describe() + ")");
}

template <Scalar T>
T inner_impl(const std::vector<Core<T>>& a, const std::vector<Core<T>>& b) {
    Matrix<T> env = Matrix<T>::Ones(1, 1);
    for (std::size_t q = 0; q < a.size(); ++q) {
        const auto& ca = a[q];
        const auto& cb = b[q];
        // env (ra x rb) -> sum_s A_s^H env B_s
        Matrix<T> eb = env * detail::right_unfold(cb); // ra x (m rb')
        Matrix<T> next = Matrix<T>::Zero(detail::ix(ca.right), detail::ix(cb.right));
        for (std::size_t s = 0; s < ca.extent; ++s) {
            Matrix<T> as(detail::ix(ca.left), detail::ix(ca.right));
            for (std::size_t i = 0; i < ca.left; ++i)
                for (std::size_t j = 0; j < ca.right; ++j) as(detail::ix(i), detail::ix(j)) = ca(i, s, j);
            next.noalias() += as.adjoint() *
                              eb.middleCols(detail::ix(s * cb.right), detail::ix(cb.right));
        }
        env = std::move(next);
    }
    return env(0, 0);
}

} // namespace

cplx inner(const TensorTrain& a, const TensorTrain& b) {
    check_compatible(a.shape(), b.shape(), "inner");
    if (!a.is_complex() && !b.is_complex()) return inner_impl(a.cores<double>(), b.cores<double>());
    return inner_impl(a.complex_cores(), b.complex_cores());
}

double frobenius_norm(const TensorTrain& t) {
    return std::visit(
        [](const auto& cs) {
            auto copy = cs;
            detail::orthonormalize_right(copy, copy.size() - 1, 0);
            return detail::core_norm(copy.front());
        },
        t.storage());
}

namespace {

using quad = __float128;

struct QComplex {
    quad re = 0, im = 0;
    QComplex() = default;
    QComplex(quad r, quad i) : re(r), im(i) {}
    explicit QComplex(cplx v) : re(v.real()), im(v.imag()) {}
    explicit QComplex(double v) : re(v), im(0) {}
    QComplex& operator+=(const QComplex& o) {
        re += o.re;
        im += o.im;
        return *this;
    }
    friend QComplex operator*(const QComplex& a, const QComplex& b) {
        return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
    }
    QComplex conj() const { return {re, -im}; }
};

template <Scalar T>
std::vector<QComplex> widen(const Core<T>& c) {
    std::vector<QComplex> out;
    out.reserve(c.data.size());
    for (const auto& v : c.data) out.emplace_back(v);
    return out;
}

template <Scalar A, Scalar B>
QComplex inner_quad(const std::vector<Core<A>>& a, const std::vector<Core<B>>& b) {
    std::vector<QComplex> env(1, QComplex(1.0));
    std::size_t ra = 1, rb = 1;
    for (std::size_t q = 0; q < a.size(); ++q) {
        const auto& ca = a[q];
        const auto& cb = b[q];
        const auto wa = widen(ca);
        const auto wb = widen(cb);
        const std::size_t m = ca.extent, ra2 = ca.right, rb2 = cb.right;
        // tmp(a, s, rb2) = sum_b env(a, b) B(b, s, rb2)
        std::vector<QComplex> tmp(ra * m * rb2);
        for (std::size_t i = 0; i < ra; ++i)
            for (std::size_t j = 0; j < rb; ++j) {
                const QComplex e = env[i * rb + j];
                if (e.re == 0 && e.im == 0) continue;
                const QComplex* pb = &wb[j * m * rb2];
                QComplex* pt = &tmp[i * m * rb2];
                for (std::size_t k = 0; k < m * rb2; ++k) pt[k] += e * pb[k];
            }
        std::vector<QComplex> next(ra2 * rb2);
        for (std::size_t i = 0; i < ra; ++i)
            for (std::size_t s = 0; s < m; ++s)
                for (std::size_t x = 0; x < ra2; ++x) {
                    const QComplex av = wa[(i * m + s) * ra2 + x].conj();
                    const QComplex* pt = &tmp[(i * m + s) * rb2];
                    QComplex* pn = &next[x * rb2];
                    for (std::size_t y = 0; y < rb2; ++y) pn[y] += av * pt[y];
                }
        env = std::move(next);
        ra = ra2;
        rb = rb2;
    }
    return env[0];
}

QComplex quad_inner(const TensorTrain& a, const TensorTrain& b) {
    return std::visit([](const auto& ca, const auto& cb) { return inner_quad(ca, cb); }, a.storage(), b.storage());
}

} // namespace

double distance(const TensorTrain& a, const TensorTrain& b) {
    check_compatible(a.shape(), b.shape(), "distance");
    const quad aa = quad_inner(a, a).re;
    const quad bb = quad_inner(b, b).re;
    const quad ab = quad_inner(a, b).re;
    const quad d2 = aa + bb - 2 * ab;
    return d2 > 0 ? std::sqrt(static_cast<double>(d2)) : 0.0;
}

TensorTrain conj(const TensorTrain& t) {
    if (!t.is_complex()) return t;
    auto cs = t.cores<cplx>();
    for (auto& c : cs)
        for (auto& v : c.data) v = std::conj(v);
    return TensorTrain(t.shape(), std::move(cs), t.center());
}

namespace {

template <Scalar T>
TensorTrain scale_impl(const TensorTrain& t, T f) {
    auto cs = cores_as<T>(t);
    const std::size_t q = t.center().value_or(0);
    for (auto& v : cs[q].data) v *= f;
    return TensorTrain(t.shape(), std::move(cs), t.center());
}

} // namespace

TensorTrain scaled(const TensorTrain& t, double factor) {
    return t.is_complex() ? scale_impl<cplx>(t, cplx(factor)) : scale_impl<double>(t, factor);
}

TensorTrain scaled(const TensorTrain& t, cplx factor) {
    if (!t.is_complex() && factor.imag() == 0.0) return scale_impl<double>(t, factor.real());
    return scale_impl<cplx>(t, factor);
}

TensorTrain extend(const TensorTrain& t, const TensorTrain& u) {
    if (t.ranks().back() != 1 || u.ranks().front() != 1) throw ShapeError("extend needs terminal ranks of 1");
    if (t.shape().ndims() == 0) return scaled(u, evaluate_at(t, {}));
    if (u.shape().ndims() == 0) return scaled(t, evaluate_at(u, {}));

    auto dims = t.shape().dims();
    for (const auto& d : u.shape().dims()) dims.push_back(d);
    auto groups = t.shape().groups();
    const auto off = t.shape().ndims();
    for (auto g : u.shape().groups()) {
        for (auto& ref : g) ref.dim += off;
        groups.push_back(std::move(g));
    }
    TrainShape shape(std::move(dims), std::move(groups));

    auto join = [&]<Scalar T>() {
        auto cs = cores_as<T>(t);
        for (auto& c : cores_as<T>(u)) cs.push_back(std::move(c));
        return TensorTrain(shape, std::move(cs));
    };
    return (t.is_complex() || u.is_complex()) ? join.template operator()<cplx>() : join.template operator()<double>();
}

TensorTrain permute_dims(const TensorTrain& t, const std::vector<std::size_t>& perm) {
    const auto& shape = t.shape();
    const auto nd = shape.ndims();
    if (perm.size() != nd) throw ShapeError("permutation length differs from the number of dimensions");
    std::vector<std::size_t> inv(nd, nd);
    for (std::size_t k = 0; k < nd; ++k) {
        if (perm[k] >= nd || inv[perm[k]] != nd) throw ShapeError("invalid dimension permutation");
        inv[perm[k]] = k;
    }
    std::vector<Dimension> dims;
    for (auto p : perm) dims.push_back(shape.dims()[p]);

    std::vector<DigitGroup> groups;
    std::vector<std::vector<std::size_t>> orders;
    for (const auto& g : shape.groups()) {
        DigitGroup ng;
        for (const auto& ref : g) ng.push_back({inv[ref.dim], ref.pos});
        std::vector<std::size_t> order(g.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](auto x, auto y) { return ng[x] < ng[y]; });
        DigitGroup sorted;
        for (auto o : order) sorted.push_back(ng[o]);
        groups.push_back(std::move(sorted));
        orders.push_back(std::move(order));
    }
    TrainShape target(std::move(dims), std::move(groups));

    return std::visit(
        [&](const auto& cs) {
            auto out = cs;
            for (std::size_t q = 0; q < cs.size(); ++q)
                out[q] = detail::reorder_core(cs[q], shape.core_bases(q), orders[q]);
            return TensorTrain(target, std::move(out), t.center());
        },
        t.storage());
}

TensorTrain regroup(const TensorTrain& t, const TrainShape& target) {
    const auto& shape = t.shape();
    if (shape.ncores() != target.ncores() || !(shape.dims() == target.dims()))
        throw ShapeError("regroup target has different dims or core count");
    std::vector<std::vector<std::size_t>> orders;
    for (std::size_t q = 0; q < shape.ncores(); ++q) {
        const auto& from = shape.groups()[q];
        const auto& to = target.groups()[q];
        if (from.size() != to.size()) throw ShapeError("regroup target moves digits between cores");
        std::vector<std::size_t> order;
        for (const auto& ref : to) {
            auto it = std::find(from.begin(), from.end(), ref);
            if (it == from.end()) throw ShapeError("regroup target moves digits between cores");
            order.push_back(static_cast<std::size_t>(it - from.begin()));
        }
        orders.push_back(std::move(order));
    }
    return std::visit(
        [&](const auto& cs) {
            auto out = cs;
            for (std::size_t q = 0; q < cs.size(); ++q)
                out[q] = detail::reorder_core(cs[q], shape.core_bases(q), orders[q]);
            return TensorTrain(target, std::move(out), t.center());
        },
        t.storage());
}

template <Scalar T>
std::vector<T> dense_to_core_order(const TrainShape& shape, const std::vector<T>& dense) {
    if (dense.size() != shape.size()) throw ShapeError("dense size does not match shape");
    const auto n = shape.ncores();
    const auto nd = shape.ndims();
    const auto sizes = shape.sizes();
    std::vector<T> out(dense.size());
    std::vector<std::size_t> local(n, 0), idx(nd);
    for (std::size_t f = 0; f < dense.size(); ++f) {
        shape.dim_indices(local, idx);
        std::size_t g = 0;
        for (std::size_t d = 0; d < nd; ++d) g = g * sizes[d] + idx[d];
        out[f] = dense[g];
        for (std::size_t q = n; q-- > 0;) {
            if (++local[q] < shape.core_extent(q)) break;
            local[q] = 0;
        }
    }
    return out;
}

template std::vector<double> dense_to_core_order(const TrainShape&, const std::vector<double>&);
template std::vector<cplx> dense_to_core_order(const TrainShape&, const std::vector<cplx>&);

namespace {

template <Scalar T>
TensorTrain from_dense_impl(const TrainShape& shape, const std::vector<T>& dense, const TruncationRule& rule,
                            double* discarded) {
    rule.validate();
    using detail::ix;
    std::vector<T> rest = dense_to_core_order(shape, dense);
    const std::size_t n = shape.ncores();
    std::vector<Core<T>> cores;
    std::size_t left = 1;
    double lost = 0.0;
    for (std::size_t q = 0; q + 1 < n; ++q) {
        const std::size_t m = shape.core_extent(q);
        const std::size_t cols = rest.size() / (left * m);
        Matrix<T> mat = detail::CMap<T>(rest.data(), ix(left * m), ix(cols));
        auto svd = truncated_svd<T>(mat, rule);
        lost += svd.discarded;
        cores.push_back(detail::core_from_matrix<T>(svd.u, left, m, svd.rank()));
        Matrix<T> sv = svd.vh;
        for (std::size_t s = 0; s < svd.rank(); ++s) sv.row(ix(s)) *= svd.s[s];
        rest.assign(sv.data(), sv.data() + sv.size());
        left = svd.rank();
    }
    cores.push_back(Core<T>(left, shape.core_extent(n - 1), 1, std::move(rest)));
    if (discarded) *discarded = lost;
    return TensorTrain(shape, std::move(cores), n - 1);
}

} // namespace

TensorTrain from_dense(const TrainShape& shape, const DenseArray& dense, const TruncationRule& rule,
                       double* discarded) {
    if (dense.shape() != shape.sizes()) throw ShapeError("dense array shape does not match the train shape");
    if (dense.is_complex()) return from_dense_impl(shape, dense.values<cplx>(), rule, discarded);
    return from_dense_impl(shape, dense.values<double>(), rule, discarded);
}

} // namespace qtt
