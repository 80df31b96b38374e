#include "qtt/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "detail/linalg.hpp"
#include "qtt/constructors.hpp"
#include "qtt/errors.hpp"

namespace qtt {

using detail::ix;

// ---------------------------------------------------------------------------
// LinearMap

namespace {

char fresh_letter(const std::set<char>& used) {
    for (char c = 'a'; c <= 'z'; ++c)
        if (!used.count(c)) return c;
    for (char c = 'A'; c <= 'Z'; ++c)
        if (!used.count(c)) return c;
    throw ShapeError("linear map uses too many letters");
}

/// Identity over the digits of `shape`, written as a train over (x, x') with
/// the digits of x' on the cores of the matching digits of x.
TensorTrain identity_pairs(const TrainShape& shape) {
    const std::size_t nd = shape.ndims();
    std::vector<Dimension> dims = shape.dims();
    dims.insert(dims.end(), shape.dims().begin(), shape.dims().end());
    std::vector<DigitGroup> groups;
    std::vector<Core<double>> cores;
    for (std::size_t q = 0; q < shape.ncores(); ++q) {
        DigitGroup g = shape.groups()[q];
        for (const auto& d : shape.groups()[q]) g.push_back(DigitRef{d.dim + nd, d.pos});
        groups.push_back(std::move(g));
        const std::size_t m = shape.core_extent(q);
        Core<double> c(1, m * m, 1);
        for (std::size_t s = 0; s < m; ++s) c.data[s * m + s] = 1.0;
        cores.push_back(std::move(c));
    }
    return TensorTrain(TrainShape(std::move(dims), std::move(groups)), std::move(cores));
}

TensorTrain build_mpo(const EinsumSpec& spec, const std::vector<TensorTrain>& operands, std::size_t slot,
                      const TrainShape& xs) {
    const std::string& xl = spec.inputs[slot];
    if (xl.size() != xs.ndims())
        throw ShapeError("slot " + std::to_string(slot) + " has " + std::to_string(xl.size()) +
                         " letters but x has " + std::to_string(xs.ndims()) + " dimensions");
    if (spec.output.size() != xs.ndims()) throw ShapeError("linear map output must have the shape of x");

    std::set<char> used;
    for (const auto& in : spec.inputs) used.insert(in.begin(), in.end());
    std::string primed;
    for (std::size_t k = 0; k < xl.size(); ++k) {
        const char c = fresh_letter(used);
        used.insert(c);
        primed.push_back(c);
    }

    const TensorTrain delta = identity_pairs(xs);
    std::string sub;
    TrainRefs refs;
    std::size_t next = 0;
    for (std::size_t k = 0; k < spec.inputs.size(); ++k) {
        if (k) sub += ",";
        if (k == slot) {
            sub += xl + primed;
            refs.push_back(delta);
        } else {
            sub += spec.inputs[k];
            refs.push_back(operands[next++]);
        }
    }
    sub += "->" + spec.output + primed;
    const TensorTrain m = einsum(Exact{}, sub, refs);

    const std::size_t nd = xs.ndims();
    for (std::size_t d = 0; d < nd; ++d)
        if (!(m.shape().dims()[d] == xs.dims()[d]))
            throw ShapeError("output dimension '" + std::string(1, spec.output[d]) + "' differs from x");
    std::vector<DigitGroup> groups;
    for (std::size_t q = 0; q < xs.ncores(); ++q) {
        DigitGroup g = xs.groups()[q];
        for (const auto& d : xs.groups()[q]) g.push_back(DigitRef{d.dim + nd, d.pos});
        groups.push_back(std::move(g));
    }
    TrainShape target(m.shape().dims(), std::move(groups));
    if (m.ncores() != target.ncores())
        throw ShapeError("linear map output digits do not sit on the cores of the matching x digits");
    try {
        return regroup(m, target);
    } catch (const ShapeError&) {
        throw ShapeError("linear map output digits do not sit on the cores of the matching x digits");
    }
}

} // namespace

LinearMap::LinearMap(std::string_view subscripts, const TrainRefs& operands, std::size_t slot, TrainShape x_shape)
    : spec_(EinsumSpec::parse(subscripts)),
      slot_(slot),
      shape_(x_shape.with_ranks(std::vector<std::size_t>(x_shape.ncores() + 1, 1))),
      mpo_([&] {
          auto spec = EinsumSpec::parse(subscripts);
          if (slot >= spec.inputs.size())
              throw ShapeError("slot " + std::to_string(slot) + " out of range for " + spec.str());
          if (operands.size() + 1 != spec.inputs.size())
              throw ShapeError(spec.str() + " needs " + std::to_string(spec.inputs.size() - 1) +
                               " operands besides x, got " + std::to_string(operands.size()));
          std::vector<TensorTrain> ops;
          for (const auto& o : operands) ops.push_back(o.get());
          return build_mpo(spec, ops, slot, x_shape);
      }()) {
    for (const auto& o : operands) operands_.push_back(o.get());
}

TensorTrain LinearMap::apply(const TensorTrain& x, const ApproxPolicy& policy, OpStats* stats) const {
    if (!x.shape().compatible(shape_)) throw ShapeError("x does not match the linear map input shape");
    TrainRefs refs;
    std::size_t next = 0;
    for (std::size_t k = 0; k < spec_.inputs.size(); ++k) {
        if (k == slot_) refs.push_back(x);
        else refs.push_back(operands_[next++]);
    }
    return einsum(policy, spec_.str(), refs, stats);
}

void SweepPlan::validate(std::size_t ncores_of_train) const {
    if (ncores == 0 || nsweeps == 0) throw ShapeError("sweep plan needs ncores >= 1 and nsweeps >= 1");
    if (ncores > ncores_of_train)
        throw ShapeError("sweep window of " + std::to_string(ncores) + " cores exceeds the train length " +
                         std::to_string(ncores_of_train));
    if (local_iters == 0 || restart == 0) throw ShapeError("local solver needs at least one iteration");
    if (enrich_rank == 0) throw ShapeError("enrichment rank must be >= 1");
    rule.validate();
}

// ---------------------------------------------------------------------------
// Krylov solvers

namespace {

template <Scalar T>
Vector<T> fallback_start(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    Vector<T> v(ix(n));
    for (std::size_t k = 0; k < n; ++k) v(ix(k)) = T(nd(rng));
    return v;
}

} // namespace

template <Scalar T>
KrylovResult<T> lanczos(const MatVec<T>& op, Vector<T> start, std::size_t iters, double tol) {
    const auto n = static_cast<std::size_t>(start.size());
    if (n == 0) throw ShapeError("lanczos needs a nonempty start vector");
    if (start.norm() == 0.0) start = fallback_start<T>(n, 0);
    KrylovResult<T> res;
    Vector<T> x = start / start.norm();
    bool perturbed = false;
    std::size_t used = 0;

    while (used < iters) {
        const std::size_t m = std::min(n, iters - used);
        Matrix<T> v(ix(n), ix(m + 1));
        std::vector<double> alpha, beta;
        v.col(0) = x;
        Eigen::VectorXd y;
        double theta = 0.0;
        bool done = false, breakdown = false;
        std::size_t j = 0;
        for (; j < m; ++j) {
            Vector<T> w = op(v.col(ix(j)));
            ++used;
            alpha.push_back(std::real(v.col(ix(j)).dot(w)));
            for (int pass = 0; pass < 2; ++pass)
                w -= v.leftCols(ix(j + 1)) * (v.leftCols(ix(j + 1)).adjoint() * w);
            const double b = w.norm();

            Eigen::MatrixXd tri = Eigen::MatrixXd::Zero(ix(j + 1), ix(j + 1));
            for (std::size_t k = 0; k <= j; ++k) {
                tri(ix(k), ix(k)) = alpha[k];
                if (k < j) tri(ix(k), ix(k + 1)) = tri(ix(k + 1), ix(k)) = beta[k];
            }
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(tri);
            theta = es.eigenvalues()(0);
            y = es.eigenvectors().col(0);
            const double est = b * std::abs(y(ix(j)));
            beta.push_back(b);
            if (est <= tol * std::max(1.0, std::abs(theta))) {
                done = true;
                ++j;
                break;
            }
            if (b <= 1e-14 * std::max(1.0, std::abs(theta))) {
                breakdown = true;
                ++j;
                break;
            }
            v.col(ix(j + 1)) = w / b;
        }
        const std::size_t k = std::min(j, m);
        x = v.leftCols(ix(k)) * y.head(ix(k)).template cast<T>();
        x /= x.norm();
        res.value = theta;
        if (done) break;
        if (breakdown) {
            Vector<T> r = op(x) - T(theta) * x;
            ++used;
            if (r.norm() <= tol * std::max(1.0, std::abs(theta)) || perturbed) break;
            x += 1e-6 * fallback_start<T>(n, 1);
            x /= x.norm();
            perturbed = true;
        }
    }
    Vector<T> r = op(x) - T(res.value) * x;
    res.residual = r.norm() / std::max(1.0, std::abs(res.value));
    res.converged = res.residual <= std::max(tol, 1e-12) * 10.0;
    res.iterations = used;
    res.vector = std::move(x);
    return res;
}

template <Scalar T>
KrylovResult<T> gmres(const MatVec<T>& op, const Vector<T>& rhs, Vector<T> x0, std::size_t restart,
                      std::size_t iters, double tol) {
    const auto n = static_cast<std::size_t>(rhs.size());
    if (static_cast<std::size_t>(x0.size()) != n) x0 = Vector<T>::Zero(ix(n));
    KrylovResult<T> res;
    const double bnorm = rhs.norm();
    if (bnorm == 0.0) {
        res.vector = Vector<T>::Zero(ix(n));
        res.converged = true;
        return res;
    }
    Vector<T> x = std::move(x0);
    std::size_t used = 0;
    Vector<T> r = rhs - op(x);
    double rel = r.norm() / bnorm;
    while (rel > tol && used < iters) {
        const std::size_t m = std::min({restart, iters - used, n});
        Matrix<T> v(ix(n), ix(m + 1));
        Matrix<T> h = Matrix<T>::Zero(ix(m + 1), ix(m));
        std::vector<T> cs(m), sn(m);
        Vector<T> g = Vector<T>::Zero(ix(m + 1));
        const double beta = r.norm();
        g(0) = beta;
        v.col(0) = r / beta;
        std::size_t j = 0;
        for (; j < m; ++j) {
            Vector<T> w = op(v.col(ix(j)));
            ++used;
            for (std::size_t i = 0; i <= j; ++i) {
                h(ix(i), ix(j)) = v.col(ix(i)).dot(w);
                w -= h(ix(i), ix(j)) * v.col(ix(i));
            }
            const double wn = w.norm();
            h(ix(j + 1), ix(j)) = wn;
            for (std::size_t i = 0; i < j; ++i) {
                const T a = h(ix(i), ix(j)), b = h(ix(i + 1), ix(j));
                h(ix(i), ix(j)) = conj_if(cs[i]) * a + conj_if(sn[i]) * b;
                h(ix(i + 1), ix(j)) = -sn[i] * a + cs[i] * b;
            }
            const T a = h(ix(j), ix(j));
            const double den = std::sqrt(std::norm(a) + wn * wn);
            cs[j] = den == 0.0 ? T(1) : a / den;
            sn[j] = den == 0.0 ? T(0) : T(wn / den);
            h(ix(j), ix(j)) = T(den);
            h(ix(j + 1), ix(j)) = T(0);
            g(ix(j + 1)) = -sn[j] * g(ix(j));
            g(ix(j)) = conj_if(cs[j]) * g(ix(j));
            const bool stop = std::abs(g(ix(j + 1))) / bnorm <= tol || wn == 0.0;
            if (wn > 0.0) v.col(ix(j + 1)) = w / wn;
            if (stop) {
                ++j;
                break;
            }
        }
        const std::size_t k = std::min(j, m);
        Vector<T> yk = h.topLeftCorner(ix(k), ix(k)).template triangularView<Eigen::Upper>().solve(g.head(ix(k)));
        x += v.leftCols(ix(k)) * yk;
        r = rhs - op(x);
        const double nrel = r.norm() / bnorm;
        if (nrel >= rel && k < m) break;
        rel = nrel;
    }
    res.residual = rel;
    res.converged = rel <= tol * 10.0;
    res.iterations = used;
    res.vector = std::move(x);
    return res;
}

template KrylovResult<double> lanczos(const MatVec<double>&, Vector<double>, std::size_t, double);
template KrylovResult<cplx> lanczos(const MatVec<cplx>&, Vector<cplx>, std::size_t, double);
template KrylovResult<double> gmres(const MatVec<double>&, const Vector<double>&, Vector<double>, std::size_t,
                                    std::size_t, double);
template KrylovResult<cplx> gmres(const MatVec<cplx>&, const Vector<cplx>&, Vector<cplx>, std::size_t, std::size_t,
                                  double);

// ---------------------------------------------------------------------------
// environments

namespace {

/// Operator window W[w, S_out, S_in, w'] stored as (S_out w') x (w S_in).
template <Scalar T>
struct OpWindow {
    std::size_t wl = 1, wr = 1, m = 1;
    Matrix<T> mat;
};

/// MPO core q as a (w, s_out, s_in, w') tensor.
template <Scalar T>
struct OpCore {
    std::size_t wl, m, wr;
    std::vector<T> data; // (w, s, t, w')
    T operator()(std::size_t w, std::size_t s, std::size_t t, std::size_t v) const {
        return data[((w * m + s) * m + t) * wr + v];
    }
};

template <Scalar T>
OpCore<T> op_core(const Core<T>& c) {
    const auto m = static_cast<std::size_t>(std::lround(std::sqrt(double(c.extent))));
    return OpCore<T>{c.left, m, c.right, c.data};
}

template <Scalar T>
OpCore<T> merge_ops(const OpCore<T>& a, const OpCore<T>& b) {
    OpCore<T> out{a.wl, a.m * b.m, b.wr, {}};
    out.data.assign(out.wl * out.m * out.m * out.wr, T(0));
    for (std::size_t w = 0; w < a.wl; ++w)
        for (std::size_t s1 = 0; s1 < a.m; ++s1)
            for (std::size_t t1 = 0; t1 < a.m; ++t1)
                for (std::size_t v = 0; v < a.wr; ++v) {
                    const T x = a(w, s1, t1, v);
                    if (x == T(0)) continue;
                    for (std::size_t s2 = 0; s2 < b.m; ++s2)
                        for (std::size_t t2 = 0; t2 < b.m; ++t2)
                            for (std::size_t u = 0; u < b.wr; ++u) {
                                const std::size_t s = s1 * b.m + s2, t = t1 * b.m + t2;
                                out.data[((w * out.m + s) * out.m + t) * out.wr + u] += x * b(v, s2, t2, u);
                            }
                }
    return out;
}

template <Scalar T>
OpWindow<T> window_of(const OpCore<T>& w) {
    OpWindow<T> o{w.wl, w.wr, w.m, Matrix<T>::Zero(ix(w.m * w.wr), ix(w.wl * w.m))};
    for (std::size_t a = 0; a < w.wl; ++a)
        for (std::size_t s = 0; s < w.m; ++s)
            for (std::size_t t = 0; t < w.m; ++t)
                for (std::size_t b = 0; b < w.wr; ++b) o.mat(ix(s * w.wr + b), ix(a * w.m + t)) = w(a, s, t, b);
    return o;
}

/// Left environment stored as (a' w) x a; right as b' x (w' b).
template <Scalar T>
struct Env {
    std::size_t bra = 1, op = 1, ket = 1;
    Matrix<T> mat;
    static Env ones() { return Env{1, 1, 1, Matrix<T>::Ones(1, 1)}; }
};

/// y[a', S_out, b'] = L[a', w, a] W[w, S_out, S_in, w'] V[a, S_in, b] R[b', w', b].
template <Scalar T>
std::vector<T> apply_window(const Env<T>& l, const OpWindow<T>& w, const Env<T>& r, const T* v, std::size_t m) {
    const std::size_t a1 = l.bra, wl = l.op, a = l.ket, b1 = r.bra, wr = r.op, b = r.ket;
    detail::CMap<T> vm(v, ix(a), ix(m * b));
    Matrix<T> x1 = l.mat * vm; // (a' w) x (S_in b)
    Matrix<T> x2(ix(a1 * m * wr), ix(b));
    for (std::size_t i = 0; i < a1; ++i) {
        detail::CMap<T> blk(x1.data() + i * wl * m * b, ix(wl * m), ix(b));
        x2.block(ix(i * m * wr), 0, ix(m * wr), ix(b)) = w.mat * blk;
    }
    detail::CMap<T> x2m(x2.data(), ix(a1 * m), ix(wr * b));
    Matrix<T> y = x2m * r.mat.transpose(); // (a' S_out) x b'
    return std::vector<T>(y.data(), y.data() + y.size());
}

template <Scalar T>
Env<T> step_left_op(const Env<T>& l, const OpCore<T>& w, const Core<T>& bra, const Core<T>& ket) {
    const std::size_t m = w.m;
    const auto ow = window_of(w);
    detail::CMap<T> km(ket.data.data(), ix(ket.left), ix(m * ket.right));
    Matrix<T> x1 = l.mat * km; // (a' w) x (t b)
    Matrix<T> x2(ix(l.bra * m * w.wr), ix(ket.right));
    for (std::size_t i = 0; i < l.bra; ++i) {
        detail::CMap<T> blk(x1.data() + i * w.wl * m * ket.right, ix(w.wl * m), ix(ket.right));
        x2.block(ix(i * m * w.wr), 0, ix(m * w.wr), ix(ket.right)) = ow.mat * blk;
    }
    detail::CMap<T> x2m(x2.data(), ix(l.bra * m), ix(w.wr * ket.right));
    Matrix<T> out = detail::left_unfold(bra).adjoint() * x2m; // a'' x (w' b)
    Env<T> e{bra.right, w.wr, ket.right, Matrix<T>()};
    e.mat = detail::CMap<T>(out.data(), ix(bra.right * w.wr), ix(ket.right));
    return e;
}

template <Scalar T>
Env<T> step_right_op(const Env<T>& r, const OpCore<T>& w, const Core<T>& bra, const Core<T>& ket) {
    const std::size_t m = w.m;
    // z1[a, t, b', w'] = X[a, t, b] R[b', w', b]
    Matrix<T> rt(ix(ket.right), ix(r.bra * r.op));
    for (std::size_t bp = 0; bp < r.bra; ++bp)
        for (std::size_t wp = 0; wp < r.op; ++wp)
            for (std::size_t bb = 0; bb < r.ket; ++bb) rt(ix(bb), ix(bp * r.op + wp)) = r.mat(ix(bp), ix(wp * r.ket + bb));
    Matrix<T> z1 = detail::left_unfold(ket) * rt; // (a t) x (b' w')
    // z2[a, w, s, b'] = sum_t,w' W[w, s, t, w'] z1[a, t, b', w']
    const std::size_t A = ket.left, B1 = r.bra;
    std::vector<T> z2(A * w.wl * m * B1, T(0));
    for (std::size_t a = 0; a < A; ++a)
        for (std::size_t wl = 0; wl < w.wl; ++wl)
            for (std::size_t s = 0; s < m; ++s)
                for (std::size_t t = 0; t < m; ++t)
                    for (std::size_t wr = 0; wr < w.wr; ++wr) {
                        const T c = w(wl, s, t, wr);
                        if (c == T(0)) continue;
                        for (std::size_t bp = 0; bp < B1; ++bp)
                            z2[((a * w.wl + wl) * m + s) * B1 + bp] += c * z1(ix(a * m + t), ix(bp * w.wr + wr));
                    }
    // out[a', w, a] = sum_{s, b'} conj(X'[a', s, b']) z2[a, w, s, b']
    detail::CMap<T> z2m(z2.data(), ix(A * w.wl), ix(m * B1));
    Matrix<T> o = detail::right_unfold(bra).conjugate() * z2m.transpose(); // a' x (a w)
    Env<T> e{bra.left, w.wl, A, Matrix<T>(ix(bra.left), ix(w.wl * A))};
    for (std::size_t ap = 0; ap < bra.left; ++ap)
        for (std::size_t a = 0; a < A; ++a)
            for (std::size_t wl = 0; wl < w.wl; ++wl) e.mat(ix(ap), ix(wl * A + a)) = o(ix(ap), ix(a * w.wl + wl));
    return e;
}

/// Bra-ket overlaps without an operator: left (a' x c), right (b' x c').
template <Scalar T>
Matrix<T> step_left_vec(const Matrix<T>& l, const Core<T>& bra, const Core<T>& ket) {
    Matrix<T> tmp = l * detail::right_unfold(ket);
    detail::CMap<T> t2(tmp.data(), ix(bra.left * bra.extent), ix(ket.right));
    return detail::left_unfold(bra).adjoint() * t2;
}

template <Scalar T>
Matrix<T> step_right_vec(const Matrix<T>& r, const Core<T>& bra, const Core<T>& ket) {
    Matrix<T> tmp = detail::left_unfold(ket) * r.transpose();
    detail::CMap<T> t2(tmp.data(), ix(ket.left), ix(ket.extent * bra.right));
    return detail::right_unfold(bra).conjugate() * t2.transpose();
}

/// l (a' x c) . window (c, S, c') . r^T (c' x b').
template <Scalar T>
std::vector<T> project_vec(const Matrix<T>& l, const Core<T>& win, const Matrix<T>& r) {
    Core<T> p = detail::mul_right(detail::mul_left(l, win), Matrix<T>(r.transpose()));
    return std::move(p.data);
}

template <Scalar T>
Core<T> merge_window(const std::vector<Core<T>>& cs, std::size_t q, std::size_t k) {
    Core<T> w = cs[q];
    for (std::size_t j = 1; j < k; ++j) w = detail::merge(w, cs[q + j]);
    return w;
}

/// Splits a window super-core back into cores q..q+k-1, leaving the
/// non-orthonormal factor at the far end in the sweep direction.
template <Scalar T>
void split_window(std::vector<Core<T>>& cs, std::size_t q, const std::vector<std::size_t>& ext, Core<T> rem,
                  bool rightward, const TruncationRule& rule) {
    const std::size_t k = ext.size();
    if (rightward) {
        for (std::size_t j = 0; j + 1 < k; ++j) {
            const std::size_t rest = rem.extent / ext[j];
            Matrix<T> mat = detail::CMap<T>(rem.data.data(), ix(rem.left * ext[j]), ix(rest * rem.right));
            auto svd = truncated_svd<T>(mat, rule);
            cs[q + j] = detail::core_from_matrix<T>(svd.u, rem.left, ext[j], svd.rank());
            Matrix<T> sv = svd.vh;
            for (std::size_t s = 0; s < svd.rank(); ++s) sv.row(ix(s)) *= svd.s[s];
            rem = detail::core_from_matrix<T>(sv, svd.rank(), rest, rem.right);
        }
        cs[q + k - 1] = std::move(rem);
    } else {
        for (std::size_t j = k - 1; j > 0; --j) {
            const std::size_t rest = rem.extent / ext[j];
            Matrix<T> mat = detail::CMap<T>(rem.data.data(), ix(rem.left * rest), ix(ext[j] * rem.right));
            auto svd = truncated_svd<T>(mat, rule);
            cs[q + j] = detail::core_from_matrix<T>(svd.vh, svd.rank(), ext[j], rem.right);
            Matrix<T> us = svd.u;
            for (std::size_t s = 0; s < svd.rank(); ++s) us.col(ix(s)) *= svd.s[s];
            rem = detail::core_from_matrix<T>(us, rem.left, rest, svd.rank());
        }
        cs[q] = std::move(rem);
    }
}

template <Scalar T>
Vector<T> as_vector(const std::vector<T>& v) {
    return Eigen::Map<const Vector<T>>(v.data(), ix(v.size()));
}

std::string local_warning(const char* what, std::size_t sweep, std::size_t q, double residual) {
    std::ostringstream os;
    os << what << " did not converge at sweep " << sweep << ", core " << q << " (residual " << residual << ")";
    return os.str();
}

bool any_complex(std::initializer_list<const TensorTrain*> ts) {
    for (auto* t : ts)
        if (t->is_complex()) return true;
    return false;
}

/// Shared state of the two-site style sweeps: the iterate, the operator
/// cores and the operator environments.
template <Scalar T>
class Sweeper {
public:
    Sweeper(const LinearMap& map, const TensorTrain& guess, const SweepPlan& plan)
        : shape_(guess.shape()), x_(cores_as<T>(guess)), plan_(plan) {
        for (const auto& c : cores_as<T>(map.mpo())) w_.push_back(op_core(c));
        n_ = x_.size();
        k_ = std::min(plan.ncores, n_);
        detail::canonicalize(x_, 0);
        left_.assign(n_ + 1, Env<T>::ones());
        right_.assign(n_ + 1, Env<T>::ones());
        for (std::size_t q = n_; q-- > k_;) right_[q] = step_right_op(right_[q + 1], w_[q], x_[q], x_[q]);
    }

    std::size_t ncores() const { return n_; }
    std::size_t window() const { return k_; }
    TensorTrain result() const { return TensorTrain(shape_, x_, 0); }

    OpWindow<T> op_window(std::size_t q) const {
        OpCore<T> w = w_[q];
        for (std::size_t j = 1; j < k_; ++j) w = merge_ops(w, w_[q + j]);
        return window_of(w);
    }

    MatVec<T> local_op(std::size_t q) const {
        auto ow = op_window(q);
        const Env<T>& l = left_[q];
        const Env<T>& r = right_[q + k_];
        const std::size_t m = ow.m;
        return [ow, &l, &r, m](const Vector<T>& v) { return as_vector(apply_window(l, ow, r, v.data(), m)); };
    }

    Core<T> window_core(std::size_t q) const { return merge_window(x_, q, k_); }

    /// Writes the solved window back and moves the environments one step.
    void commit(std::size_t q, Core<T> sol, bool rightward) {
        std::vector<std::size_t> ext;
        for (std::size_t j = 0; j < k_; ++j) ext.push_back(x_[q + j].extent);
        split_window(x_, q, ext, std::move(sol), rightward, plan_.rule);
        if (rightward) {
            if (q + k_ < n_) {
                if (k_ == 1) detail::orthonormalize_left(x_, q, q + 1);
                left_[q + 1] = step_left_op(left_[q], w_[q], x_[q], x_[q]);
            }
        } else if (q > 0) {
            if (k_ == 1) detail::orthonormalize_right(x_, q, q - 1);
            right_[q + k_ - 1] = step_right_op(right_[q + k_], w_[q + k_ - 1], x_[q + k_ - 1], x_[q + k_ - 1]);
        }
    }

    std::vector<Core<T>>& cores() { return x_; }
    const Env<T>& left(std::size_t q) const { return left_[q]; }
    const Env<T>& right(std::size_t q) const { return right_[q]; }

protected:
    TrainShape shape_;
    std::vector<Core<T>> x_;
    std::vector<OpCore<T>> w_;
    SweepPlan plan_;
    std::size_t n_ = 0, k_ = 0;
    std::vector<Env<T>> left_, right_;
};

/// Sweep order shared by the solvers: left to right, then back.
template <class F>
void sweep_positions(std::size_t n, std::size_t k, F&& f) {
    for (std::size_t q = 0; q + k <= n; ++q) f(q, true);
    for (std::size_t q = n - k + 1; q-- > 0;) f(q, false);
}

void check_guess(const LinearMap& map, const TensorTrain& guess) {
    if (!guess.shape().compatible(map.shape())) throw ShapeError("guess does not match the linear map input shape");
    if (frobenius_norm(guess) == 0.0) throw InvalidGuess("guess is the zero train");
}

template <Scalar T>
EigResult eigsolve_impl(const LinearMap& map, const TensorTrain& guess, const SweepPlan& plan) {
    Sweeper<T> sw(map, guess, plan);
    SolveInfo info;
    double value = 0.0, prev = std::numeric_limits<double>::infinity();
    for (std::size_t sweep = 0; sweep < plan.nsweeps; ++sweep) {
        sweep_positions(sw.ncores(), sw.window(), [&](std::size_t q, bool rightward) {
            Core<T> win = sw.window_core(q);
            auto res = lanczos<T>(sw.local_op(q), as_vector(win.data), plan.local_iters, plan.local_tol);
            if (!res.converged) info.warnings.push_back(local_warning("lanczos", sweep, q, res.residual));
            std::copy(res.vector.data(), res.vector.data() + res.vector.size(), win.data.begin());
            value = res.value;
            info.history.push_back(value);
            sw.commit(q, std::move(win), rightward);
        });
        info.sweeps = sweep + 1;
        if (std::abs(prev - value) <= plan.tol * std::max(1.0, std::abs(value))) {
            info.converged = true;
            break;
        }
        prev = value;
    }
    TensorTrain v = sw.result();
    normalize(v, 0);
    const double nv = frobenius_norm(v);
    return EigResult{value, scaled(v, 1.0 / nv), std::move(info)};
}

double relative_residual(const LinearMap& map, const TensorTrain& x, const TensorTrain& b, double bnorm) {
    return distance(map.apply(x), b) / bnorm;
}

template <Scalar T>
LinsolveResult linsolve_dmrg(const LinearMap& map, const TensorTrain& b, const TensorTrain& guess,
                             const SweepPlan& plan) {
    Sweeper<T> sw(map, guess, plan);
    const auto bc = cores_as<T>(b);
    const std::size_t n = sw.ncores(), k = sw.window();
    std::vector<Matrix<T>> lb(n + 1), rb(n + 1);
    lb[0] = Matrix<T>::Ones(1, 1);
    rb[n] = Matrix<T>::Ones(1, 1);
    for (std::size_t q = n; q-- > k;) rb[q] = step_right_vec(rb[q + 1], sw.cores()[q], bc[q]);

    const double bnorm = frobenius_norm(b);
    SolveInfo info;
    double last = std::numeric_limits<double>::infinity();
    for (std::size_t sweep = 0; sweep < plan.nsweeps; ++sweep) {
        sweep_positions(n, k, [&](std::size_t q, bool rightward) {
            Core<T> win = sw.window_core(q);
            const auto rhs = as_vector(project_vec(lb[q], merge_window(bc, q, k), rb[q + k]));
            auto res = gmres<T>(sw.local_op(q), rhs, as_vector(win.data), plan.restart, plan.local_iters,
                                plan.local_tol);
            if (!res.converged) info.warnings.push_back(local_warning("gmres", sweep, q, res.residual));
            std::copy(res.vector.data(), res.vector.data() + res.vector.size(), win.data.begin());
            sw.commit(q, std::move(win), rightward);
            auto& x = sw.cores();
            if (rightward && q + k < n) lb[q + 1] = step_left_vec(lb[q], x[q], bc[q]);
            if (!rightward && q > 0) rb[q + k - 1] = step_right_vec(rb[q + k], x[q + k - 1], bc[q + k - 1]);
        });
        info.sweeps = sweep + 1;
        const double rel = relative_residual(map, sw.result(), b, bnorm);
        info.history.push_back(rel);
        if (rel <= plan.tol) {
            info.converged = true;
            break;
        }
        if (rel > 0.99 * last) {
            info.stagnated = true;
            break;
        }
        last = rel;
    }
    return LinsolveResult{sw.result(), std::move(info)};
}

template <Scalar T>
std::vector<Core<T>> random_cores(const TrainShape& shape, std::size_t rank, std::uint64_t seed) {
    const std::size_t n = shape.ncores();
    std::vector<std::size_t> ranks(n + 1, 1);
    std::size_t left = 1;
    for (std::size_t q = 1; q < n; ++q) {
        left = std::min(left * shape.core_extent(q - 1), rank);
        ranks[q] = left;
    }
    std::size_t right = 1;
    for (std::size_t q = n - 1; q > 0; --q) {
        right = std::min(right * shape.core_extent(q), rank);
        ranks[q] = std::min(ranks[q], right);
    }
    auto t = random_train(shape.with_ranks(ranks), seed, scalar_kind_of<T>());
    return cores_as<T>(t);
}

/// Alternating updates of single cores, left to right, with the basis of each
/// core enriched by the residual projected onto a rank-r auxiliary train z.
template <Scalar T>
LinsolveResult linsolve_amen(const LinearMap& map, const TensorTrain& b, const TensorTrain& guess,
                             const SweepPlan& plan) {
    const TrainShape shape = guess.shape();
    const std::size_t n = shape.ncores();
    std::vector<OpCore<T>> w;
    for (const auto& c : cores_as<T>(map.mpo())) w.push_back(op_core(c));
    const auto bc = cores_as<T>(b);
    auto x = cores_as<T>(guess);
    auto z = random_cores<T>(shape, plan.enrich_rank, 0x5eed);

    const double bnorm = frobenius_norm(b);
    SolveInfo info;
    double last = std::numeric_limits<double>::infinity();

    std::vector<Env<T>> la(n + 1, Env<T>::ones()), ra(n + 1, Env<T>::ones());
    std::vector<Env<T>> lza(n + 1, Env<T>::ones()), rza(n + 1, Env<T>::ones());
    std::vector<Matrix<T>> lb(n + 1), rb(n + 1), lzb(n + 1), rzb(n + 1);

    for (std::size_t sweep = 0; sweep < plan.nsweeps; ++sweep) {
        detail::canonicalize(x, 0);
        detail::canonicalize(z, 0);
        lb[0] = lzb[0] = rb[n] = rzb[n] = Matrix<T>::Ones(1, 1);
        for (std::size_t q = n; q-- > 1;) {
            ra[q] = step_right_op(ra[q + 1], w[q], x[q], x[q]);
            rza[q] = step_right_op(rza[q + 1], w[q], z[q], x[q]);
            rb[q] = step_right_vec(rb[q + 1], x[q], bc[q]);
            rzb[q] = step_right_vec(rzb[q + 1], z[q], bc[q]);
        }

        for (std::size_t q = 0; q < n; ++q) {
            const auto ow = window_of(w[q]);
            const std::size_t m = ow.m;
            MatVec<T> op = [&](const Vector<T>& v) { return as_vector(apply_window(la[q], ow, ra[q + 1], v.data(), m)); };
            const auto rhs = as_vector(project_vec(lb[q], bc[q], rb[q + 1]));
            auto res = gmres<T>(op, rhs, as_vector(x[q].data), plan.restart, plan.local_iters, plan.local_tol);
            if (!res.converged) info.warnings.push_back(local_warning("gmres", sweep, q, res.residual));
            std::copy(res.vector.data(), res.vector.data() + res.vector.size(), x[q].data.begin());
            if (q + 1 == n) break;

            // z update: residual in the z frame on both sides.
            {
                auto zr = project_vec(lzb[q], bc[q], rzb[q + 1]);
                const auto ax = apply_window(lza[q], ow, rza[q + 1], x[q].data.data(), m);
                for (std::size_t i = 0; i < zr.size(); ++i) zr[i] -= ax[i];
                const std::size_t zl = z[q].left, zrr = z[q].right;
                Matrix<T> zm = detail::CMap<T>(zr.data(), ix(zl * m), ix(zrr));
                auto svd = truncated_svd<T>(zm, {zrr, 0.0});
                Matrix<T> u = Matrix<T>::Zero(ix(zl * m), ix(zrr));
                u.leftCols(ix(svd.rank())) = svd.u;
                z[q] = detail::core_from_matrix<T>(u, zl, m, zrr);
            }

            // enrichment: residual with the x frame on the left and z on the right.
            auto e = project_vec(lb[q], bc[q], rzb[q + 1]);
            {
                const auto ax = apply_window(la[q], ow, rza[q + 1], x[q].data.data(), m);
                for (std::size_t i = 0; i < e.size(); ++i) e[i] -= ax[i];
            }
            const std::size_t xl = x[q].left, xr = x[q].right, zr = z[q + 1].left;
            Matrix<T> aug(ix(xl * m), ix(xr + zr));
            aug.leftCols(ix(xr)) = detail::left_unfold(x[q]);
            aug.rightCols(ix(zr)) = detail::CMap<T>(e.data(), ix(xl * m), ix(zr));
            Core<T> next(xr + zr, x[q + 1].extent, x[q + 1].right);
            detail::Map<T>(next.data.data(), ix(xr), ix(next.extent * next.right)) = detail::right_unfold(x[q + 1]);
            auto svd = truncated_svd<T>(aug, plan.rule);
            Matrix<T> sv = svd.vh;
            for (std::size_t s = 0; s < svd.rank(); ++s) sv.row(ix(s)) *= svd.s[s];
            x[q] = detail::core_from_matrix<T>(svd.u, xl, m, svd.rank());
            x[q + 1] = detail::mul_left(sv, next);

            la[q + 1] = step_left_op(la[q], w[q], x[q], x[q]);
            lza[q + 1] = step_left_op(lza[q], w[q], z[q], x[q]);
            lb[q + 1] = step_left_vec(lb[q], x[q], bc[q]);
            lzb[q + 1] = step_left_vec(lzb[q], z[q], bc[q]);
        }

        info.sweeps = sweep + 1;
        const double rel = relative_residual(map, TensorTrain(shape, x), b, bnorm);
        info.history.push_back(rel);
        if (rel <= plan.tol) {
            info.converged = true;
            break;
        }
        if (rel > 0.99 * last) {
            info.stagnated = true;
            break;
        }
        last = rel;
    }
    return LinsolveResult{TensorTrain(shape, x), std::move(info)};
}

} // namespace

EigResult eigsolve(const LinearMap& map, const TensorTrain& guess, const SweepPlan& plan) {
    check_guess(map, guess);
    plan.validate(guess.ncores());
    if (any_complex({&map.mpo(), &guess})) return eigsolve_impl<cplx>(map, guess, plan);
    return eigsolve_impl<double>(map, guess, plan);
}

LinsolveResult linsolve(const LinearMap& map, const TensorTrain& b, const TensorTrain& guess, const SweepPlan& plan,
                        LinsolveMethod method) {
    check_guess(map, guess);
    if (!b.shape().compatible(map.shape())) throw ShapeError("right-hand side does not match the map output shape");
    plan.validate(guess.ncores());
    const double bnorm = frobenius_norm(b);
    if (bnorm == 0.0) {
        SolveInfo info;
        info.converged = true;
        info.history.push_back(0.0);
        return LinsolveResult{scaled(guess, 0.0), std::move(info)};
    }
    const bool cx = any_complex({&map.mpo(), &guess, &b});
    if (method == LinsolveMethod::Dmrg)
        return cx ? linsolve_dmrg<cplx>(map, b, guess, plan) : linsolve_dmrg<double>(map, b, guess, plan);
    return cx ? linsolve_amen<cplx>(map, b, guess, plan) : linsolve_amen<double>(map, b, guess, plan);
}

// ---------------------------------------------------------------------------
// min_max

namespace {

using Tuple = std::vector<std::size_t>;

/// Beam search for large |u|: prefixes (or suffixes) are scored by the norm
/// of the slice they fix, which the orthonormal remainder makes exact.
std::vector<Tuple> beam(const TensorTrain& u, std::size_t k, bool rightward) {
    const std::size_t n = u.ncores();
    auto cs = cores_as<double>(u);
    detail::canonicalize(cs, rightward ? 0 : n - 1);

    struct Cand {
        Tuple idx;
        Eigen::RowVectorXd v;
        double score;
    };
    std::vector<Cand> beam{{Tuple(n, 0), Eigen::RowVectorXd::Ones(1), 1.0}};
    for (std::size_t step = 0; step < n; ++step) {
        const std::size_t q = rightward ? step : n - 1 - step;
        const auto& c = cs[q];
        std::vector<Cand> next;
        for (const auto& cand : beam)
            for (std::size_t s = 0; s < c.extent; ++s) {
                Eigen::RowVectorXd v;
                if (rightward) {
                    v = Eigen::RowVectorXd::Zero(ix(c.right));
                    for (std::size_t a = 0; a < c.left; ++a)
                        for (std::size_t b = 0; b < c.right; ++b) v(ix(b)) += cand.v(ix(a)) * c(a, s, b);
                } else {
                    v = Eigen::RowVectorXd::Zero(ix(c.left));
                    for (std::size_t a = 0; a < c.left; ++a)
                        for (std::size_t b = 0; b < c.right; ++b) v(ix(a)) += c(a, s, b) * cand.v(ix(b));
                }
                Cand nc{cand.idx, std::move(v), 0.0};
                nc.idx[q] = s;
                nc.score = nc.v.norm();
                next.push_back(std::move(nc));
            }
        std::stable_sort(next.begin(), next.end(), [](const Cand& a, const Cand& b) { return a.score > b.score; });
        if (next.size() > k) next.resize(k);
        beam = std::move(next);
    }
    std::vector<Tuple> out;
    for (auto& c : beam) out.push_back(std::move(c.idx));
    return out;
}

std::vector<double> values_at(const TensorTrain& t, const std::vector<Tuple>& locals) {
    const TrainShape& sh = t.shape();
    std::vector<std::vector<std::size_t>> idx(sh.ndims(), std::vector<std::size_t>(locals.size()));
    std::vector<std::size_t> dimidx(sh.ndims());
    for (std::size_t k = 0; k < locals.size(); ++k) {
        sh.dim_indices(locals[k], dimidx);
        for (std::size_t d = 0; d < sh.ndims(); ++d) idx[d][k] = dimidx[d];
    }
    return evaluate(t, idx).real();
}

} // namespace

MinMax min_max(const TensorTrain& t, std::size_t k) {
    if (k == 0) throw ShapeError("min_max needs k >= 1");
    if (t.is_complex()) throw ShapeError("min_max needs a real train");

    std::vector<std::size_t> widths;
    for (std::size_t w = 1; w < k; w *= 2) widths.push_back(w);
    widths.push_back(k);

    // Per width: large |t| finds one extreme, and shifting by the most extreme
    // entry so far turns the other one into the largest magnitude. Each width
    // only adds candidates, so a larger k never does worse.
    std::vector<Tuple> pool;
    auto search = [&](const TensorTrain& u, std::size_t w) {
        for (bool dir : {true, false}) {
            auto c = beam(u, w, dir);
            pool.insert(pool.end(), c.begin(), c.end());
        }
    };
    for (std::size_t w : widths) {
        search(t, w);
        const auto vals = values_at(t, pool);
        std::size_t best = 0;
        for (std::size_t i = 1; i < vals.size(); ++i)
            if (std::abs(vals[i]) > std::abs(vals[best])) best = i;
        const TensorTrain offset = constant(t.shape(), -vals[best]);
        search(add(Exact{}, {t, offset}), w);
    }

    std::sort(pool.begin(), pool.end());
    pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
    const auto vals = values_at(t, pool);
    std::size_t imin = 0, imax = 0;
    for (std::size_t i = 1; i < vals.size(); ++i) {
        if (vals[i] < vals[imin]) imin = i;
        if (vals[i] > vals[imax]) imax = i;
    }
    const TrainShape& sh = t.shape();
    MinMax out;
    out.min.value = vals[imin];
    out.max.value = vals[imax];
    out.min.index.resize(sh.ndims());
    out.max.index.resize(sh.ndims());
    sh.dim_indices(pool[imin], out.min.index);
    sh.dim_indices(pool[imax], out.max.index);
    return out;
}

} // namespace qtt
