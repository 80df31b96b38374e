#include "qtt/arithmetic.hpp"

#include <algorithm>
#include <cctype>
#include <deque>
#include <map>

#include "detail/linalg.hpp"
#include "qtt/cross.hpp"
#include "qtt/errors.hpp"

namespace qtt {

void validate(const ApproxPolicy& policy) {
    std::visit(
        [](const auto& p) {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, Decomposition>) {
                p.rule.validate();
                if (p.window == 0) throw ShapeError("zip-up window must be >= 1");
            } else if constexpr (std::is_same_v<P, Variational>) {
                p.rule.validate();
                if (p.ncores == 0 || p.nsweeps == 0) throw ShapeError("variational ncores and nsweeps must be >= 1");
            } else if constexpr (std::is_same_v<P, Cross>) {
                if (!(p.eps > 0.0)) throw ShapeError("cross eps must be positive");
                if (p.max_rank == 0 || p.nsweeps == 0) throw ShapeError("cross max_rank and nsweeps must be >= 1");
            }
        },
        policy);
}

// ---------------------------------------------------------------------------
// subscripts

EinsumSpec EinsumSpec::parse(std::string_view s) {
    const auto arrow = s.find("->");
    if (arrow == std::string_view::npos) throw ParseError("einsum subscripts need '->'");
    if (s.find("->", arrow + 2) != std::string_view::npos) throw ParseError("einsum subscripts contain two '->'");

    auto strip = [](std::string_view v) {
        std::string out;
        for (char c : v)
            if (!std::isspace(static_cast<unsigned char>(c))) out.push_back(c);
        return out;
    };
    auto check_term = [](const std::string& term, const char* what) {
        for (std::size_t k = 0; k < term.size(); ++k) {
            if (!std::isalpha(static_cast<unsigned char>(term[k])))
                throw ParseError(std::string("invalid character '") + term[k] + "' in einsum " + what);
            if (term.find(term[k], k + 1) != std::string::npos)
                throw ParseError(std::string("letter '") + term[k] + "' repeated in einsum " + what);
        }
    };

    EinsumSpec spec;
    const std::string lhs = strip(s.substr(0, arrow));
    spec.output = strip(s.substr(arrow + 2));
    std::size_t start = 0;
    while (true) {
        const auto comma = lhs.find(',', start);
        spec.inputs.push_back(lhs.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    for (const auto& in : spec.inputs) check_term(in, "input");
    check_term(spec.output, "output");
    for (char c : spec.output) {
        bool found = false;
        for (const auto& in : spec.inputs) found |= in.find(c) != std::string::npos;
        if (!found) throw ParseError(std::string("output letter '") + c + "' does not appear in any input");
    }
    return spec;
}

std::string EinsumSpec::str() const {
    std::string s;
    for (std::size_t k = 0; k < inputs.size(); ++k) s += (k ? "," : "") + inputs[k];
    return s + "->" + output;
}

// ---------------------------------------------------------------------------
// addition

namespace {

template <Scalar T>
TensorTrain add_exact(const std::vector<const TensorTrain*>& ts) {
    const auto& shape = ts.front()->shape();
    const auto n = shape.ncores();
    std::vector<std::vector<Core<T>>> ops;
    for (auto* t : ts) ops.push_back(cores_as<T>(*t));

    std::vector<Core<T>> out;
    for (std::size_t q = 0; q < n; ++q) {
        const std::size_t m = shape.core_extent(q);
        std::size_t L = 0, R = 0;
        for (const auto& o : ops) {
            L += o[q].left;
            R += o[q].right;
        }
        if (q == 0) L = 1;
        if (q == n - 1) R = 1;
        Core<T> c(L, m, R);
        std::size_t l0 = 0, r0 = 0;
        for (const auto& o : ops) {
            const auto& src = o[q];
            for (std::size_t a = 0; a < src.left; ++a)
                for (std::size_t s = 0; s < m; ++s)
                    for (std::size_t b = 0; b < src.right; ++b) c(l0 + a, s, r0 + b) += src(a, s, b);
            if (q != 0) l0 += src.left;
            if (q != n - 1) r0 += src.right;
        }
        out.push_back(std::move(c));
    }
    return TensorTrain(shape, std::move(out));
}

} // namespace

namespace {

TensorTrain apply_policy(const ApproxPolicy& policy, const TensorTrain& exact, OpStats* stats);

} // namespace

TensorTrain add(const ApproxPolicy& policy, const TrainRefs& trains, OpStats* stats) {
    validate(policy);
    if (trains.empty()) throw ShapeError("add needs at least one train");
    std::vector<const TensorTrain*> ts;
    bool complex = false;
    for (const auto& t : trains) {
        if (!t.get().shape().compatible(trains.front().get().shape()))
            throw ShapeError("add: shapes differ (" + trains.front().get().shape().describe() + " vs " +
                             t.get().shape().describe() + ")");
        ts.push_back(&t.get());
        complex |= t.get().is_complex();
    }
    auto exact = complex ? add_exact<cplx>(ts) : add_exact<double>(ts);
    return apply_policy(policy, exact, stats);
}

// ---------------------------------------------------------------------------
// pairwise contraction

namespace {

struct Operand {
    const TensorTrain* t = nullptr;
    std::string letters;

    int dim_of(char c) const {
        const auto p = letters.find(c);
        return p == std::string::npos ? -1 : static_cast<int>(p);
    }
};

struct Site {
    int a = -1;
    int b = -1;
};

std::string letter_msg(char c) { return std::string("letter '") + c + "'"; }

/// Which cores pair up, plus the output layout.
struct PairPlan {
    std::vector<Site> sites;
    std::vector<Dimension> out_dims;
    std::vector<DigitGroup> site_groups; // output digits per site (may be empty)
};

PairPlan plan_pair(const Operand& A, const Operand* B, const std::string& out) {
    PairPlan plan;
    const auto& sa = A.t->shape();
    const int na = static_cast<int>(sa.ncores());
    const int nb = B ? static_cast<int>(B->t->shape().ncores()) : 0;

    for (char c : out) {
        if (const int d = A.dim_of(c); d >= 0)
            plan.out_dims.push_back(sa.dims()[static_cast<std::size_t>(d)]);
        else if (B && B->dim_of(c) >= 0)
            plan.out_dims.push_back(B->t->shape().dims()[static_cast<std::size_t>(B->dim_of(c))]);
        else
            throw ParseError("output " + letter_msg(c) + " missing from the operands");
    }

    std::string shared;
    if (B)
        for (char c : A.letters)
            if (B->dim_of(c) >= 0) shared.push_back(c);

    if (shared.empty()) {
        for (int q = 0; q < na; ++q) plan.sites.push_back({q, -1});
        for (int q = 0; q < nb; ++q) plan.sites.push_back({-1, q});
    } else {
        const auto& sb = B->t->shape();
        bool have_offset = false;
        int offset = 0, lo = na, hi = -1;
        for (char c : shared) {
            const auto da = static_cast<std::size_t>(A.dim_of(c));
            const auto db = static_cast<std::size_t>(B->dim_of(c));
            if (!(sa.dims()[da] == sb.dims()[db]))
                throw ConformanceError(letter_msg(c) + " has different factorizations in the two operands");
            for (std::size_t p = 0; p < sa.dims()[da].ndigits(); ++p) {
                const int ca = static_cast<int>(sa.locate({da, p}).first);
                const int cb = static_cast<int>(sb.locate({db, p}).first);
                if (!have_offset) {
                    offset = cb - ca;
                    have_offset = true;
                } else if (cb - ca != offset) {
                    throw ConformanceError(letter_msg(c) + ": digit " + std::to_string(p) + " sits on core " +
                                           std::to_string(ca) + " of the first operand and core " +
                                           std::to_string(cb) + " of the second, which breaks the core alignment");
                }
                lo = std::min(lo, ca);
                hi = std::max(hi, ca);
            }
        }
        if (lo + offset < 0 || hi + offset >= nb)
            throw ConformanceError("shared letters '" + shared + "' do not fit a common core window");
        const bool pre_a = lo > 0, pre_b = lo + offset > 0;
        const bool post_a = hi < na - 1, post_b = hi + offset < nb - 1;
        if ((pre_a && pre_b) || (post_a && post_b))
            throw ConformanceError("contracting letters '" + shared + "' on cores " + std::to_string(lo) + ".." +
                                   std::to_string(hi) + " leaves both operands with cores " +
                                   ((pre_a && pre_b) ? "before" : "after") + " the window; the result is not a train");
        for (int q = 0; q < lo; ++q) plan.sites.push_back({q, -1});
        for (int q = 0; q < lo + offset; ++q) plan.sites.push_back({-1, q});
        for (int q = lo; q <= hi; ++q) plan.sites.push_back({q, q + offset});
        for (int q = hi + 1; q < na; ++q) plan.sites.push_back({q, -1});
        for (int q = hi + offset + 1; q < nb; ++q) plan.sites.push_back({-1, q});
    }

    for (const auto& site : plan.sites) {
        DigitGroup g;
        auto collect = [&](const Operand& op, int core, bool skip_shared) {
            if (core < 0) return;
            for (const auto& ref : op.t->shape().groups()[static_cast<std::size_t>(core)]) {
                const char c = op.letters[ref.dim];
                if (skip_shared && A.dim_of(c) >= 0) continue;
                const auto o = out.find(c);
                if (o != std::string::npos) g.push_back({o, ref.pos});
            }
        };
        collect(A, site.a, false);
        if (B) collect(*B, site.b, site.a >= 0);
        std::sort(g.begin(), g.end());
        plan.site_groups.push_back(std::move(g));
    }
    return plan;
}

struct Decoded {
    std::vector<std::size_t> bases;
    std::vector<char> letters;
    std::vector<std::size_t> pos;
};

Decoded decode_group(const Operand& op, int core) {
    Decoded d;
    if (core < 0) return d;
    const auto& shape = op.t->shape();
    for (const auto& ref : shape.groups()[static_cast<std::size_t>(core)]) {
        d.bases.push_back(shape.dims()[ref.dim][ref.pos].base);
        d.letters.push_back(op.letters[ref.dim]);
        d.pos.push_back(ref.pos);
    }
    return d;
}

std::vector<std::vector<std::size_t>> digit_table(const std::vector<std::size_t>& bases) {
    std::size_t ext = 1;
    for (auto b : bases) ext *= b;
    std::vector<std::vector<std::size_t>> tab(ext, std::vector<std::size_t>(bases.size()));
    for (std::size_t s = 0; s < ext; ++s) {
        std::size_t rem = s;
        for (std::size_t k = bases.size(); k-- > 0;) {
            tab[s][k] = rem % bases[k];
            rem /= bases[k];
        }
    }
    return tab;
}

template <Scalar T>
Core<T> local_contract(const Operand& A, const Operand* B, const Site& site, const std::vector<Core<T>>* ca,
                       const std::vector<Core<T>>* cb, const DigitGroup& group, const std::vector<Dimension>& dims,
                       const std::string& out) {
    static const Core<T> unit(1, 1, 1, std::vector<T>{T(1)});
    const Core<T>& xa = site.a >= 0 ? (*ca)[static_cast<std::size_t>(site.a)] : unit;
    const Core<T>& xb = site.b >= 0 ? (*cb)[static_cast<std::size_t>(site.b)] : unit;
    const auto da = decode_group(A, site.a);
    const auto db = B ? decode_group(*B, site.b) : Decoded{};
    const auto ta = digit_table(da.bases);
    const auto tb = digit_table(db.bases);

    // shared digits: (index in a, index in b)
    std::vector<std::pair<std::size_t, std::size_t>> eq;
    for (std::size_t i = 0; i < da.letters.size(); ++i)
        for (std::size_t j = 0; j < db.letters.size(); ++j)
            if (da.letters[i] == db.letters[j] && da.pos[i] == db.pos[j]) eq.emplace_back(i, j);

    // output digit k is read from operand side (0 = a, 1 = b) at an index
    std::vector<std::pair<int, std::size_t>> src;
    std::vector<std::size_t> stride(group.size());
    std::size_t extent = 1;
    for (std::size_t k = group.size(); k-- > 0;) {
        stride[k] = extent;
        extent *= dims[group[k].dim][group[k].pos].base;
    }
    for (const auto& ref : group) {
        const char c = out[ref.dim];
        bool found = false;
        for (std::size_t i = 0; i < da.letters.size() && !found; ++i)
            if (da.letters[i] == c && da.pos[i] == ref.pos) {
                src.emplace_back(0, i);
                found = true;
            }
        for (std::size_t j = 0; j < db.letters.size() && !found; ++j)
            if (db.letters[j] == c && db.pos[j] == ref.pos) {
                src.emplace_back(1, j);
                found = true;
            }
    }

    const std::size_t rbl = xb.left, rbr = xb.right;
    Core<T> res(xa.left * xb.left, extent, xa.right * xb.right);
    for (std::size_t sa = 0; sa < xa.extent; ++sa)
        for (std::size_t sb = 0; sb < xb.extent; ++sb) {
            bool ok = true;
            for (const auto& [i, j] : eq) ok &= ta[sa][i] == tb[sb][j];
            if (!ok) continue;
            std::size_t o = 0;
            for (std::size_t k = 0; k < src.size(); ++k)
                o += (src[k].first == 0 ? ta[sa][src[k].second] : tb[sb][src[k].second]) * stride[k];
            for (std::size_t al = 0; al < xa.left; ++al)
                for (std::size_t ar = 0; ar < xa.right; ++ar) {
                    const T va = xa(al, sa, ar);
                    if (va == T(0)) continue;
                    for (std::size_t bl = 0; bl < rbl; ++bl) {
                        const T* pb = &xb.data[(bl * xb.extent + sb) * rbr];
                        T* pr = &res.data[((al * rbl + bl) * extent + o) * res.right + ar * rbr];
                        for (std::size_t br = 0; br < rbr; ++br) pr[br] += va * pb[br];
                    }
                }
        }
    return res;
}

template <Scalar T>
TensorTrain contract_pair(const Operand& A, const Operand* B, const std::string& out) {
    const auto plan = plan_pair(A, B, out);
    const auto ca = cores_as<T>(*A.t);
    std::vector<Core<T>> cb;
    if (B) cb = cores_as<T>(*B->t);

    std::vector<Core<T>> sites;
    for (std::size_t k = 0; k < plan.sites.size(); ++k)
        sites.push_back(local_contract<T>(A, B, plan.sites[k], &ca, B ? &cb : nullptr, plan.site_groups[k],
                                          plan.out_dims, out));

    // Sites without output digits are bond matrices; fold them into a neighbor.
    std::vector<Core<T>> cores;
    std::vector<DigitGroup> groups;
    std::optional<Matrix<T>> pending;
    for (std::size_t k = 0; k < sites.size(); ++k) {
        auto& s = sites[k];
        if (plan.site_groups[k].empty()) {
            Matrix<T> m = detail::left_unfold(s);
            pending = pending ? Matrix<T>(*pending * m) : m;
            continue;
        }
        if (pending) {
            s = detail::mul_left(*pending, s);
            pending.reset();
        }
        cores.push_back(std::move(s));
        groups.push_back(plan.site_groups[k]);
    }
    if (pending) {
        if (cores.empty()) {
            cores.push_back(detail::core_from_matrix<T>(*pending, 1, 1, 1));
            groups.emplace_back();
        } else {
            cores.back() = detail::mul_right(cores.back(), *pending);
        }
    }
    TrainShape shape(plan.out_dims, std::move(groups));
    return TensorTrain(shape, std::move(cores));
}

/// Output letters of one pairwise step: everything still needed later.
std::string step_output(const std::string& a, const std::string& b, const EinsumSpec& spec, std::size_t next) {
    auto needed = [&](char c) {
        if (spec.output.find(c) != std::string::npos) return true;
        for (std::size_t k = next; k < spec.inputs.size(); ++k)
            if (spec.inputs[k].find(c) != std::string::npos) return true;
        return false;
    };
    std::string out;
    if (next >= spec.inputs.size()) return spec.output;
    for (char c : spec.output)
        if ((a.find(c) != std::string::npos || b.find(c) != std::string::npos) && out.find(c) == std::string::npos)
            out.push_back(c);
    for (char c : a + b)
        if (needed(c) && out.find(c) == std::string::npos) out.push_back(c);
    return out;
}

} // namespace

TensorTrain einsum_exact(const EinsumSpec& spec, const TrainRefs& operands) {
    if (operands.size() != spec.inputs.size() || operands.empty() || operands.size() > 2)
        throw ShapeError("einsum_exact takes one or two operands matching the subscripts");
    Operand A{&operands[0].get(), spec.inputs[0]};
    if (A.letters.size() != A.t->shape().ndims())
        throw ShapeError("subscript '" + A.letters + "' does not match a train with " +
                         std::to_string(A.t->shape().ndims()) + " dimensions");
    std::optional<Operand> B;
    if (operands.size() == 2) {
        B = Operand{&operands[1].get(), spec.inputs[1]};
        if (B->letters.size() != B->t->shape().ndims())
            throw ShapeError("subscript '" + B->letters + "' does not match a train with " +
                             std::to_string(B->t->shape().ndims()) + " dimensions");
    }
    const bool complex = A.t->is_complex() || (B && B->t->is_complex());
    const Operand* pb = B ? &*B : nullptr;
    return complex ? contract_pair<cplx>(A, pb, spec.output) : contract_pair<double>(A, pb, spec.output);
}

TensorTrain einsum(const ApproxPolicy& policy, std::string_view subscripts, const TrainRefs& operands,
                   OpStats* stats) {
    validate(policy);
    const auto spec = EinsumSpec::parse(subscripts);
    if (operands.size() != spec.inputs.size())
        throw ShapeError("einsum '" + spec.str() + "' expects " + std::to_string(spec.inputs.size()) +
                         " operands, got " + std::to_string(operands.size()));
    if (stats) *stats = {};

    if (spec.inputs.size() == 1) {
        EinsumSpec one{{spec.inputs[0]}, spec.output};
        return apply_policy(policy, einsum_exact(one, operands), stats);
    }
    TensorTrain acc = operands[0].get();
    std::string letters = spec.inputs[0];
    for (std::size_t k = 1; k < spec.inputs.size(); ++k) {
        const auto out = step_output(letters, spec.inputs[k], spec, k + 1);
        EinsumSpec step{{letters, spec.inputs[k]}, out};
        OpStats local;
        acc = apply_policy(policy, einsum_exact(step, {acc, operands[k].get()}), stats ? &local : nullptr);
        if (stats) {
            stats->discarded += local.discarded;
            stats->history.insert(stats->history.end(), local.history.begin(), local.history.end());
        }
        letters = out;
    }
    return acc;
}

TensorTrain truncate(const ApproxPolicy& policy, const TensorTrain& t, OpStats* stats) {
    validate(policy);
    if (stats) *stats = {};
    return apply_policy(policy, t, stats);
}

// ---------------------------------------------------------------------------
// zip-up

namespace {

template <Scalar T>
TensorTrain zip_up_impl(const TensorTrain& exact, const TruncationRule& rule, std::size_t window, double& discarded) {
    auto cores = cores_as<T>(exact);
    const std::size_t n = cores.size();
    discarded = 0.0;
    if (n == 1) return TensorTrain(exact.shape(), std::move(cores), 0);

    detail::orthonormalize_right(cores, n - 1, 0);
    const std::size_t w = std::min(window, n);

    Core<T> super = cores[0];
    std::deque<std::size_t> ext{cores[0].extent};
    std::size_t next = 1;
    for (; next < w; ++next) {
        super = detail::merge(super, cores[next]);
        ext.push_back(cores[next].extent);
    }

    std::vector<Core<T>> out;
    for (std::size_t q = 0; q + 1 < n; ++q) {
        const std::size_t m1 = ext.front();
        const std::size_t rest = super.extent / m1;
        Matrix<T> mat = detail::CMap<T>(super.data.data(), detail::ix(super.left * m1), detail::ix(rest * super.right));
        auto svd = truncated_svd<T>(mat, rule);
        discarded += svd.discarded;
        const std::size_t r = svd.rank();
        out.push_back(detail::core_from_matrix<T>(svd.u, super.left, m1, r));
        Matrix<T> sv = svd.vh;
        for (std::size_t k = 0; k < r; ++k) sv.row(detail::ix(k)) *= svd.s[k];
        Core<T> remainder = detail::core_from_matrix<T>(sv, r, rest, super.right);
        ext.pop_front();
        if (next < n) {
            remainder = detail::merge(remainder, cores[next]);
            ext.push_back(cores[next].extent);
            ++next;
        }
        super = std::move(remainder);
    }
    out.push_back(std::move(super));
    return TensorTrain(exact.shape(), std::move(out), n - 1);
}

} // namespace

TensorTrain zip_up(const TensorTrain& exact, const TruncationRule& rule, std::size_t window, OpStats* stats) {
    rule.validate();
    if (window == 0) throw ShapeError("zip-up window must be >= 1");
    double disc = 0.0;
    auto out = exact.is_complex() ? zip_up_impl<cplx>(exact, rule, window, disc)
                                  : zip_up_impl<double>(exact, rule, window, disc);
    if (stats) stats->discarded += disc;
    return out;
}

// ---------------------------------------------------------------------------
// variational fit

namespace {

template <Scalar T>
class Fitter {
public:
    Fitter(const TensorTrain& exact, const TensorTrain& guess, const Variational& policy)
        : shape_(exact.shape()), e_(cores_as<T>(exact)), c_(cores_as<T>(guess)), policy_(policy) {
        n_ = e_.size();
        k_ = std::min(policy.ncores, n_);
        detail::canonicalize(c_, 0);
        norm_e2_ = frobenius_norm(exact);
        norm_e2_ *= norm_e2_;
        left_.assign(n_ + 1, Matrix<T>());
        right_.assign(n_ + 1, Matrix<T>());
        left_[0] = Matrix<T>::Ones(1, 1);
        right_[n_] = Matrix<T>::Ones(1, 1);
        for (std::size_t q = n_; q-- > k_;) right_[q] = step_right(right_[q + 1], c_[q], e_[q]);
    }

    void run(std::vector<double>& history, const TensorTrain& exact) {
        for (std::size_t sweep = 0; sweep < policy_.nsweeps; ++sweep) {
            for (std::size_t q = 0; q + k_ <= n_; ++q) history.push_back(update(q, true, exact));
            for (std::size_t q = n_ - k_ + 1; q-- > 0;) history.push_back(update(q, false, exact));
        }
    }

    TensorTrain result() const { return TensorTrain(shape_, c_, 0); }

private:
    static Matrix<T> step_left(const Matrix<T>& l, const Core<T>& c, const Core<T>& e) {
        Matrix<T> tmp = l * detail::right_unfold(e); // rC x (m rE')
        detail::CMap<T> t2(tmp.data(), detail::ix(c.left * c.extent), detail::ix(e.right));
        return detail::left_unfold(c).adjoint() * t2;
    }

    static Matrix<T> step_right(const Matrix<T>& r, const Core<T>& c, const Core<T>& e) {
        Matrix<T> tmp = detail::left_unfold(e) * r.transpose(); // (rE m) x rC'
        detail::CMap<T> t2(tmp.data(), detail::ix(e.left), detail::ix(e.extent * c.right));
        return detail::right_unfold(c).conjugate() * t2.transpose();
    }

    double update(std::size_t q, bool rightward, const TensorTrain& exact) {
        Core<T> ew = e_[q];
        for (std::size_t j = 1; j < k_; ++j) ew = detail::merge(ew, e_[q + j]);
        const Matrix<T>& l = left_[q];
        const Matrix<T>& r = right_[q + k_];
        Core<T> p = detail::mul_right(detail::mul_left(l, ew), Matrix<T>(r.transpose()));
        double p2 = 0.0;
        for (const auto& v : p.data) p2 += std::norm(v);

        std::vector<std::size_t> ext;
        for (std::size_t j = 0; j < k_; ++j) ext.push_back(e_[q + j].extent);
        double disc2 = 0.0;
        if (rightward) {
            Core<T> rem = std::move(p);
            for (std::size_t j = 0; j + 1 < k_; ++j) {
                const std::size_t rest = rem.extent / ext[j];
                Matrix<T> mat = detail::CMap<T>(rem.data.data(), detail::ix(rem.left * ext[j]), detail::ix(rest * rem.right));
                auto svd = truncated_svd<T>(mat, policy_.rule);
                disc2 += svd.discarded * svd.discarded;
                c_[q + j] = detail::core_from_matrix<T>(svd.u, rem.left, ext[j], svd.rank());
                Matrix<T> sv = svd.vh;
                for (std::size_t s = 0; s < svd.rank(); ++s) sv.row(detail::ix(s)) *= svd.s[s];
                rem = detail::core_from_matrix<T>(sv, svd.rank(), rest, rem.right);
            }
            c_[q + k_ - 1] = std::move(rem);
            if (q + k_ < n_) {
                if (k_ == 1) detail::orthonormalize_left(c_, q, q + 1);
                left_[q + 1] = step_left(left_[q], c_[q], e_[q]);
            }
        } else {
            Core<T> rem = std::move(p);
            for (std::size_t j = k_ - 1; j > 0; --j) {
                const std::size_t rest = rem.extent / ext[j];
                Matrix<T> mat = detail::CMap<T>(rem.data.data(), detail::ix(rem.left * rest), detail::ix(ext[j] * rem.right));
                auto svd = truncated_svd<T>(mat, policy_.rule);
                disc2 += svd.discarded * svd.discarded;
                c_[q + j] = detail::core_from_matrix<T>(svd.vh, svd.rank(), ext[j], rem.right);
                Matrix<T> us = svd.u;
                for (std::size_t s = 0; s < svd.rank(); ++s) us.col(detail::ix(s)) *= svd.s[s];
                rem = detail::core_from_matrix<T>(us, rem.left, rest, svd.rank());
            }
            c_[q] = std::move(rem);
            if (q > 0) {
                if (k_ == 1) detail::orthonormalize_right(c_, q, q - 1);
                right_[q + k_ - 1] = step_right(right_[q + k_], c_[q + k_ - 1], e_[q + k_ - 1]);
            }
        }

        if (policy_.record_history) return distance(TensorTrain(shape_, c_), exact);
        return std::sqrt(std::max(0.0, norm_e2_ - p2 + disc2));
    }

    TrainShape shape_;
    std::vector<Core<T>> e_, c_;
    Variational policy_;
    std::size_t n_ = 0, k_ = 0;
    double norm_e2_ = 0.0;
    std::vector<Matrix<T>> left_, right_;
};

} // namespace

TensorTrain variational_fit(const TensorTrain& exact, const TensorTrain& guess, const Variational& policy,
                            OpStats* stats) {
    validate(ApproxPolicy{policy});
    if (!exact.shape().compatible(guess.shape()))
        throw ShapeError("variational guess shape differs from the result shape");
    std::vector<double> history;
    auto run = [&]<Scalar T>() {
        Fitter<T> fit(exact, guess, policy);
        fit.run(history, exact);
        return fit.result();
    };
    auto out = (exact.is_complex() || guess.is_complex()) ? run.template operator()<cplx>()
                                                          : run.template operator()<double>();
    if (stats) stats->history.insert(stats->history.end(), history.begin(), history.end());
    return out;
}

// ---------------------------------------------------------------------------

namespace {

TensorTrain apply_policy(const ApproxPolicy& policy, const TensorTrain& exact, OpStats* stats) {
    return std::visit(
        [&](const auto& p) -> TensorTrain {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, Exact>) {
                return exact;
            } else if constexpr (std::is_same_v<P, Decomposition>) {
                return zip_up(exact, p.rule, p.window, stats);
            } else if constexpr (std::is_same_v<P, Variational>) {
                OpStats zs;
                auto guess = zip_up(exact, p.rule, 2, &zs);
                return variational_fit(exact, guess, p, stats);
            } else {
                const auto shape = exact.shape().with_ranks(std::vector<std::size_t>(exact.ncores() + 1, 1));
                if (exact.is_complex()) {
                    ComplexFunction f = [&](const IndexBatch& idx) { return evaluate(exact, idx).complex(); };
                    return cross_build(shape, f, p);
                }
                RealFunction f = [&](const IndexBatch& idx) { return evaluate(exact, idx).real(); };
                return cross_build(shape, f, p);
            }
        },
        policy);
}

} // namespace

} // namespace qtt
