#include "cli/cli.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Eigenvalues>
#include <json.hpp>

#include "qtt/qtt.hpp"

namespace qtt::cli {

namespace {

using Json = nlohmann::ordered_json;

constexpr int kReportVersion = 1;
constexpr std::size_t kDenseCheck = 4096;

/// Ten significant digits, so reports do not carry the last bits of noise.
double rounded(double v) {
    if (!std::isfinite(v)) return v;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return std::strtod(buf, nullptr);
}

Json num(double v) {
    if (!std::isfinite(v)) return nullptr;
    return rounded(v);
}

std::string text_of(const Json& j) {
    if (j.is_number_float()) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.10g", j.get<double>());
        return buf;
    }
    if (j.is_string()) return j.get<std::string>();
    if (j.is_array()) {
        std::string s;
        for (std::size_t k = 0; k < j.size(); ++k) s += (k ? " " : "") + text_of(j[k]);
        return s;
    }
    if (j.is_object()) {
        std::string s;
        for (auto it = j.begin(); it != j.end(); ++it)
            s += (it == j.begin() ? "" : ", ") + it.key() + "=" + text_of(it.value());
        return s;
    }
    return j.dump();
}

struct Report {
    std::string command;
    Json params = Json::object();
    std::vector<std::size_t> ranks;
    Json errors = Json::object();
    std::vector<double> history;
    std::uint64_t seed = 0;
    Json result = Json::object();

    void emit(std::ostream& out, bool json) const {
        if (json) {
            Json j;
            j["version"] = kReportVersion;
            j["command"] = command;
            j["params"] = params;
            j["seed"] = seed;
            j["ranks"] = ranks;
            j["errors"] = errors;
            Json h = Json::array();
            for (double v : history) h.push_back(num(v));
            j["residual_history"] = h;
            j["result"] = result;
            out << j.dump(2) << "\n";
            return;
        }
        out << "command: " << command << "\n";
        for (auto it = result.begin(); it != result.end(); ++it) out << it.key() << ": " << text_of(it.value()) << "\n";
        if (!ranks.empty()) out << "ranks: " << text_of(Json(ranks)) << "\n";
        for (auto it = errors.begin(); it != errors.end(); ++it) out << it.key() << ": " << text_of(it.value()) << "\n";
        if (!history.empty()) {
            Json h = Json::array();
            for (double v : history) h.push_back(num(v));
            out << "residual_history: " << text_of(h) << "\n";
        }
    }
};

/// Flags shared by the subcommands that approximate.
struct PolicyFlags {
    std::string method = "svd";
    std::size_t max_rank = 0; ///< 0 = unbounded
    double cutoff = 1e-12;
    double eps = 1e-10;
    std::size_t ncores = 2;
    std::size_t nsweeps = 10;

    TruncationRule rule() const { return TruncationRule{max_rank ? max_rank : TruncationRule::kUnbounded, cutoff}; }

    ApproxPolicy policy(std::uint64_t seed) const {
        if (method == "exact") return Exact{};
        if (method == "svd") return Decomposition{rule()};
        if (method == "variational") return Variational{rule(), ncores, nsweeps};
        return Cross{max_rank ? max_rank : 16, eps, nsweeps, seed};
    }

    void record(Json& params) const {
        params["method"] = method;
        params["max_rank"] = max_rank;
        params["cutoff"] = num(cutoff);
        params["eps"] = num(eps);
        params["ncores"] = ncores;
        params["nsweeps"] = nsweeps;
    }
};

void add_policy_flags(CLI::App* app, PolicyFlags& p, bool with_method) {
    if (with_method)
        app->add_option("--method", p.method, "Approximation: exact, svd, variational or cross")
            ->check(CLI::IsMember({"exact", "svd", "variational", "cross"}))
            ->capture_default_str();
    app->add_option("--max-rank", p.max_rank, "Maximum bond dimension (0 = unbounded)")->capture_default_str();
    app->add_option("--cutoff", p.cutoff, "Relative SVD cutoff")->capture_default_str();
    if (with_method) app->add_option("--eps", p.eps, "Cross tolerance")->capture_default_str();
    app->add_option("--ncores", p.ncores, "Sweep window in cores")->capture_default_str()->check(CLI::PositiveNumber);
    app->add_option("--nsweeps", p.nsweeps, "Number of sweeps")->capture_default_str()->check(CLI::PositiveNumber);
}

DenseFormat format_of(const std::string& s) { return s == "raw" ? DenseFormat::RawF64 : DenseFormat::Csv; }

LayoutMode layout_of(const std::string& s) {
    if (s == "block") return LayoutMode::Block;
    if (s == "interleaved") return LayoutMode::Interleaved;
    return LayoutMode::Auto;
}

std::vector<std::size_t> sizes_of(const TrainShape& sh) { return sh.sizes(); }

Json index_json(const std::vector<std::size_t>& idx) { return Json(idx); }

Json value_json(cplx v, bool complex) {
    if (complex) return Json::array({num(v.real()), num(v.imag())});
    return num(v.real());
}

/// max |a - b| / max |b|
double max_rel(const std::vector<cplx>& a, const std::vector<cplx>& b) {
    double err = 0.0, m = 0.0;
    for (std::size_t k = 0; k < b.size(); ++k) {
        err = std::max(err, std::abs(a[k] - b[k]));
        m = std::max(m, std::abs(b[k]));
    }
    return m > 0 ? err / m : err;
}


struct Common {
    std::string report = "text";
    std::uint64_t seed = 0;
};

// ---------------------------------------------------------------------------

int cmd_info(const std::string& file, Report& r) {
    const TensorTrain t = load(file);
    r.params["file"] = file;
    r.ranks = t.ranks();
    Json dims = Json::array();
    for (const auto& d : t.shape().dims()) dims.push_back(Json{{"size", d.size()}, {"bases", d.bases()}});
    r.result["scalar"] = t.is_complex() ? "complex" : "real";
    r.result["dims"] = dims;
    r.result["ncores"] = t.ncores();
    r.result["norm"] = num(frobenius_norm(t));
    r.result["center"] = t.center() ? Json(*t.center()) : Json(nullptr);
    return kOk;
}

int cmd_compress(const std::string& in, const std::string& out, const std::vector<long long>& sizes,
                 const std::string& format, const std::string& layout, const PolicyFlags& pf, std::uint64_t seed,
                 Report& r) {
    std::vector<Dimension> dims;
    for (long long s : sizes) dims.push_back(make_dimension(s));
    const DenseArray data = ingest_dense(in, format_of(format), dims);
    const TrainShape shape = make_trainshape(dims, layout_of(layout));

    r.params["input"] = in;
    r.params["output"] = out;
    r.params["dims"] = sizes;
    r.params["format"] = format;
    r.params["layout"] = layout;
    pf.record(r.params);

    std::optional<TensorTrain> t;
    if (pf.method == "cross") {
        std::vector<std::size_t> strides(dims.size(), 1);
        for (std::size_t d = dims.size(); d-- > 1;) strides[d - 1] = strides[d] * dims[d].size();
        const auto& vals = data.real();
        RealFunction f = [&](const IndexBatch& idx) {
            std::vector<double> out(idx.empty() ? 0 : idx[0].size());
            for (std::size_t k = 0; k < out.size(); ++k) {
                std::size_t flat = 0;
                for (std::size_t d = 0; d < idx.size(); ++d) flat += idx[d][k] * strides[d];
                out[k] = vals[flat];
            }
            return out;
        };
        CrossStats cs;
        t = cross_build(shape, f, std::get<Cross>(pf.policy(seed)), &cs);
        r.result["evaluations"] = cs.evaluations;
        r.result["sweeps"] = cs.sweeps;
    } else if (pf.method == "exact") {
        t = from_dense(shape, data, TruncationRule{TruncationRule::kUnbounded, 0.0});
    } else {
        double lost = 0.0;
        t = from_dense(shape, data, pf.rule(), &lost);
        r.errors["discarded"] = num(lost);
        if (pf.method == "variational") {
            const TensorTrain exact = from_dense(shape, data, TruncationRule{TruncationRule::kUnbounded, 0.0});
            t = variational_fit(exact, *t, std::get<Variational>(pf.policy(seed)));
        }
    }
    const auto approx = to_tensor(*t).complex();
    const auto ref = data.complex();
    double num2 = 0.0, den2 = 0.0;
    for (std::size_t k = 0; k < ref.size(); ++k) {
        num2 += std::norm(approx[k] - ref[k]);
        den2 += std::norm(ref[k]);
    }
    r.ranks = t->ranks();
    r.errors["relative_error"] = num(den2 > 0 ? std::sqrt(num2 / den2) : std::sqrt(num2));
    r.result["entries"] = data.size();
    save(*t, out);
    return kOk;
}

std::vector<std::size_t> parse_index(const std::string& s) {
    std::vector<std::size_t> idx;
    std::stringstream ss(s);
    std::string part;
    while (std::getline(ss, part, ',')) {
        std::size_t pos = 0;
        unsigned long long v = 0;
        try {
            v = std::stoull(part, &pos);
        } catch (const std::exception&) {
            pos = std::string::npos;
        }
        if (pos != part.size() || part.empty() || part[0] == '-')
            throw ParseError("bad index '" + s + "' (expected comma-separated non-negative integers)");
        idx.push_back(static_cast<std::size_t>(v));
    }
    return idx;
}

int cmd_eval(const std::string& file, const std::vector<std::string>& idxs, Report& r) {
    const TensorTrain t = load(file);
    r.params["file"] = file;
    r.params["idx"] = idxs;
    const auto sizes = sizes_of(t.shape());
    Json values = Json::array();
    for (const auto& s : idxs) {
        const auto idx = parse_index(s);
        if (idx.size() != sizes.size())
            throw ShapeError("index '" + s + "' has " + std::to_string(idx.size()) + " entries, train has " +
                             std::to_string(sizes.size()) + " dimensions");
        for (std::size_t d = 0; d < idx.size(); ++d)
            if (idx[d] >= sizes[d])
                throw RangeError("index '" + s + "' out of range in dimension " + std::to_string(d));
        values.push_back(value_json(evaluate_at(t, idx), t.is_complex()));
    }
    r.ranks = t.ranks();
    r.result["values"] = values;
    return kOk;
}

std::vector<cplx> dense_dft(const std::vector<cplx>& x, bool normalized) {
    const std::size_t n = x.size();
    std::vector<cplx> y(n);
    const double s = normalized ? 1.0 / std::sqrt(double(n)) : 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        cplx acc = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            acc += std::polar(1.0, -2.0 * std::numbers::pi * double((i * j) % n) / double(n)) * x[j];
        y[i] = s * acc;
    }
    return y;
}

/// Data file whose length defines the dimension.
DenseArray ingest_vector(const std::string& path, const std::string& format) {
    auto v = read_values(path, format_of(format));
    if (v.empty()) throw ShapeError(path + " holds no values");
    const std::size_t n = v.size();
    return DenseArray({n}, std::move(v));
}

int cmd_fourier(const std::string& in, const std::string& out, const std::string& format, bool normalized,
                     const PolicyFlags& pf, std::uint64_t seed, Report& r) {
    const DenseArray data = ingest_vector(in, format);
    const Dimension dim = make_dimension(static_cast<long long>(data.size()));
    r.params["input"] = in;
    r.params["output"] = out;
    r.params["format"] = format;
    r.params["normalized"] = normalized;
    pf.record(r.params);

    OpStats build;
    const TensorTrain f = dft_train(dim, normalized, pf.rule(), &build);
    const TensorTrain x = from_dense(reversed_vector_shape(dim), data);
    OpStats st;
    const TensorTrain y = einsum(pf.policy(seed), "ij,j->i", {f, x}, &st);
    r.ranks = y.ranks();
    r.result["size"] = dim.size();
    r.result["dft_max_rank"] = f.shape().max_rank();
    r.errors["dft_discarded"] = num(build.discarded);
    if (dim.size() <= kDenseCheck)
        r.errors["dense_error"] = num(max_rel(to_tensor(y).complex(), dense_dft(data.complex(), normalized)));
    save(y, out);
    return kOk;
}

double dense_laplace_min(std::size_t n, double h) {
    Eigen::VectorXd diag = Eigen::VectorXd::Constant(Eigen::Index(n), 2.0 / (h * h));
    Eigen::VectorXd off = Eigen::VectorXd::Constant(Eigen::Index(n) - 1, -1.0 / (h * h));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, off, Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
}

SweepPlan plan_of(const PolicyFlags& pf, double tol) {
    SweepPlan plan;
    plan.ncores = pf.ncores;
    plan.nsweeps = pf.nsweeps;
    plan.rule = pf.rule();
    plan.tol = tol;
    return plan;
}

TrainShape bond_ranks(const TrainShape& s, std::size_t r) {
    std::vector<std::size_t> ranks(s.ncores() + 1, r);
    ranks.front() = ranks.back() = 1;
    return s.with_ranks(ranks);
}

int cmd_poisson(long long n, const std::string& solver, double tol, const PolicyFlags& pf, std::uint64_t seed,
                Report& r) {
    if (n < 2) throw RangeError("--n must be at least 2");
    const Dimension dim = make_dimension(n);
    const double h = 1.0 / double(n + 1);
    r.params["n"] = n;
    r.params["solver"] = solver;
    r.params["tol"] = num(tol);
    pf.record(r.params);
    r.params.erase("method");
    r.params.erase("eps");

    // -u'' = 1 on (0, 1), u(0) = u(1) = 0; the scheme is exact for the
    // quadratic solution x (1 - x) / 2.
    const TensorTrain lap = dirichlet_laplacian(dim, h);
    const TrainShape xs = make_trainshape(n);
    const LinearMap map("ij,j->i", {lap}, 1, xs);
    const TensorTrain b = constant(xs, 1.0);
    const TensorTrain guess = random_train(bond_ranks(xs, 2), seed);
    const auto res = linsolve(map, b, guess, plan_of(pf, tol),
                              solver == "dmrg" ? LinsolveMethod::Dmrg : LinsolveMethod::Amen);
    r.ranks = res.x.ranks();
    r.history = res.info.history;
    r.result["sweeps"] = res.info.sweeps;
    r.result["converged"] = res.info.converged;
    r.result["stagnated"] = res.info.stagnated;
    r.result["warnings"] = res.info.warnings.size();
    r.errors["residual"] = num(res.info.history.empty() ? 0.0 : res.info.history.back());
    if (std::size_t(n) <= kDenseCheck) {
        const auto u = to_tensor(res.x).complex();
        std::vector<cplx> ref(u.size());
        for (std::size_t i = 0; i < ref.size(); ++i) {
            const double x = double(i + 1) * h;
            ref[i] = 0.5 * x * (1.0 - x);
        }
        r.errors["solution_error"] = num(max_rel(u, ref));
    }
    return res.info.converged ? kOk : kNumeric;
}

int cmd_eig(long long n, double tol, const PolicyFlags& pf, std::uint64_t seed, Report& r) {
    if (n < 2) throw RangeError("--n must be at least 2");
    const Dimension dim = make_dimension(n);
    const double h = 1.0 / double(n + 1);
    r.params["n"] = n;
    r.params["tol"] = num(tol);
    pf.record(r.params);
    r.params.erase("method");
    r.params.erase("eps");

    const TensorTrain lap = dirichlet_laplacian(dim, h);
    const TrainShape xs = make_trainshape(n);
    const LinearMap map("ij,j->i", {lap}, 1, xs);
    const auto res = eigsolve(map, random_train(bond_ranks(xs, 2), seed), plan_of(pf, tol));
    r.ranks = res.vector.ranks();
    r.history = res.info.history;
    r.result["eigenvalue"] = num(res.value);
    r.result["sweeps"] = res.info.sweeps;
    r.result["converged"] = res.info.converged;
    r.result["warnings"] = res.info.warnings.size();
    if (std::size_t(n) <= kDenseCheck) r.errors["dense_error"] = num(std::abs(res.value - dense_laplace_min(n, h)));
    return res.info.converged ? kOk : kNumeric;
}

int cmd_convolve(const std::string& in, const std::string& kernel, const std::string& out, const std::string& mode,
                 const std::string& format, const PolicyFlags& pf, std::uint64_t seed, Report& r) {
    const DenseArray x = ingest_vector(in, format);
    const std::size_t n = x.size();
    const Dimension dim = make_dimension(static_cast<long long>(n));
    const bool full = mode == "full";
    const std::size_t m = full ? 2 * n : n;
    std::vector<double> c = ingest_vector(kernel, format).real();
    if (c.size() != m && !(full && c.size() == n))
        throw ShapeError("kernel has " + std::to_string(c.size()) + " values, expected " + std::to_string(m) +
                         (full ? " or " + std::to_string(n) : std::string()));
    c.resize(m, 0.0);

    r.params["input"] = in;
    r.params["kernel"] = kernel;
    r.params["output"] = out;
    r.params["mode"] = mode;
    r.params["format"] = format;
    pf.record(r.params);

    const TensorTrain t = toeplitz_train(dim, full ? ToeplitzMode::Full : ToeplitzMode::Circular);
    const Dimension kdim = t.shape().dims()[2];
    const TensorTrain kt = from_dense(make_trainshape({kdim}), DenseArray({m}, c));
    const TensorTrain xt = from_dense(make_trainshape({dim}), x);
    const TensorTrain y = einsum(pf.policy(seed), "ijk,k,j->i", {t, kt, xt});
    r.ranks = y.ranks();
    r.result["size"] = n;
    if (n <= kDenseCheck) {
        const auto& xv = x.real();
        std::vector<cplx> ref(n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) ref[i] += c[(i + m - j) % m] * xv[j];
        r.errors["dense_error"] = num(max_rel(to_tensor(y).complex(), ref));
    }
    save(y, out);
    return kOk;
}

int cmd_minmax(const std::string& file, std::size_t k, Report& r) {
    const TensorTrain t = load(file);
    r.params["file"] = file;
    r.params["k"] = k;
    const auto mm = min_max(t, k);
    r.ranks = t.ranks();
    r.result["min"] = Json{{"value", num(mm.min.value)}, {"index", index_json(mm.min.index)}};
    r.result["max"] = Json{{"value", num(mm.max.value)}, {"index", index_json(mm.max.index)}};
    return kOk;
}

} // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Quantics tensor train tool", "qtt"};
    app.require_subcommand(1);
    Common common;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--report", common.report, "Report format: text or json")
            ->check(CLI::IsMember({"text", "json"}))
            ->capture_default_str();
        sub->add_option("--seed", common.seed, "Seed for every randomized step")->capture_default_str();
    };

    std::string file, in, out_path, kernel_path, format = "csv", layout = "auto", mode = "full", solver = "amen";
    std::vector<long long> dims;
    std::vector<std::string> idxs;
    long long n = 64;
    std::size_t k = 8;
    double tol = 1e-10, ptol = 1e-9;
    bool normalized = false;
    PolicyFlags pf;

    auto* info = app.add_subcommand("info", "Print shape, ranks and norm of a train file");
    info->add_option("FILE", file, "Train file")->required();
    add_common(info);

    auto* compress = app.add_subcommand("compress", "Fit a train to dense data and save it");
    compress->add_option("IN", in, "Dense input (csv or raw binary64)")->required();
    compress->add_option("OUT", out_path, "Output train file")->required();
    compress->add_option("--dims", dims, "Dimension sizes, comma separated")->required()->delimiter(',');
    compress->add_option("--format", format, "Input format: csv or raw")
        ->check(CLI::IsMember({"csv", "raw"}))
        ->capture_default_str();
    compress->add_option("--layout", layout, "Digit layout: auto, block or interleaved")
        ->check(CLI::IsMember({"auto", "block", "interleaved"}))
        ->capture_default_str();
    add_policy_flags(compress, pf, true);
    add_common(compress);

    auto* eval = app.add_subcommand("eval", "Print entries of a train file");
    eval->add_option("FILE", file, "Train file")->required();
    eval->add_option("--idx", idxs, "Multi-index, comma separated; repeatable")->required();
    add_common(eval);

    auto* fourier = app.add_subcommand("fourier", "Apply the DFT train to a dense vector");
    fourier->add_option("IN", in, "Dense input vector")->required();
    fourier->add_option("OUT", out_path, "Output train file")->required();
    fourier->add_option("--format", format, "Input format: csv or raw")
        ->check(CLI::IsMember({"csv", "raw"}))
        ->capture_default_str();
    fourier->add_flag("--normalized", normalized, "Scale by 1/sqrt(N)");
    add_policy_flags(fourier, pf, true);
    add_common(fourier);

    auto* poisson = app.add_subcommand("poisson", "Solve -u'' = 1 with Dirichlet ends on n interior points");
    poisson->add_option("--n", n, "Number of interior grid points")->capture_default_str();
    poisson->add_option("--solver", solver, "Linear solver: amen or dmrg")
        ->check(CLI::IsMember({"amen", "dmrg"}))
        ->capture_default_str();
    poisson->add_option("--tol", ptol, "Relative residual target")->capture_default_str();
    add_policy_flags(poisson, pf, false);
    add_common(poisson);

    auto* eig = app.add_subcommand("eig-laplacian", "Smallest eigenvalue of the Dirichlet Laplacian");
    eig->add_option("--n", n, "Number of interior grid points")->capture_default_str();
    eig->add_option("--tol", tol, "Eigenvalue change tolerance per sweep")->capture_default_str();
    add_policy_flags(eig, pf, false);
    add_common(eig);

    auto* convolve = app.add_subcommand("convolve", "Toeplitz convolution of a dense vector with a kernel");
    convolve->add_option("IN", in, "Dense input vector")->required();
    convolve->add_option("KERNEL", kernel_path, "Dense kernel (N values, or 2N for full mode)")->required();
    convolve->add_option("OUT", out_path, "Output train file")->required();
    convolve->add_option("--mode", mode, "Toeplitz mode: full or circular")
        ->check(CLI::IsMember({"full", "circular"}))
        ->capture_default_str();
    convolve->add_option("--format", format, "Input format: csv or raw")
        ->check(CLI::IsMember({"csv", "raw"}))
        ->capture_default_str();
    add_policy_flags(convolve, pf, true);
    add_common(convolve);

    auto* minmax = app.add_subcommand("minmax", "Approximate minimum and maximum of a real train");
    minmax->add_option("FILE", file, "Train file")->required();
    minmax->add_option("--k", k, "Candidates kept per core")->capture_default_str()->check(CLI::PositiveNumber);
    add_common(minmax);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }

    Report r;
    r.seed = common.seed;
    int code = kOk;
    try {
        if (*info) r.command = "info", code = cmd_info(file, r);
        else if (*compress) r.command = "compress", code = cmd_compress(in, out_path, dims, format, layout, pf, common.seed, r);
        else if (*eval) r.command = "eval", code = cmd_eval(file, idxs, r);
        else if (*fourier)
            r.command = "fourier", code = cmd_fourier(in, out_path, format, normalized, pf, common.seed, r);
        else if (*poisson) r.command = "poisson", code = cmd_poisson(n, solver, ptol, pf, common.seed, r);
        else if (*eig) r.command = "eig-laplacian", code = cmd_eig(n, tol, pf, common.seed, r);
        else if (*convolve)
            r.command = "convolve", code = cmd_convolve(in, kernel_path, out_path, mode, format, pf, common.seed, r);
        else if (*minmax) r.command = "minmax", code = cmd_minmax(file, k, r);
    } catch (const NumericError& e) {
        err << "qtt: numeric failure: " << e.what() << "\n";
        return kNumeric;
    } catch (const std::exception& e) {
        err << "qtt: " << e.what() << "\n";
        return kUsage;
    }
    r.emit(out, common.report == "json");
    if (code == kNumeric) err << "qtt: " << r.command << " did not converge\n";
    return code;
}

} // namespace qtt::cli
