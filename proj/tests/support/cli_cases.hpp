#pragma once

// Inputs, argv table and report comparison shared by the golden tests and
// the acceptance runner.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cli/cli.hpp"
#include "qtt/qtt.hpp"

namespace qtt::golden {

namespace fs = std::filesystem;

struct Outcome {
    int code;
    std::string out, err;
};

inline Outcome run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "qtt");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = qtt::cli::run(int(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

inline std::string read_file(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

inline void write_values(const fs::path& p, const std::vector<double>& v, char sep) {
    std::ofstream f(p);
    char buf[40];
    for (std::size_t k = 0; k < v.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.17g", v[k]);
        f << buf << (k + 1 < v.size() ? std::string(1, sep) : "\n");
    }
}

/// Input files the cases refer to by relative path.
inline void write_inputs(const fs::path& dir) {
    fs::create_directories(dir);
    std::vector<double> parabola, sig, ker;
    for (int i = 0; i < 1024; ++i) {
        const double x = i / 1023.0;
        parabola.push_back(3.0 * x * x - x + 0.5);
    }
    for (int i = 0; i < 64; ++i) {
        sig.push_back(std::sin(0.3 * i) + 0.1 * i);
        ker.push_back(std::exp(-i / 3.0));
    }
    write_values(dir / "parabola.csv", parabola, ',');
    write_values(dir / "signal.csv", sig, '\n');
    write_values(dir / "kernel.csv", ker, '\n');
    save(constant(make_trainshape(64), 2.0), dir / "const.qtts");
    const auto shape = make_trainshape({make_dimension(16), make_dimension(16)});
    std::vector<std::size_t> ranks(shape.ncores() + 1, 3);
    ranks.front() = ranks.back() = 1;
    save(random_train(shape.with_ranks(ranks), 3), dir / "random.qtts");
}

struct Case {
    std::string name; ///< expected file; .json files compare with tolerance
    std::vector<std::string> args;
};

/// Every subcommand appears with its help text and at least one run. Cases
/// that read a train written by an earlier case come after it.
inline std::vector<Case> cases() {
    std::vector<Case> cs{{"help.txt", {"--help"}}};
    for (const char* sub : {"info", "compress", "eval", "fourier", "poisson", "eig-laplacian", "convolve", "minmax"})
        cs.push_back({std::string("help_") + sub + ".txt", {sub, "--help"}});
    std::vector<Case> runs{
        {"info.json", {"info", "const.qtts", "--report", "json"}},
        {"info.txt", {"info", "random.qtts"}},
        {"compress.json", {"compress", "parabola.csv", "parabola.qtts", "--dims", "1024", "--max-rank", "4", "--report",
                           "json"}},
        {"compress_cross.json", {"compress", "parabola.csv", "parabola_cross.qtts", "--dims", "32,32", "--method",
                                 "cross", "--max-rank", "4", "--report", "json"}},
        {"eval.json", {"eval", "random.qtts", "--idx", "0,0", "--idx", "15,3", "--idx", "7,7", "--report", "json"}},
        {"fourier.json", {"fourier", "signal.csv", "signal_hat.qtts", "--normalized", "--report", "json"}},
        {"poisson.json", {"poisson", "--n", "64", "--report", "json"}},
        {"poisson_dmrg.json", {"poisson", "--n", "64", "--solver", "dmrg", "--report", "json"}},
        {"eig_laplacian.json", {"eig-laplacian", "--n", "64", "--report", "json"}},
        {"convolve.json", {"convolve", "signal.csv", "kernel.csv", "conv.qtts", "--report", "json"}},
        {"convolve_circular.json",
         {"convolve", "signal.csv", "kernel.csv", "conv_c.qtts", "--mode", "circular", "--report", "json"}},
        {"minmax.json", {"minmax", "random.qtts", "--k", "8", "--report", "json"}},
        {"minmax.txt", {"minmax", "parabola.qtts"}},
    };
    cs.insert(cs.end(), runs.begin(), runs.end());
    return cs;
}

/// Floats agree to 1e-6 relative, or both sit below 1e-9 (rounding noise).
inline bool same_json(const nlohmann::json& a, const nlohmann::json& b, const std::string& path, std::string& why) {
    auto fail = [&](const std::string& msg) {
        why = path + ": " + msg;
        return false;
    };
    if (a.is_number_float() || b.is_number_float()) {
        if (!a.is_number() || !b.is_number()) return fail("type");
        const double x = a.get<double>(), y = b.get<double>();
        if (std::abs(x - y) <= 1e-6 * std::max(std::abs(x), std::abs(y)) || (std::abs(x) < 1e-9 && std::abs(y) < 1e-9))
            return true;
        return fail(a.dump() + " vs " + b.dump());
    }
    if (a.type() != b.type()) return fail("type");
    if (a.is_object()) {
        if (a.size() != b.size()) return fail("keys");
        for (auto it = a.begin(); it != a.end(); ++it) {
            if (!b.contains(it.key())) return fail(it.key() + " missing");
            if (!same_json(it.value(), b[it.key()], path + "." + it.key(), why)) return false;
        }
        return true;
    }
    if (a.is_array()) {
        if (a.size() != b.size()) return fail("length");
        for (std::size_t k = 0; k < a.size(); ++k)
            if (!same_json(a[k], b[k], path + "[" + std::to_string(k) + "]", why)) return false;
        return true;
    }
    return a == b || fail(a.dump() + " vs " + b.dump());
}

/// Empty when `got` matches the expected file, otherwise the reason.
inline std::string compare(const Case& c, const std::string& got, const fs::path& expected_dir) {
    const fs::path p = expected_dir / c.name;
    if (!fs::exists(p)) return "missing " + p.string();
    const std::string want = read_file(p);
    if (!c.name.ends_with(".json")) return got == want ? "" : "text differs";
    std::string why;
    try {
        if (same_json(nlohmann::json::parse(got), nlohmann::json::parse(want), "$", why)) return "";
    } catch (const std::exception& e) {
        return e.what();
    }
    return why;
}

} // namespace qtt::golden
