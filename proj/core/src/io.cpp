#include "qtt/io.hpp"

#include <bit>
#include <charconv>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <string_view>

#include "qtt/errors.hpp"

namespace qtt {

namespace {

constexpr char kMagic[4] = {'Q', 'T', 'T', 'S'};
constexpr std::size_t kHeader = 4 + 2 + 4;

void put_le(std::vector<std::uint8_t>& out, std::uint64_t v, int bytes) {
    for (int k = 0; k < bytes; ++k) out.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
}

std::uint64_t get_le(const std::uint8_t* p, int bytes) {
    std::uint64_t v = 0;
    for (int k = 0; k < bytes; ++k) v |= std::uint64_t(p[k]) << (8 * k);
    return v;
}

template <class T, class F>
std::string join(const std::vector<T>& v, char sep, F&& f) {
    std::string s;
    for (std::size_t k = 0; k < v.size(); ++k) {
        if (k) s += sep;
        s += f(v[k]);
    }
    return s;
}

std::string metadata(const TensorTrain& t) {
    const TrainShape& sh = t.shape();
    auto num = [](std::size_t v) { return std::to_string(v); };
    std::ostringstream os;
    os << "scalar=" << (t.is_complex() ? "complex" : "real") << "\n";
    os << "dims=" << join(sh.dims(), ';', [&](const Dimension& d) { return join(d.bases(), ',', num); }) << "\n";
    os << "factors=" << join(sh.dims(), ';', [&](const Dimension& d) {
        return join(d.digits(), ',', [](const Digit& g) { return std::to_string(g.factor); });
    }) << "\n";
    os << "groups=" << join(sh.groups(), ';', [](const DigitGroup& g) {
        return join(g, ',', [](const DigitRef& r) { return std::to_string(r.dim) + "." + std::to_string(r.pos); });
    }) << "\n";
    os << "ranks=" << join(sh.ranks(), ',', num) << "\n";
    os << "center=" << (t.center() ? std::to_string(*t.center()) : std::string("none")) << "\n";
    return os.str();
}

[[noreturn]] void corrupt(const std::string& what) { throw CorruptFileError("corrupt train file: " + what); }

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto k = s.find(sep, start);
        out.push_back(s.substr(start, k == std::string_view::npos ? std::string_view::npos : k - start));
        if (k == std::string_view::npos) return out;
        start = k + 1;
    }
}

std::size_t to_size(std::string_view s) {
    std::size_t v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size() || s.empty()) corrupt("bad integer '" + std::string(s) + "'");
    return v;
}

std::vector<std::size_t> sizes_of(std::string_view s) {
    std::vector<std::size_t> out;
    if (s.empty()) return out;
    for (auto part : split(s, ',')) out.push_back(to_size(part));
    return out;
}

struct Meta {
    bool complex = false;
    TrainShape shape;
    std::optional<std::size_t> center;
};

Meta parse_metadata(std::string_view text) {
    static constexpr const char* keys[] = {"scalar", "dims", "factors", "groups", "ranks", "center"};
    if (text.empty() || text.back() != '\n') corrupt("metadata must end with a newline");
    auto lines = split(text.substr(0, text.size() - 1), '\n');
    if (lines.size() != std::size(keys)) corrupt("expected 6 metadata lines");
    std::vector<std::string_view> vals;
    for (std::size_t k = 0; k < lines.size(); ++k) {
        const std::string key = std::string(keys[k]) + "=";
        if (!lines[k].starts_with(key)) corrupt("expected key '" + std::string(keys[k]) + "'");
        vals.push_back(lines[k].substr(key.size()));
    }

    bool complex = false;
    if (vals[0] == "complex") complex = true;
    else if (vals[0] != "real") corrupt("unknown scalar kind");

    const auto ranks = sizes_of(vals[4]);
    if (ranks.size() < 2) corrupt("ranks need at least two entries");
    const std::size_t ncores = ranks.size() - 1;

    std::vector<Dimension> dims;
    if (!vals[1].empty()) {
        const auto dparts = split(vals[1], ';');
        const auto fparts = split(vals[2], ';');
        if (fparts.size() != dparts.size()) corrupt("factors do not match dims");
        for (std::size_t d = 0; d < dparts.size(); ++d) {
            Dimension dim(sizes_of(dparts[d]));
            const auto f = sizes_of(fparts[d]);
            if (f.size() != dim.ndigits()) corrupt("factors do not match dims");
            for (std::size_t q = 0; q < f.size(); ++q)
                if (f[q] != dim[q].factor) corrupt("factors do not match dims");
            dims.push_back(std::move(dim));
        }
    } else if (!vals[2].empty()) {
        corrupt("factors without dims");
    }

    std::vector<DigitGroup> groups;
    const auto gparts = split(vals[3], ';');
    if (gparts.size() != ncores) corrupt("groups do not match ranks");
    for (auto g : gparts) {
        DigitGroup grp;
        if (!g.empty())
            for (auto ref : split(g, ',')) {
                const auto dp = split(ref, '.');
                if (dp.size() != 2) corrupt("bad digit reference '" + std::string(ref) + "'");
                grp.push_back(DigitRef{to_size(dp[0]), to_size(dp[1])});
            }
        groups.push_back(std::move(grp));
    }

    std::optional<std::size_t> center;
    if (vals[5] != "none") {
        center = to_size(vals[5]);
        if (*center >= ncores) corrupt("center out of range");
    }
    try {
        return Meta{complex, TrainShape(std::move(dims), std::move(groups), ranks), center};
    } catch (const FileError&) {
        throw;
    } catch (const Error& e) {
        corrupt(e.what());
    }
}

template <Scalar T>
std::vector<Core<T>> read_cores(const TrainShape& sh, const std::uint8_t* p) {
    std::vector<Core<T>> cores;
    for (std::size_t q = 0; q < sh.ncores(); ++q) {
        Core<T> c(sh.rank_left(q), sh.core_extent(q), sh.rank_right(q));
        for (auto& v : c.data) {
            if constexpr (std::is_same_v<T, cplx>) {
                v = cplx(std::bit_cast<double>(get_le(p, 8)), std::bit_cast<double>(get_le(p + 8, 8)));
                p += 16;
            } else {
                v = std::bit_cast<double>(get_le(p, 8));
                p += 8;
            }
        }
        cores.push_back(std::move(c));
    }
    return cores;
}

} // namespace

std::vector<std::uint8_t> encode(const TensorTrain& t) {
    const std::string meta = metadata(t);
    std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
    put_le(out, kFileVersion, 2);
    put_le(out, meta.size(), 4);
    out.insert(out.end(), meta.begin(), meta.end());
    std::visit(
        [&](const auto& cores) {
            for (const auto& c : cores)
                for (const auto& v : c.data) {
                    if constexpr (std::is_same_v<std::decay_t<decltype(v)>, cplx>) {
                        put_le(out, std::bit_cast<std::uint64_t>(v.real()), 8);
                        put_le(out, std::bit_cast<std::uint64_t>(v.imag()), 8);
                    } else {
                        put_le(out, std::bit_cast<std::uint64_t>(v), 8);
                    }
                }
        },
        t.storage());
    return out;
}

TensorTrain decode(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 4 || !std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin()))
        corrupt("bad magic (expected QTTS)");
    if (bytes.size() < kHeader) throw TruncatedFileError("train file truncated inside the header");
    const auto version = static_cast<std::uint16_t>(get_le(bytes.data() + 4, 2));
    if (version != kFileVersion)
        throw VersionError("train file version " + std::to_string(version) + ", expected " +
                           std::to_string(kFileVersion));
    const auto mlen = static_cast<std::size_t>(get_le(bytes.data() + 6, 4));
    if (bytes.size() < kHeader + mlen) throw TruncatedFileError("train file truncated inside the metadata");
    const std::string_view text(reinterpret_cast<const char*>(bytes.data() + kHeader), mlen);
    Meta meta = parse_metadata(text);

    std::size_t count = 0;
    for (std::size_t q = 0; q < meta.shape.ncores(); ++q)
        count += meta.shape.rank_left(q) * meta.shape.core_extent(q) * meta.shape.rank_right(q);
    const std::size_t payload = count * (meta.complex ? 16 : 8);
    const std::size_t have = bytes.size() - kHeader - mlen;
    if (have < payload)
        throw TruncatedFileError("train file payload has " + std::to_string(have) + " bytes, expected " +
                                 std::to_string(payload));
    if (have > payload) corrupt(std::to_string(have - payload) + " trailing bytes after the payload");

    const std::uint8_t* p = bytes.data() + kHeader + mlen;
    if (meta.complex) return TensorTrain(meta.shape, read_cores<cplx>(meta.shape, p), meta.center);
    return TensorTrain(meta.shape, read_cores<double>(meta.shape, p), meta.center);
}

void save(const TensorTrain& t, const std::filesystem::path& path) {
    const auto bytes = encode(t);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw FileError("cannot open " + path.string() + " for writing");
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw FileError("write to " + path.string() + " failed");
}

namespace {

std::vector<std::uint8_t> read_all(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw FileError("cannot open " + path.string());
    return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
}

} // namespace

TensorTrain load(const std::filesystem::path& path) { return decode(read_all(path)); }

std::vector<double> parse_csv(std::string_view text) {
    std::vector<double> out;
    std::size_t line = 1, start = 0;
    auto flush = [&](std::size_t end) {
        std::string_view tok = text.substr(start, end - start);
        while (!tok.empty() && (tok.front() == ' ' || tok.front() == '\t' || tok.front() == '\r'))
            tok.remove_prefix(1);
        while (!tok.empty() && (tok.back() == ' ' || tok.back() == '\t' || tok.back() == '\r')) tok.remove_suffix(1);
        if (tok.empty()) return;
        if (tok.front() == '+') tok.remove_prefix(1);
        double v = 0.0;
        const auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (ec != std::errc{} || p != tok.data() + tok.size())
            throw ParseError("line " + std::to_string(line) + ": cannot parse '" + std::string(tok) + "'");
        out.push_back(v);
    };
    for (std::size_t k = 0; k < text.size(); ++k) {
        if (text[k] == ',' || text[k] == '\n') {
            flush(k);
            start = k + 1;
            if (text[k] == '\n') ++line;
        }
    }
    flush(text.size());
    return out;
}

std::vector<double> read_values(const std::filesystem::path& path, DenseFormat format) {
    const auto bytes = read_all(path);
    if (format == DenseFormat::Csv)
        return parse_csv(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
    if (bytes.size() % 8 != 0)
        throw ParseError(path.string() + ": raw binary64 size " + std::to_string(bytes.size()) +
                         " is not a multiple of 8");
    std::vector<double> values;
    for (std::size_t k = 0; k < bytes.size(); k += 8) values.push_back(std::bit_cast<double>(get_le(&bytes[k], 8)));
    return values;
}

DenseArray ingest_dense(const std::filesystem::path& path, DenseFormat format, const std::vector<Dimension>& dims) {
    std::vector<std::size_t> shape;
    std::size_t total = 1;
    for (const auto& d : dims) {
        shape.push_back(d.size());
        total *= d.size();
    }
    auto values = read_values(path, format);
    if (values.size() != total)
        throw ShapeError(path.string() + " has " + std::to_string(values.size()) + " values, dims need " +
                         std::to_string(total));
    return DenseArray(std::move(shape), std::move(values));
}

} // namespace qtt
