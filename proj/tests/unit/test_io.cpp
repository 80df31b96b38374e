#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <fstream>

#include "qtt/constructors.hpp"
#include "qtt/errors.hpp"
#include "qtt/io.hpp"

using namespace qtt;

namespace {

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("qtt_io_" + name);
}

void write_text(const std::filesystem::path& p, const std::string& s) {
    std::ofstream f(p, std::ios::binary);
    f << s;
}

template <Scalar T>
bool bitwise_equal(const TensorTrain& a, const TensorTrain& b) {
    const auto& ca = a.cores<T>();
    const auto& cb = b.cores<T>();
    if (ca.size() != cb.size()) return false;
    for (std::size_t q = 0; q < ca.size(); ++q) {
        if (ca[q].left != cb[q].left || ca[q].extent != cb[q].extent || ca[q].right != cb[q].right) return false;
        if (std::memcmp(ca[q].data.data(), cb[q].data.data(), ca[q].data.size() * sizeof(T)) != 0) return false;
    }
    return true;
}

TrainShape ranked(TrainShape s, std::size_t r) {
    std::vector<std::size_t> ranks(s.ncores() + 1, r);
    ranks.front() = ranks.back() = 1;
    return s.with_ranks(ranks);
}

} // namespace

TEST(TrainFile, RoundTripComplex) {
    const auto shape = make_trainshape({make_dimension(12), make_dimension(12)});
    auto t = random_train(ranked(shape, 3), 5, ScalarKind::Complex);
    t.set_center(1);
    const auto p = temp_file("complex.qtts");
    save(t, p);
    const auto u = load(p);
    ASSERT_TRUE(u.is_complex());
    EXPECT_TRUE(u.shape().compatible(t.shape()));
    EXPECT_EQ(u.ranks(), t.ranks());
    EXPECT_EQ(u.center(), std::optional<std::size_t>(1));
    EXPECT_TRUE(bitwise_equal<cplx>(t, u));
}

TEST(TrainFile, RoundTripLayouts) {
    std::vector<TrainShape> shapes{
        make_trainshape(64),
        make_trainshape({make_dimension(8), make_dimension({3, 2})}, LayoutMode::Block),
        reversed_vector_shape(make_dimension({2, 3, 5})),
        TrainShape({}, {DigitGroup{}}),
    };
    for (std::size_t k = 0; k < shapes.size(); ++k) {
        auto t = random_train(ranked(shapes[k], 2), k);
        const auto bytes = encode(t);
        const auto u = decode(bytes);
        EXPECT_TRUE(bitwise_equal<double>(t, u)) << k;
        EXPECT_EQ(u.center(), std::nullopt);
        EXPECT_EQ(encode(u), bytes) << k;
    }
}

TEST(TrainFile, DeterministicEncoding) {
    auto t = constant(make_trainshape(32), 1.5);
    EXPECT_EQ(encode(decode(encode(t))), encode(t));
    const auto bytes = encode(t);
    EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "QTTS");
    EXPECT_EQ(bytes[4], 1);
    EXPECT_EQ(bytes[5], 0);
}

TEST(TrainFile, CorruptionKinds) {
    const auto bytes = encode(random_train(ranked(make_trainshape(16), 2), 1));

    auto bad_magic = bytes;
    bad_magic[0] = 'X';
    EXPECT_THROW(decode(bad_magic), CorruptFileError);

    auto bumped = bytes;
    bumped[4] = 2;
    try {
        decode(bumped);
        FAIL() << "no error";
    } catch (const VersionError& e) {
        EXPECT_NE(std::string(e.what()).find("version 2, expected 1"), std::string::npos);
    }

    for (std::size_t cut : {std::size_t(3), std::size_t(8), std::size_t(20), bytes.size() - 1}) {
        std::vector<std::uint8_t> part(bytes.begin(), bytes.begin() + long(cut));
        if (cut < 4) EXPECT_THROW(decode(part), CorruptFileError);
        else EXPECT_THROW(decode(part), TruncatedFileError) << cut;
    }

    auto trailing = bytes;
    trailing.push_back(0);
    EXPECT_THROW(decode(trailing), CorruptFileError);

    auto bad_meta = bytes;
    bad_meta[10] = 'Z'; // first metadata byte
    EXPECT_THROW(decode(bad_meta), CorruptFileError);

    EXPECT_THROW(load(temp_file("missing.qtts")), FileError);
}

TEST(Ingest, CsvAndRaw) {
    const auto p = temp_file("vec.csv");
    std::string s;
    for (int k = 0; k < 1024; ++k) s += std::to_string(k * 0.5) + (k % 7 == 6 ? "\n" : ",");
    write_text(p, s);
    auto v = ingest_dense(p, DenseFormat::Csv, {make_dimension(1024)});
    ASSERT_EQ(v.shape(), std::vector<std::size_t>{1024});
    EXPECT_EQ(v.real()[1023], 511.5);

    write_text(p, "0,1,2,3\n4,5,6,7\n8,9,10,11\n");
    auto m = ingest_dense(p, DenseFormat::Csv, {make_dimension(3), make_dimension(4)});
    EXPECT_EQ(m.shape(), (std::vector<std::size_t>{3, 4}));
    EXPECT_EQ(m.real()[1 * 4 + 2], 6.0);

    write_text(p, "1,2,3,4,5,6,7,8,9,10");
    EXPECT_THROW(ingest_dense(p, DenseFormat::Csv, {make_dimension(12)}), ShapeError);
    write_text(p, "1,2,x");
    EXPECT_THROW(ingest_dense(p, DenseFormat::Csv, {make_dimension(3)}), ParseError);
    write_text(p, "1;2;3");
    EXPECT_THROW(ingest_dense(p, DenseFormat::Csv, {make_dimension(3)}), ParseError);

    const auto r = temp_file("vec.f64");
    {
        std::ofstream f(r, std::ios::binary);
        for (int k = 0; k < 6; ++k) {
            const double x = k * 1.25;
            f.write(reinterpret_cast<const char*>(&x), 8);
        }
    }
    auto raw = ingest_dense(r, DenseFormat::RawF64, {make_dimension(2), make_dimension(3)});
    EXPECT_EQ(raw.real()[5], 6.25);
    EXPECT_THROW(ingest_dense(r, DenseFormat::RawF64, {make_dimension(5)}), ShapeError);
}
