#include "collectiva/io.hpp"

#include <gtest/gtest.h>

#include <filesystem>

using namespace collectiva;
using namespace collectiva::io;

TEST(Sequences, RawIsMostSignificantBitFirst) {
    auto x = parse_sequence(std::string("\xA0\x01", 2), Format::raw);
    ASSERT_EQ(x.size(), 16U);
    const std::vector<std::uint8_t> want{1, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1};
    EXPECT_EQ(x.bits(), want);
    EXPECT_EQ(x.alphabet(), LabelAlphabet::binary());
}

TEST(Sequences, AsciiIgnoresWhitespace) {
    auto x = parse_sequence("01 1\n0\r\n", Format::ascii);
    EXPECT_EQ(x.bits(), (std::vector<std::uint8_t>{0, 1, 1, 0}));
    auto y = parse_sequence("1111", Format::ascii);
    EXPECT_EQ(y.alphabet(), LabelAlphabet::binary());
    auto z = parse_sequence("cab", Format::ascii);
    EXPECT_EQ(z.alphabet().labels(), (std::vector<std::string>{"a", "b", "c"}));
    EXPECT_EQ(z[0], 2);
    auto w = parse_sequence("aaa", Format::ascii);
    EXPECT_EQ(w.alphabet().size(), 2U);
}

TEST(Sequences, CsvLabelsAndErrors) {
    auto x = parse_sequence("heads,tails\n# comment\ntails\n", Format::csv);
    EXPECT_EQ(x.size(), 3U);
    EXPECT_EQ(x.alphabet().labels(), (std::vector<std::string>{"heads", "tails"}));
    EXPECT_THROW(parse_sequence("a,,b", Format::csv), input_error);
    for (auto f : {Format::raw, Format::ascii, Format::csv}) EXPECT_THROW(parse_sequence("", f), input_error);
    EXPECT_THROW(parse_sequence(std::string("0\x01", 2), Format::ascii), input_error);
    EXPECT_THROW(parse_format("xml"), input_error);
    EXPECT_THROW(read_file("/nonexistent/path"), input_error);
}

TEST(Rationals, MixedSyntax) {
    auto q = parse_rationals("1/3, -2\n0.25\n# skip\n");
    EXPECT_EQ(q, (std::vector<Rational>{Rational(1, 3), Rational(-2), Rational(1, 4)}));
    EXPECT_THROW(parse_rationals("1/0"), input_error);
    EXPECT_THROW(parse_rationals("\n"), input_error);
}

TEST(Marginals, CsvFamily) {
    auto fam = parse_family_csv("observable_set,value_tuple,mass\na1 a2,1 1,1/2\na1 a2,-1 -1,1/2\na1,1,1/2\na1,-1,1/2\n");
    ASSERT_EQ(fam.size(), 2U);
    EXPECT_EQ(fam[0].observables(), (std::vector<std::string>{"a1", "a2"}));
    EXPECT_EQ(fam[0].at({1, -1}), 0);
    EXPECT_EQ(fam[0].at({1, 1}), Rational(1, 2));
    EXPECT_THROW(parse_family_csv("a1,1,1/2\na1,1,1/2\n"), input_error);
    EXPECT_THROW(parse_family_csv("a1 a2,1,1\n"), input_error);
    EXPECT_THROW(parse_family_csv("a1,1,3/2\na1,2,-1/2\n"), input_error);
}

TEST(Marginals, JsonShapes) {
    auto t = parse_marginal_json(R"({"correlations": {"E12": "1", "E23": 1, "E13": -1}})");
    ASSERT_TRUE(t.triple.has_value());
    EXPECT_EQ(t.triple->e13, -1);
    EXPECT_EQ(t.family.size(), 3U);
    auto j = parse_marginal_json(
        R"({"joint": {"observables": ["x", "y"], "mass": [[[0, 0], "1/2"], [[1, 1], "1/2"]]}, "export": [["x"], ["y"]]})");
    ASSERT_TRUE(j.source_joint.has_value());
    ASSERT_EQ(j.family.size(), 2U);
    EXPECT_EQ(j.family[1].at({1}), Rational(1, 2));
    EXPECT_THROW(parse_marginal_json(R"({"correlations": {"E12": 2, "E23": 0, "E13": 0}})"), input_error);
    EXPECT_THROW(parse_marginal_json("[1,2]"), input_error);
    EXPECT_THROW(parse_marginal_json("{"), input_error);
    EXPECT_THROW(parse_marginal_json("{}"), input_error);
}

TEST(Signed, JsonKeepsFileOrder) {
    auto s = parse_signed_json(R"({"weights": {"z": "-1/2", "a": "3/2"}, "variable": {"a": 7}})");
    EXPECT_EQ(s.space.sample_space().atoms(), (std::vector<std::string>{"z", "a"}));
    EXPECT_EQ(s.space.weights()[0], Rational(-1, 2));
    EXPECT_EQ(s.variable, (std::vector<Rational>{0, 7}));
    EXPECT_THROW(parse_signed_json(R"({"weights": {"a": "1/2"}})"), normalization_error);
    EXPECT_THROW(parse_signed_json(R"({"weights": {"a": 1}, "variable": {"b": 1}})"), input_error);
}

TEST(Files, AtomicWriteReplaces) {
    const auto p = std::filesystem::temp_directory_path() / "collectiva_io_test.txt";
    write_file_atomic(p.string(), "first");
    write_file_atomic(p.string(), "second");
    EXPECT_EQ(read_file(p.string()), "second");
    EXPECT_FALSE(std::filesystem::exists(p.string() + ".tmp"));
    std::filesystem::remove(p);
    EXPECT_THROW(write_file_atomic("/nonexistent/dir/report.json", "x"), input_error);
}

TEST(Rationals, LeadingZerosAreDecimal) {
    EXPECT_EQ(parse_rational("010"), Rational(10));
    EXPECT_EQ(parse_rational("-007/010"), Rational(-7, 10));
    EXPECT_EQ(parse_rational("0.0625"), Rational(1, 16));
    EXPECT_EQ(parse_rational("0"), Rational(0));
    EXPECT_EQ(parse_rational("2.5e-1"), Rational(1, 4));
    EXPECT_THROW(parse_rational("0x10"), input_error);
}
