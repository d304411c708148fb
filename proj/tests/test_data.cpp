#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "trendlab/data.hpp"
#include "trendlab/errors.hpp"

using namespace trendlab;
using namespace trendlab::data;

namespace {

std::filesystem::path temp_file(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "trendlab_test_data";
    std::filesystem::create_directories(dir);
    return dir / name;
}

void write_text(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
}

}  // namespace

TEST_CASE("load_csv parses a well-formed file") {
    auto path = temp_file("ok.csv");
    write_text(path,
               "date,open,high,low,close,volume\n"
               "2020-01-02,100.5,101.25,99.75,100.0,1200\n"
               "2020-01-03,100.0,102.0,100.0,101.5,900\n");
    BarSeries s = load_csv(path);
    REQUIRE(s.bars.size() == 2);
    CHECK(s.bars[0].date.to_string() == "2020-01-02");
    CHECK(s.bars[0].open == 100.5);
    CHECK(s.bars[1].close == 101.5);
}

TEST_CASE("load_csv accepts shuffled headers and sorts rows by date") {
    auto path = temp_file("shuffled.csv");
    write_text(path,
               "Close,Date,Low,High,Open\n"
               "101.0,2020-01-03,99.0,102.0,100.0\n"
               "100.0,2020-01-02,99.0,101.0,100.0\n");
    BarSeries s = load_csv(path);
    REQUIRE(s.bars.size() == 2);
    CHECK(s.bars[0].date < s.bars[1].date);
    CHECK(s.bars[0].close == 100.0);
}

TEST_CASE("load_csv failure modes name the offending row") {
    auto low_above_high = temp_file("bad_ohlc.csv");
    write_text(low_above_high,
               "date,open,high,low,close\n"
               "2020-01-02,100,101,99,100\n"
               "2020-01-03,100,99.5,100.5,100\n");  // low > high
    CHECK_THROWS_WITH_AS(load_csv(low_above_high),
                         doctest::Contains("row 3"), ValidationError);

    auto dup = temp_file("dup.csv");
    write_text(dup,
               "date,open,high,low,close\n"
               "2020-01-02,100,101,99,100\n"
               "2020-01-02,100,101,99,100\n");
    CHECK_THROWS_AS(load_csv(dup), ValidationError);

    auto bad_number = temp_file("nan.csv");
    write_text(bad_number,
               "date,open,high,low,close\n"
               "2020-01-02,100,abc,99,100\n");
    CHECK_THROWS_AS(load_csv(bad_number), ParseError);

    auto bad_header = temp_file("header.csv");
    write_text(bad_header, "date,open,high,low\n2020-01-02,1,2,0\n");
    CHECK_THROWS_AS(load_csv(bad_header), ParseError);

    CHECK_THROWS_AS(load_csv(temp_file("missing_file.csv")), DataError);
}

TEST_CASE("save then load round-trips prices bitwise") {
    SynthParams params;
    params.kind = SynthKind::Gbm;
    params.bars = 252;
    params.initial_price = 2500.0;
    params.drift = 0.04;
    params.vol = 0.2;
    params.intrabar = 1.5;
    BarSeries s = synth_series(params, 99);

    auto path = temp_file("roundtrip.csv");
    save_csv(s, path);
    BarSeries back = load_csv(path);
    REQUIRE(back.bars.size() == s.bars.size());
    for (std::size_t i = 0; i < s.bars.size(); ++i) {
        CHECK(back.bars[i].date == s.bars[i].date);
        CHECK(back.bars[i].open == s.bars[i].open);    // bitwise
        CHECK(back.bars[i].high == s.bars[i].high);
        CHECK(back.bars[i].low == s.bars[i].low);
        CHECK(back.bars[i].close == s.bars[i].close);
    }
}

TEST_CASE("split partitions the covered range without loss") {
    SynthParams params;
    params.kind = SynthKind::TrendPlusNoise;
    params.bars = 252;
    params.initial_price = 100.0;
    params.slope = 0.1;
    params.noise = 0.5;
    params.start_date = Date(2020, 1, 1);
    BarSeries s = synth_series(params, 5);

    SplitSpec spec{Date(2020, 1, 1), Date(2020, 7, 1), Date(2021, 1, 1)};
    auto [train, test] = split(s, spec);
    CHECK(!train.bars.empty());
    CHECK(!test.bars.empty());
    // Roughly calendar halves.
    CHECK(std::abs(static_cast<int>(train.bars.size()) - static_cast<int>(test.bars.size())) <
          30);

    // Partition property: concatenation equals the input restricted to the range.
    std::vector<strategy::Bar> joined = train.bars;
    joined.insert(joined.end(), test.bars.begin(), test.bars.end());
    std::size_t k = 0;
    for (const auto& b : s.bars) {
        if (b.date < spec.train_start || !(b.date < spec.test_end)) continue;
        REQUIRE(k < joined.size());
        CHECK(joined[k].date == b.date);
        CHECK(joined[k].close == b.close);
        ++k;
    }
    CHECK(k == joined.size());

    for (const auto& b : train.bars) CHECK(b.date < spec.train_end);
    for (const auto& b : test.bars) CHECK(!(b.date < spec.train_end));
}

TEST_CASE("split failure modes") {
    SynthParams params;
    params.bars = 50;
    params.start_date = Date(2020, 6, 1);
    BarSeries s = synth_series(params, 1);

    // Boundary before the first bar: empty train segment.
    SplitSpec before{Date(2019, 1, 1), Date(2019, 6, 1), Date(2021, 1, 1)};
    CHECK_THROWS_AS(split(s, before), EmptySegmentError);

    SplitSpec inverted{Date(2020, 7, 1), Date(2020, 6, 15), Date(2020, 8, 1)};
    CHECK_THROWS_AS(split(s, inverted), ConfigError);
}

TEST_CASE("synthetic series are deterministic per seed") {
    SynthParams params;
    params.kind = SynthKind::Gbm;
    params.bars = 100;
    params.initial_price = 2500;
    params.drift = 0.1;
    params.vol = 0.3;
    params.intrabar = 2.0;
    BarSeries a = synth_series(params, 1234);
    BarSeries b = synth_series(params, 1234);
    BarSeries c = synth_series(params, 1235);
    REQUIRE(a.bars.size() == b.bars.size());
    bool all_equal = true;
    for (std::size_t i = 0; i < a.bars.size(); ++i) {
        CHECK(a.bars[i].close == b.bars[i].close);
        CHECK(a.bars[i].high == b.bars[i].high);
        all_equal = all_equal && a.bars[i].close == c.bars[i].close;
    }
    CHECK(!all_equal);
}

TEST_CASE("zero-volatility GBM with zero drift stays constant") {
    SynthParams params;
    params.kind = SynthKind::Gbm;
    params.bars = 30;
    params.initial_price = 123.25;
    BarSeries s = synth_series(params, 7);
    for (const auto& b : s.bars) {
        CHECK(b.close == 123.25);
        CHECK(b.open == 123.25);
    }
}

TEST_CASE("sine closes follow the closed form when noiseless") {
    SynthParams params;
    params.kind = SynthKind::SinePlusDrift;
    params.bars = 64;
    params.initial_price = 1000.0;
    params.amplitude = 25.0;
    params.period = 16.0;
    params.drift = 0.5;
    BarSeries s = synth_series(params, 3);
    for (int t = 0; t < 64; ++t) {
        double expected =
            1000.0 + 0.5 * t + 25.0 * std::sin(2.0 * M_PI * t / 16.0);
        CHECK(s.bars[t].close == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("sine regime change switches drift at the midpoint") {
    SynthParams params;
    params.kind = SynthKind::SinePlusDrift;
    params.bars = 100;
    params.initial_price = 500.0;
    params.amplitude = 0.0;
    params.drift = 1.0;
    params.drift2 = -1.0;
    BarSeries s = synth_series(params, 3);
    CHECK(s.bars[49].close == doctest::Approx(500.0 + 49).epsilon(1e-12));
    CHECK(s.bars[50].close == doctest::Approx(500.0 + 49 - 1).epsilon(1e-12));
    CHECK(s.bars[99].close == doctest::Approx(500.0 + 49 - 50).epsilon(1e-12));
}

TEST_CASE("bars land on weekdays only, strictly increasing") {
    SynthParams params;
    params.bars = 40;
    params.start_date = Date(2020, 1, 4);  // a Saturday
    BarSeries s = synth_series(params, 11);
    for (std::size_t i = 0; i < s.bars.size(); ++i) {
        CHECK(!s.bars[i].date.is_weekend());
        if (i > 0) CHECK(s.bars[i - 1].date < s.bars[i].date);
    }
}

TEST_CASE("synth spec parsing") {
    SynthParams p = parse_synth_spec("sine:n=252,s0=2500,amp=30,period=40,drift=0.4,noise=1,"
                                     "intrabar=2,start=2020-01-01,drift2=-0.4");
    CHECK(p.kind == SynthKind::SinePlusDrift);
    CHECK(p.bars == 252);
    CHECK(p.initial_price == 2500.0);
    CHECK(p.amplitude == 30.0);
    CHECK(p.period == 40.0);
    CHECK(p.drift == 0.4);
    CHECK(*p.drift2 == -0.4);
    CHECK(p.noise == 1.0);
    CHECK(p.intrabar == 2.0);
    CHECK(p.start_date == Date(2020, 1, 1));

    CHECK(parse_synth_spec("gbm").kind == SynthKind::Gbm);
    CHECK(parse_synth_spec("trend:slope=0.2").slope == 0.2);

    CHECK_THROWS_AS(parse_synth_spec("brownian:n=10"), ConfigError);
    CHECK_THROWS_AS(parse_synth_spec("gbm:n"), ConfigError);
    CHECK_THROWS_AS(parse_synth_spec("gbm:n=abc"), ConfigError);
    CHECK_THROWS_AS(parse_synth_spec("gbm:start=2020-13-01"), ConfigError);
}

TEST_CASE("date parsing and arithmetic") {
    Date d = Date::parse("2021-02-28");
    CHECK(d.to_string() == "2021-02-28");
    CHECK(!Date::try_parse("2021-02-30"));
    CHECK(!Date::try_parse("2021/02/28"));
    CHECK(!Date::try_parse("21-02-28"));
    CHECK_THROWS_AS(Date::parse("not-a-date"), ParseError);

    CHECK(Date(2021, 1, 4).days_until(Date(2021, 1, 11)) == 7);
    CHECK(Date(2021, 1, 8).next_weekday() == Date(2021, 1, 11));  // Fri -> Mon
    CHECK(Date(2021, 1, 4).month() == 1);
    CHECK(Date(2021, 1, 4).year() == 2021);
}
