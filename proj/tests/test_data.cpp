#include "adbn/data.hpp"
#include "adbn/error.hpp"

#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <sstream>

#include "doctest.h"

using namespace adbn;

namespace {

Dataset parse(const std::string& text, const std::string& label = "y", SchemaHints hints = {}) {
    std::istringstream in(text);
    hints.label_column = label;
    return parse_csv(in, hints);
}

std::string error_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST_CASE("a three-row fixture parses exactly") {
    const auto ds = parse("age,urine,y\n72,(-),pos\n10, (1+) ,neg\n134,\"(+-)\",pos\n");
    REQUIRE(ds.size() == 3);
    REQUIRE(ds.features.size() == 2);
    CHECK(ds.features[0].name == "age");
    CHECK(ds.features[0].kind == FeatureKind::continuous);
    CHECK(ds.features[1].kind == FeatureKind::categorical);
    CHECK(ds.rows[0] == std::vector<std::string>{"72", "(-)"});
    CHECK(ds.rows[1] == std::vector<std::string>{"10", "(1+)"});
    CHECK(ds.rows[2] == std::vector<std::string>{"134", "(+-)"});
    CHECK(ds.labels == std::vector<std::string>{"pos", "neg", "pos"});
    CHECK(ds.stats[0].min == 10.0);
    CHECK(ds.stats[0].max == 134.0);
    CHECK(ds.stats[1].distinct == 3);
    CHECK(ds.class_labels() == std::vector<std::string>{"neg", "pos"});
    CHECK(ds.label_indices(ds.class_labels()) == std::vector<std::size_t>{1, 0, 1});
}

TEST_CASE("a code-style column becomes a three-level categorical feature") {
    const auto ds = parse("occult_blood,y\n(−),a\n(±),b\n(1+),a\n(−),b\n");
    REQUIRE(ds.features.size() == 1);
    CHECK(ds.features[0].kind == FeatureKind::categorical);
    CHECK(ds.stats[0].distinct == 3);
    const auto enc = FeatureEncoder::fit(ds);
    CHECK(enc.width() == 3);
}

TEST_CASE("quoted fields keep commas, quotes and padding") {
    const auto ds = parse("name,y\n\"a, b\",1\n\"say \"\"hi\"\"\",0\n\" padded \",1\n");
    CHECK(ds.rows[0][0] == "a, b");
    CHECK(ds.rows[1][0] == "say \"hi\"");
    CHECK(ds.rows[2][0] == " padded ");
}

TEST_CASE("structural CSV errors carry coordinates") {
    const std::string ragged = "a,b,y\n1,2,x\n3,4,x\n5,6,x\n7,8,x\n9,10,x\n11,x\n13,14,x\n";
    const auto msg = error_of([&] { parse(ragged); });
    CHECK(msg.find("row 7") != std::string::npos);
    CHECK_FALSE(error_of([] { parse(""); }).empty());
    CHECK_FALSE(error_of([] { parse("a,y\n"); }).empty());
    SchemaHints hints;
    hints.columns["a"] = {FeatureKind::continuous, {}};
    const auto bad_num = error_of([&] { parse("a,y\n1,x\nabc,y\n", "y", hints); });
    CHECK(bad_num.find("row 3") != std::string::npos);
    CHECK(bad_num.find("'a'") != std::string::npos);
}

TEST_CASE("a missing label column is a schema error naming the column") {
    try {
        parse("a,b\n1,2\n", "cancer");
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::schema_mismatch);
        CHECK(std::string(e.what()).find("cancer") != std::string::npos);
    }
}

TEST_CASE("min-max scaling over an observed range") {
    const auto ds = parse("age,y\n10,a\n134,b\n50,a\n");
    const auto enc = FeatureEncoder::fit(ds);
    const std::vector<std::string> mid{"72"}, lo{"10"}, hi{"134"}, above{"200"}, below{"-5"};
    CHECK(enc.encode_row(mid)[0] == doctest::Approx((72.0 - 10.0) / 124.0).epsilon(1e-15));
    CHECK(enc.encode_row(mid)[0] == doctest::Approx(0.5));
    CHECK(enc.encode_row(lo)[0] == 0.0);
    CHECK(enc.encode_row(hi)[0] == 1.0);
    CHECK(enc.encode_row(above)[0] == 1.0);
    CHECK(enc.encode_row(below)[0] == 0.0);
    for (double x : {10.0, 33.3, 72.0, 134.0}) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.17g", x);
        const std::vector<std::string> cell{buf};
        CHECK(std::abs(enc.decode_continuous(0, enc.encode_row(cell)[0]) - x) < 1e-9);
    }
}

TEST_CASE("one-hot and ordinal encodings") {
    SchemaHints hints;
    hints.columns["grade"] = {FeatureKind::ordinal, {"low", "mid", "high"}};
    hints.columns["code"] = {FeatureKind::categorical, {"A", "B", "C"}};
    const auto ds = parse("code,grade,y\nA,low,1\nB,mid,0\nC,high,1\n", "y", hints);
    const auto enc = FeatureEncoder::fit(ds);
    CHECK(enc.width() == 4);
    const std::vector<std::string> row{"B", "high"};
    CHECK(enc.encode_row(row) == Vector{0.0, 1.0, 0.0, 1.0});
    const std::vector<std::string> row2{"A", "mid"};
    CHECK(enc.encode_row(row2) == Vector{1.0, 0.0, 0.0, 0.5});
    const std::vector<std::string> unseen{"Z", "low"};
    try {
        (void)enc.encode_row(unseen);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::schema_mismatch);
        CHECK(std::string(e.what()).find("Z") != std::string::npos);
    }
}

TEST_CASE("an encoder fit on the train split clamps poisoned test rows") {
    auto ds = parse("x,y\n0,a\n1,a\n2,b\n3,b\n999,a\n");
    const std::vector<std::size_t> train{0, 1, 2, 3}, test{4};
    const auto enc = FeatureEncoder::fit(ds, train);
    CHECK(enc.features()[0].max == 3.0);
    const auto m = enc.encode(ds, test);
    CHECK(m(0, 0) == 1.0);
    const auto all = enc.encode(ds);
    for (double v : all.data()) CHECK((v >= 0.0 && v <= 1.0));
}

TEST_CASE("encoding looks up columns by name and can impute") {
    const auto train = parse("a,b,y\n1,x,p\n3,x,n\n5,z,p\n");
    const auto enc = FeatureEncoder::fit(train);
    const auto reordered = parse("b,extra,a,y\nz,9,3,p\n");
    const auto m = enc.encode(reordered);
    CHECK(m(0, 0) == doctest::Approx(0.5));
    CHECK(m(0, 2) == 1.0);
    const auto missing = parse("b,y\nz,p\n");
    CHECK_THROWS_AS(enc.encode(missing), Error);
    const auto imputed = enc.encode(missing, true);
    CHECK(imputed(0, 0) == doctest::Approx(0.5));  // mean 3 of range [1, 5]
}

TEST_CASE("encoder JSON round trip and schema hash") {
    SchemaHints hints;
    hints.columns["g"] = {FeatureKind::ordinal, {"lo", "hi"}};
    const auto ds = parse("a,g,c,y\n1.5,lo,u,1\n2.5,hi,v,0\n", "y", hints);
    const auto enc = FeatureEncoder::fit(ds);
    const auto back = FeatureEncoder::from_json(enc.to_json());
    CHECK(back == enc);
    CHECK(back.schema_hash() == enc.schema_hash());
    const auto other = FeatureEncoder::fit(parse("a,g2,c,y\n1.5,lo,u,1\n2.5,hi,v,0\n"));
    CHECK(other.schema_hash() != enc.schema_hash());
}

TEST_CASE("stratified split proportions") {
    std::string text = "x,y\n";
    for (int i = 0; i < 100; ++i) text += std::to_string(i) + "," + (i % 4 == 0 ? "rare" : "common") + "\n";
    auto ds = parse(text);
    split(ds, 0.8, 7);
    const auto train = ds.rows_with(SplitRole::train);
    const auto test = ds.rows_with(SplitRole::test);
    CHECK(train.size() == 80);
    CHECK(test.size() == 20);
    std::map<std::string, int> per_class;
    for (auto r : train) per_class[ds.labels[r]]++;
    CHECK(std::abs(per_class["rare"] - 0.8 * 25) <= 1.0);
    CHECK(std::abs(per_class["common"] - 0.8 * 75) <= 1.0);
    auto again = parse(text);
    split(again, 0.8, 7);
    CHECK(again.assignment == ds.assignment);
    auto other = parse(text);
    split(other, 0.8, 8);
    CHECK(other.assignment != ds.assignment);
}

TEST_CASE("split rejects a singleton class and bad fractions") {
    auto ds = parse("x,y\n1,a\n2,a\n3,b\n");
    CHECK_THROWS_AS(split(ds, 0.5, 1), Error);
    auto ok = parse("x,y\n1,a\n2,a\n3,b\n4,b\n");
    CHECK_THROWS_AS(split(ok, 0.0, 1), Error);
    CHECK_THROWS_AS(split(ok, 1.0, 1), Error);
}

TEST_CASE("load, save and load again is an identity") {
    SchemaHints hints;
    hints.label_column = "y";
    const auto ds = parse("v,name,y\n1.25,\"a, b\",t\n-3,plain,f\n0,\" sp \",t\n");
    const auto dir = std::filesystem::temp_directory_path() / "adbn_test_data";
    std::filesystem::create_directories(dir);
    save_csv(ds, dir / "t.csv");
    const auto back = load_csv(dir / "t.csv", hints);
    CHECK(back.rows == ds.rows);
    CHECK(back.labels == ds.labels);
    CHECK(to_csv(back) == to_csv(ds));
    std::filesystem::remove_all(dir);
}

TEST_CASE("planted data without noise follows the rule") {
    const auto spec = parse_planted_spec("features 5\nrows 500\nnoise 0\nseed 3\nrule f3 > 0.7\n");
    const auto gen = generate_planted(spec);
    REQUIRE(gen.dataset.size() == 500);
    std::size_t positives = 0;
    for (std::size_t r = 0; r < 500; ++r) {
        const bool rule = gen.dataset.numeric(r, 3) > 0.7;
        CHECK(gen.truth[r] == rule);
        CHECK((gen.dataset.labels[r] == "positive") == rule);
        positives += rule;
    }
    CHECK(positives > 100);
    CHECK(spec.informative_features() == std::vector<std::size_t>{3});
}

TEST_CASE("planted noise rate matches a binomial band") {
    PlantedSpec spec;
    spec.feature_count = 4;
    spec.rows = 10000;
    spec.noise = 0.1;
    spec.seed = 11;
    spec.rules.push_back({{{0, Comparison::greater, 0.5}, {1, Comparison::less_equal, 0.5}}});
    const auto gen = generate_planted(spec);
    std::size_t flipped = 0;
    for (std::size_t r = 0; r < spec.rows; ++r) flipped += gen.truth[r] != (gen.dataset.labels[r] == "positive");
    CHECK(std::abs(static_cast<double>(flipped) / spec.rows - 0.1) <= 0.02);
}

TEST_CASE("planted generation is reproducible per seed") {
    const auto spec = parse_planted_spec("features 3\nrows 50\nseed 9\nrange f1 10 134\nrule f0 > 0.5 and f1 <= 60\n");
    const auto a = to_csv(generate_planted(spec).dataset);
    const auto b = to_csv(generate_planted(spec).dataset);
    CHECK(a == b);
    auto spec2 = spec;
    spec2.seed = 10;
    CHECK(to_csv(generate_planted(spec2).dataset) != a);
    const auto gen = generate_planted(spec);
    for (std::size_t r = 0; r < 50; ++r) {
        CHECK(gen.dataset.numeric(r, 1) >= 10.0);
        CHECK(gen.dataset.numeric(r, 1) < 134.0);
    }
}

TEST_CASE("planted specs are validated") {
    CHECK_THROWS_AS(parse_planted_spec("features 3\nrule f0 > 0.7 and f0 < 0.2\n"), Error);
    CHECK_THROWS_AS(parse_planted_spec("features 3\nrule f5 > 0.5\n"), Error);
    CHECK_THROWS_AS(parse_planted_spec("features 3\nnoise 0.5\nrule f0 > 0.5\n"), Error);
    CHECK_THROWS_AS(parse_planted_spec("features 3\nwibble 2\n"), Error);
    const auto ok = parse_planted_spec("# comment\nfeatures 3\n\nrule f0 >= 0.2 and f0 < 0.7 # inline\nrule f2 > 0.9\n");
    CHECK(ok.rules.size() == 2);
    CHECK(ok.informative_features() == std::vector<std::size_t>{0, 2});
}
