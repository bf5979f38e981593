#include <doctest.h>

#include <set>
#include <sstream>
#include <string>

#include "mmldf/dataset.hpp"
#include "mmldf/errors.hpp"

using namespace mmldf;

TEST_SUITE("dataset") {

TEST_CASE("parse_libsvm fills absent indices with zeros") {
    const LabeledDataset ds = parse_libsvm("1 1:0.5 3:-2\n", 3);
    REQUIRE(ds.n() == 1);
    REQUIRE(ds.d() == 3);
    CHECK(ds.features(0, 0) == 0.5);
    CHECK(ds.features(0, 1) == 0.0);
    CHECK(ds.features(0, 2) == -2.0);
    CHECK(ds.num_classes() == 1);
}

TEST_CASE("parse_libsvm remaps labels ascending") {
    const LabeledDataset ds = parse_libsvm("+1 1:1\n-1 1:2\n");
    REQUIRE(ds.num_classes() == 2);
    CHECK(ds.label_map[0] == "-1");
    CHECK(ds.label_map[1] == "+1");
    CHECK(ds.labels[0] == 1);
    CHECK(ds.labels[1] == 0);
}

TEST_CASE("parse_libsvm rejects non-ascending indices with the line number") {
    try {
        parse_libsvm("1 3:1 2:1\n");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("non-ascending index") != std::string::npos);
        CHECK(e.line() == 1);
    }
}

TEST_CASE("parse_libsvm error cases") {
    CHECK_THROWS_AS(parse_libsvm(""), ParseError);
    CHECK_THROWS_AS(parse_libsvm("abc 1:1\n"), ParseError);
    CHECK_THROWS_AS(parse_libsvm("1 1:x\n"), ParseError);
    CHECK_THROWS_AS(parse_libsvm("1 4:1\n", 3), ParseError);
    try {
        parse_libsvm("1 1:1\n2 0:1\n");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
    }
}

TEST_CASE("libsvm round-trip is exact") {
    const std::string text = "-1 1:0.12345678901234567 4:-3.5\n+1 2:1e-30 3:7\n-1 1:2\n";
    const LabeledDataset ds = parse_libsvm(text, 4);
    std::ostringstream out;
    serialize_libsvm(ds, out);
    const LabeledDataset again = parse_libsvm(out.str(), 4);
    REQUIRE(again.n() == ds.n());
    REQUIRE(again.d() == ds.d());
    CHECK((again.features - ds.features).cwiseAbs().maxCoeff() == 0.0);
    CHECK(again.labels == ds.labels);
    CHECK(again.label_map == ds.label_map);
}

TEST_CASE("parse_csv basic table with header") {
    const LabeledDataset ds = parse_csv("y,a,b\n1,0.5,2\n2,1,3\n", "y", true);
    CHECK(ds.n() == 2);
    CHECK(ds.d() == 2);
    CHECK(ds.num_classes() == 2);
    CHECK(ds.features(0, 0) == 0.5);
    CHECK(ds.features(1, 1) == 3.0);
}

TEST_CASE("parse_csv single row without header") {
    const LabeledDataset ds = parse_csv("0,1.0\n", "0", false);
    CHECK(ds.n() == 1);
    CHECK(ds.d() == 1);
    CHECK(ds.features(0, 0) == 1.0);
}

TEST_CASE("parse_csv error messages carry row and column") {
    try {
        parse_csv("1,x\n", "0", false);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("non-numeric feature cell row 1 col 2") !=
              std::string::npos);
        CHECK(e.line() == 1);
    }
    CHECK_THROWS_AS(parse_csv("a,b\n1,2,3\n", "a", true), ParseError);  // ragged
    CHECK_THROWS_AS(parse_csv("a,b\n1,2\n", "missing", true), ParseError);
}

TEST_CASE("fit/apply standardize") {
    LabeledDataset ds;
    ds.features.resize(2, 2);
    ds.features << 1.0, 5.0, 3.0, 5.0;
    ds.labels = {0, 1};
    ds.label_map = {"0", "1"};

    const StandardizationStats stats = fit_standardize(ds);
    CHECK(stats.mean(0) == doctest::Approx(2.0));
    CHECK(stats.stddev(0) == doctest::Approx(1.0));  // population
    const LabeledDataset out = apply_standardize(ds, stats);
    CHECK(out.features(0, 0) == doctest::Approx(-1.0));
    CHECK(out.features(1, 0) == doctest::Approx(1.0));
    // constant column: centered only
    CHECK(out.features(0, 1) == 0.0);
    CHECK(out.features(1, 1) == 0.0);
}

TEST_CASE("apply_standardize with zero mean and unit stddev is identity") {
    LabeledDataset ds;
    ds.features.resize(2, 3);
    ds.features << 1, 2, 3, 4, 5, 6;
    ds.labels = {0, 1};
    ds.label_map = {"0", "1"};
    StandardizationStats stats;
    stats.mean = Eigen::VectorXd::Zero(3);
    stats.stddev = Eigen::VectorXd::Ones(3);
    const LabeledDataset out = apply_standardize(ds, stats);
    CHECK((out.features - ds.features).cwiseAbs().maxCoeff() == 0.0);

    stats.mean = Eigen::VectorXd::Zero(2);
    stats.stddev = Eigen::VectorXd::Ones(2);
    CHECK_THROWS_AS(apply_standardize(ds, stats), ConfigError);
}

TEST_CASE("apply o fit standardize yields zero mean unit stddev") {
    SynthSpec spec;
    spec.classes = 2;
    spec.samples_per_class = 20;
    spec.informative_dims = 4;
    const LabeledDataset ds = synth_blobs(spec, 3);
    const LabeledDataset out = apply_standardize(ds, fit_standardize(ds));
    const StandardizationStats check = fit_standardize(out);
    CHECK(check.mean.cwiseAbs().maxCoeff() < 1e-12);
    CHECK((check.stddev.array() - 1.0).abs().maxCoeff() < 1e-12);
}

TEST_CASE("split stratifies and partitions deterministically") {
    LabeledDataset ds;
    ds.features = Eigen::MatrixXd::Random(10, 3);
    ds.labels = {0, 0, 0, 0, 0, 1, 1, 1, 1, 1};
    ds.label_map = {"0", "1"};

    auto [train, test] = split(ds, 4, 7);
    CHECK(train.n() == 4);
    CHECK(test.n() == 6);
    int per_class[2] = {0, 0};
    for (int label : train.labels) ++per_class[label];
    CHECK(per_class[0] == 2);
    CHECK(per_class[1] == 2);

    auto [train2, test2] = split(ds, 4, 7);
    CHECK((train.features - train2.features).cwiseAbs().maxCoeff() == 0.0);
    CHECK(train.labels == train2.labels);

    // partition: every sample appears exactly once
    std::multiset<double> all;
    for (Eigen::Index i = 0; i < train.n(); ++i) all.insert(train.features(i, 0));
    for (Eigen::Index i = 0; i < test.n(); ++i) all.insert(test.features(i, 0));
    std::multiset<double> orig;
    for (Eigen::Index i = 0; i < ds.n(); ++i) orig.insert(ds.features(i, 0));
    CHECK(all == orig);

    CHECK_THROWS_AS(split(ds, 1, 0), ConfigError);   // cannot stratify
    CHECK_THROWS_AS(split(ds, 10, 0), ConfigError);  // out of range
}

TEST_CASE("synth_blobs shapes and determinism") {
    SynthSpec spec;
    spec.classes = 2;
    spec.samples_per_class = 50;
    spec.informative_dims = 5;
    spec.noise_dims = 45;
    spec.class_separation = 4.0;
    const LabeledDataset ds = synth_blobs(spec, 42);
    CHECK(ds.n() == 100);
    CHECK(ds.d() == 50);
    CHECK(ds.num_classes() == 2);

    const LabeledDataset again = synth_blobs(spec, 42);
    CHECK((ds.features - again.features).cwiseAbs().maxCoeff() == 0.0);

    const LabeledDataset other = synth_blobs(spec, 43);
    CHECK((ds.features - other.features).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("synth_blobs without noise has class-dependent means everywhere") {
    SynthSpec spec;
    spec.classes = 2;
    spec.samples_per_class = 400;
    spec.informative_dims = 4;
    spec.noise_dims = 0;
    spec.redundant_dims = 0;
    spec.class_separation = 6.0;
    const LabeledDataset ds = synth_blobs(spec, 5);
    Eigen::RowVectorXd mean0 = Eigen::RowVectorXd::Zero(4);
    Eigen::RowVectorXd mean1 = Eigen::RowVectorXd::Zero(4);
    for (Eigen::Index i = 0; i < ds.n(); ++i) {
        (ds.labels[static_cast<size_t>(i)] == 0 ? mean0 : mean1) += ds.features.row(i);
    }
    mean0 /= 400.0;
    mean1 /= 400.0;
    CHECK((mean0 - mean1).norm() > 4.0);  // separation 6 with sampling noise
}

TEST_CASE("align_labels remaps against a reference map") {
    LabeledDataset ds;
    ds.features = Eigen::MatrixXd::Zero(2, 1);
    ds.labels = {0, 1};
    ds.label_map = {"2", "5"};
    const LabeledDataset aligned = align_labels(ds, {"1", "2", "5"});
    CHECK(aligned.labels[0] == 1);
    CHECK(aligned.labels[1] == 2);
    CHECK_THROWS_AS(align_labels(ds, {"1", "5"}), ConfigError);
}

TEST_CASE("dataset digest changes with content") {
    SynthSpec spec;
    spec.classes = 2;
    spec.samples_per_class = 5;
    spec.informative_dims = 3;
    const LabeledDataset a = synth_blobs(spec, 1);
    const LabeledDataset b = synth_blobs(spec, 2);
    CHECK(dataset_digest(a) == dataset_digest(a));
    CHECK(dataset_digest(a) != dataset_digest(b));
}

}  // TEST_SUITE
