#include "robustot/measure.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

using namespace robustot;
using robustot::testing::line_measure;

namespace {

std::filesystem::path temp_path(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("robustot_test_" + name);
}

}  // namespace

TEST(Measure, RejectsInvalidData) {
    EXPECT_THROW(DiscreteMeasure(Matrix(1, 0), Vector(0)), ValidationError);
    EXPECT_THROW(DiscreteMeasure(Matrix::Zero(1, 2), Vector::Ones(3)), ValidationError);
    EXPECT_THROW(DiscreteMeasure(Matrix::Zero(1, 2), (Vector(2) << 1.5, -0.5).finished()), ValidationError);
    EXPECT_THROW(DiscreteMeasure(Matrix::Zero(1, 2), (Vector(2) << 0.3, 0.3).finished()), ValidationError);
    Matrix bad = Matrix::Zero(1, 1);
    bad(0, 0) = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(DiscreteMeasure(bad, Vector::Ones(1)), ValidationError);
    EXPECT_THROW(DiscreteMeasure(Matrix::Zero(1, 2), Vector::Zero(2), true), ValidationError);
}

TEST(Measure, RenormalizesOnRequest) {
    const DiscreteMeasure m(Matrix::Zero(1, 2), (Vector(2) << 0.3, 0.3).finished(), true);
    EXPECT_DOUBLE_EQ(m.weight(0), 0.5);
    EXPECT_DOUBLE_EQ(m.weight(1), 0.5);
}

TEST(Measure, ShiftAndDiameter) {
    const auto m = line_measure({0.0, 3.0, -1.0}, {1, 1, 2});
    EXPECT_DOUBLE_EQ(m.diameter(), 4.0);
    const auto s = m.shifted(Vector::Constant(1, 2.5));
    EXPECT_DOUBLE_EQ(s.points()(0, 1), 5.5);
    EXPECT_EQ(s.weights(), m.weights());
}

TEST(MeasureCsv, ParsesSpecExample) {
    const auto m = parse_measure_csv("weight,x0\n0.5,0\n0.5,10\n", false);
    EXPECT_EQ(m.size(), 2);
    EXPECT_EQ(m.dim(), 1);
    EXPECT_DOUBLE_EQ(m.points()(0, 1), 10.0);
}

TEST(MeasureCsv, RenormalizeFlag) {
    const auto m = parse_measure_csv("weight,x0\n0.3,0\n0.3,1\n", true);
    EXPECT_DOUBLE_EQ(m.weight(0), 0.5);
    EXPECT_THROW(parse_measure_csv("weight,x0\n0.3,0\n0.3,1\n", false), ValidationError);
}

TEST(MeasureCsv, DimensionMismatchIsRejected) {
    EXPECT_THROW(parse_measure_csv("weight,x0\n0.5,0\n0.5,1,2\n", false), ValidationError);
}

TEST(MeasureCsv, BadHeaderAndGarbageAreRejected) {
    EXPECT_THROW(parse_measure_csv("w,x\n1,0\n", false), ValidationError);
    EXPECT_THROW(parse_measure_csv("weight,x0\n1,abc\n", false), ValidationError);
    EXPECT_THROW(parse_measure_csv("weight,x0\n", false), ValidationError);
}

TEST(MeasureCsv, RoundTripIsExact) {
    std::mt19937_64 rng(7);
    const auto m = robustot::testing::random_measure(rng, 9, 3, 5.0);
    const auto back = parse_measure_csv(format_measure_csv(m), false);
    EXPECT_EQ(back.points(), m.points());
    EXPECT_EQ(back.weights(), m.weights());

    const auto path = temp_path("roundtrip.csv");
    save_measure(m, path);
    const auto loaded = load_measure(path, false);
    EXPECT_EQ(loaded.points(), m.points());
    std::filesystem::remove(path);
}

TEST(MeasureCsv, MissingFileIsValidationError) {
    EXPECT_THROW(load_measure("/nonexistent/measure.csv", true), ValidationError);
}

TEST(Images, DiagonalImage) {
    Image img(2, 2);
    img << 1, 0, 0, 1;
    const auto m = image_to_measure(img);
    ASSERT_EQ(m.size(), 2);
    EXPECT_DOUBLE_EQ(m.weight(0), 0.5);
    EXPECT_DOUBLE_EQ(m.weight(1), 0.5);
}

TEST(Images, SinglePixelIsDiracAtOrigin) {
    Image img(1, 1);
    img << 7;
    const auto m = image_to_measure(img);
    ASSERT_EQ(m.size(), 1);
    EXPECT_DOUBLE_EQ(m.weight(0), 1.0);
    EXPECT_DOUBLE_EQ(m.points()(0, 0), 0.0);
    EXPECT_DOUBLE_EQ(m.points()(1, 0), 0.0);
}

TEST(Images, SupportSizeEqualsPositivePixels) {
    Image img = Image::Zero(6, 5);
    img(0, 0) = 3;
    img(2, 4) = 1;
    img(5, 1) = 0.5;
    const auto m = image_to_measure(img);
    EXPECT_EQ(m.size(), (img.array() > 0).count());
    EXPECT_THROW(image_to_measure(Image::Zero(3, 3)), ValidationError);
}

TEST(Images, BilinearSplatConservesMass) {
    Matrix pts(2, 2);
    pts << 0.5, 2.0, 1.25, 3.0;
    const DiscreteMeasure m(pts, (Vector(2) << 0.4, 0.6).finished());
    const Image img = measure_to_image(m, 4, 4);
    EXPECT_NEAR(img.sum(), 1.0, 1e-12);
    // (0.5, 1.25): weights 0.5/0.5 in rows, 0.75/0.25 in cols.
    EXPECT_NEAR(img(0, 1), 0.4 * 0.5 * 0.75, 1e-12);
    EXPECT_NEAR(img(1, 2), 0.4 * 0.5 * 0.25, 1e-12);
    EXPECT_NEAR(img(2, 3), 0.6, 1e-12);
}

TEST(Images, PgmRoundTrip) {
    Image img = Image::Zero(3, 4);
    img(0, 1) = 255;
    img(2, 3) = 128;
    for (bool ascii : {true, false}) {
        const auto path = temp_path(ascii ? "a.pgm" : "b.pgm");
        write_pgm(img, path, ascii);
        const Image back = read_pgm(path);
        EXPECT_EQ(back, img);
        std::filesystem::remove(path);
    }
}

TEST(Images, PgmWithComments) {
    const auto path = temp_path("comment.pgm");
    {
        std::ofstream f(path);
        f << "P2\n# made by hand\n2 1\n# max\n9\n3 9\n";
    }
    const Image img = read_pgm(path);
    EXPECT_EQ(img.rows(), 1);
    EXPECT_EQ(img.cols(), 2);
    EXPECT_DOUBLE_EQ(img(0, 1), 9.0);
    std::filesystem::remove(path);
}

TEST(Prune, DropsTinyAtom) {
    const DiscreteMeasure m(robustot::testing::line_points({0, 1}), (Vector(2) << 0.999999, 1e-13).finished(),
                            true);
    const auto p = prune(m, 1e-12);
    ASSERT_EQ(p.size(), 1);
    EXPECT_DOUBLE_EQ(p.weight(0), 1.0);
}

TEST(Prune, ThresholdZeroIsIdentity) {
    const DiscreteMeasure m(robustot::testing::line_points({0, 1, 2}), (Vector(3) << 0.5, 0.0, 0.5).finished());
    const auto p = prune(m, 0.0);
    EXPECT_EQ(p.points(), m.points());
    EXPECT_EQ(p.weights(), m.weights());
}

TEST(Prune, RenormalizesSurvivors) {
    const auto m = line_measure({0, 1, 2}, {0.4, 0.35, 0.25});
    const auto p = prune(m, 0.3);
    ASSERT_EQ(p.size(), 2);
    EXPECT_NEAR(p.weight(0), 0.4 / 0.75, 1e-15);
    EXPECT_NEAR(p.weight(1), 0.35 / 0.75, 1e-15);
}

TEST(Prune, Idempotent) {
    std::mt19937_64 rng(3);
    for (int t = 0; t < 20; ++t) {
        const auto m = robustot::testing::random_measure(rng, 8, 2);
        const auto once = prune(m, 0.1);
        const auto twice = prune(once, 0.1);
        EXPECT_EQ(once.points(), twice.points());
        EXPECT_TRUE(once.weights().isApprox(twice.weights(), 1e-15));
    }
}

TEST(Prune, KeepsHeaviestWhenAllBelowThreshold) {
    const auto m = line_measure({0, 1, 2}, {0.3, 0.4, 0.3});
    const auto p = prune(m, 0.9);
    ASSERT_EQ(p.size(), 1);
    EXPECT_DOUBLE_EQ(p.points()(0, 0), 1.0);
}

TEST(Dedupe, MergesDuplicatesAndNearDuplicates) {
    const auto m = line_measure({1, 2, 1}, {0.25, 0.5, 0.25});
    const auto merged = merge_duplicates(m);
    ASSERT_EQ(merged.size(), 2);
    EXPECT_DOUBLE_EQ(merged.weight(0), 0.5);

    std::vector<Vector> pts{Vector::Constant(1, 0.0), Vector::Constant(1, 1e-12), Vector::Constant(1, 1.0)};
    EXPECT_EQ(dedupe_points(pts, 1e-9).size(), 2u);
    EXPECT_EQ(stack_columns(split_columns(m.points())), m.points());
}
