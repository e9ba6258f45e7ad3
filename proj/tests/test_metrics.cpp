#include <catch_amalgamated.hpp>

#include <sstream>

#include "edformer/error.hpp"
#include "edformer/metrics.hpp"

using namespace edformer;
using namespace edformer::metrics;

TEST_CASE("mse and mae hand values") {
    const std::vector<double> pred{1, 2};
    const std::vector<double> truth{2, 4};
    CHECK(mse(pred, truth) == 2.5);
    CHECK(mae(pred, truth) == 1.5);
    CHECK(mse(truth, truth) == 0.0);
    CHECK(mae(truth, truth) == 0.0);
    CHECK_THROWS_AS(mse(pred, std::vector<double>{1}), ShapeError);
    CHECK_THROWS_AS(mae(std::vector<double>{}, std::vector<double>{}), ShapeError);
    CHECK_THROWS_AS(mse(engine::Tensor({2, 1}), engine::Tensor({1, 2})), ShapeError);
}

TEST_CASE("horizon summary is order independent") {
    const std::vector<HorizonResult> a{{96, 0.4, 0.5}, {192, 0.6, 0.7}, {336, 0.5, 0.6}};
    const std::vector<HorizonResult> b{a[2], a[0], a[1]};
    const auto sa = summarize_horizons(a);
    const auto sb = summarize_horizons(b);
    CHECK(sa.mean_mse == sb.mean_mse);
    CHECK(sa.std_mae == sb.std_mae);
    CHECK(sa.horizons[0].horizon == 96);
    CHECK(sa.horizons[2].horizon == 336);
    CHECK(sa.mean_mse == Catch::Approx(0.5));
    CHECK(sa.std_mse == Catch::Approx(std::sqrt(0.02 / 3)));
}

TEST_CASE("report csv layout") {
    const std::vector<HorizonResult> r{{12, 0.25, 0.5}, {24, 0.75, 1.0}};
    std::ostringstream out;
    write_report_csv(out, "toy", summarize_horizons(r));
    CHECK(out.str() ==
          "dataset,horizon,mse,mae\n"
          "toy,12,0.25,0.5\n"
          "toy,24,0.75,1\n"
          "toy,mean,0.5,0.75\n"
          "toy,std,0.25,0.25\n");
}
