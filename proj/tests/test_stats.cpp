#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>

#include "tsmbo/io.hpp"
#include "tsmbo/stats.hpp"

using namespace tsmbo;

TEST_CASE("pearson") {
  const std::vector<double> x = {1.0, 2.0, 3.0, 4.0};

  SUBCASE("perfect correlation") {
    const std::vector<double> y = {2.0, 4.0, 6.0, 8.0};
    CHECK(*pearson(x, y) == doctest::Approx(1.0));
  }
  SUBCASE("perfect anti-correlation") {
    const std::vector<double> y = {8.0, 6.0, 4.0, 2.0};
    CHECK(*pearson(x, y) == doctest::Approx(-1.0));
  }
  SUBCASE("zero variance is undefined") {
    const std::vector<double> y = {5.0, 5.0, 5.0, 5.0};
    CHECK_FALSE(pearson(x, y).has_value());
    CHECK_FALSE(pearson(y, x).has_value());
  }
  SUBCASE("shift and scale invariance") {
    const std::vector<double> y = {3.0, -1.0, 2.0, 7.0};
    std::vector<double> y2;
    for (double v : y) y2.push_back(-2.5 * v + 11.0);
    CHECK(*pearson(x, y2) == doctest::Approx(-*pearson(x, y)));
  }
}

TEST_CASE("quantile returns order statistics") {
  const std::vector<double> xs = {5.0, 1.0, 4.0, 2.0, 3.0};
  CHECK(quantile(xs, 0.5) == 3.0);
  CHECK(quantile(xs, 0.25) == 2.0);
  CHECK(quantile(xs, 0.75) == 4.0);
  CHECK(quantile(xs, 1.0) == 5.0);
  CHECK(quantile({7.0}, 0.5) == 7.0);
}

TEST_CASE("mid ranks average ties") {
  const std::vector<double> xs = {10.0, 20.0, 20.0, 30.0};
  const std::vector<double> r = mid_ranks(xs);
  CHECK(r == std::vector<double>{1.0, 2.5, 2.5, 4.0});
}

TEST_CASE("chi-square survival function") {
  SUBCASE("closed forms at even dof") {
    // dof 2: exp(-x/2); dof 4: exp(-x/2) (1 + x/2).
    for (double x : {0.5, 1.0, 3.6, 7.2, 15.0}) {
      CHECK(chi_square_sf(x, 2) == doctest::Approx(std::exp(-x / 2.0)).epsilon(1e-12));
      CHECK(chi_square_sf(x, 4) ==
            doctest::Approx(std::exp(-x / 2.0) * (1.0 + x / 2.0)).epsilon(1e-12));
    }
  }

  SUBCASE("matches boost across a grid") {
    for (int dof : {1, 2, 3, 5, 9, 19}) {
      const boost::math::chi_squared dist(dof);
      for (double x = 0.25; x < 40.0; x += 0.75) {
        const double expect = boost::math::cdf(boost::math::complement(dist, x));
        CHECK(chi_square_sf(x, dof) == doctest::Approx(expect).epsilon(1e-10));
      }
    }
  }
}

TEST_CASE("kruskal-wallis") {
  SUBCASE("textbook value") {
    const KruskalWallisResult r =
        kruskal_wallis({{1.0, 2.0, 3.0}, {4.0, 5.0, 6.0}, {7.0, 8.0, 9.0}});
    CHECK(r.h == doctest::Approx(7.2).epsilon(1e-12));
    CHECK(r.dof == 2);
    // Independent oracle: survival of chi-square(2) at 7.2 is exp(-3.6).
    CHECK(r.p_value == doctest::Approx(std::exp(-3.6)).epsilon(1e-9));
  }

  SUBCASE("two identical groups") {
    const KruskalWallisResult r = kruskal_wallis({{1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}});
    CHECK(r.h == doctest::Approx(0.0));
  }

  SUBCASE("all values identical") {
    const KruskalWallisResult r = kruskal_wallis({{2.0, 2.0}, {2.0, 2.0, 2.0}});
    CHECK(r.h == 0.0);
    CHECK(r.p_value == 1.0);
  }

  SUBCASE("ties use the correction") {
    const KruskalWallisResult r = kruskal_wallis({{1.0, 1.0, 2.0}, {2.0, 3.0, 3.0}});
    CHECK(r.h > 0.0);
    CHECK(r.p_value > 0.0);
    CHECK(r.p_value < 1.0);
  }

  SUBCASE("rejects degenerate input") {
    CHECK_THROWS_AS(kruskal_wallis({{1.0}}), std::invalid_argument);
    CHECK_THROWS_AS(kruskal_wallis({{1.0}, {}}), std::invalid_argument);
  }
}

TEST_CASE("number formatting") {
  SUBCASE("full round trip") {
    for (double x : {0.1, 1.0 / 3.0, 123456.789, 1e-17, 3.141592653589793}) {
      CHECK(std::stod(fmt_full(x)) == x);
      CHECK(std::stod(fmt_full(-x)) == -x);
    }
  }
  SUBCASE("nine significant digits") {
    CHECK(fmt_sig9(1.0 / 3.0) == "0.333333333");
    CHECK(fmt_sig9(123456789.123) == "123456789");
  }
}

TEST_CASE("xml well-formedness checker") {
  CHECK(xml_well_formed("<svg><g><rect/></g></svg>"));
  CHECK(xml_well_formed("<a attr=\"x\"><b>text</b></a>"));
  CHECK_FALSE(xml_well_formed("<a><b></a></b>"));
  CHECK_FALSE(xml_well_formed("<a>"));
  CHECK_FALSE(xml_well_formed("plain text"));
}
