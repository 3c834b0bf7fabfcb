#include <doctest.h>

#include "support.hpp"
#include "wgeo/errors.hpp"
#include "wgeo/linalg.hpp"
#include "wgeo/parallel.hpp"

using namespace wgeo;

TEST_SUITE("linalg") {
  TEST_CASE("matmul against hand values") {
    const Matrix a{{1, 2}, {3, 4}};
    const Matrix b{{5, 6}, {7, 8}};
    CHECK(matmul(a, b) == Matrix{{19, 22}, {43, 50}});
    CHECK(a.transposed() == Matrix{{1, 3}, {2, 4}});
    CHECK(trace(a) == 5.0);
  }

  TEST_CASE("sample covariance uses n - 1") {
    const Matrix x{{0, 0}, {2, 0}, {0, 2}, {2, 2}};
    const Matrix c = sample_covariance(x);
    CHECK(c(0, 0) == doctest::Approx(4.0 / 3.0));
    CHECK(c(0, 1) == doctest::Approx(0.0));
    const auto m = column_means(x);
    CHECK(m[0] == 1.0);
    CHECK(m[1] == 1.0);
  }

  TEST_CASE("hcat and slices") {
    const Matrix a{{1}, {2}};
    const Matrix b{{3, 4}, {5, 6}};
    CHECK(hcat(a, b) == Matrix{{1, 3, 4}, {2, 5, 6}});
    CHECK(b.slice_rows(1, 2) == Matrix{{5, 6}});
  }

  TEST_CASE("map_chunks returns partials in chunk order for any worker count") {
    for (std::size_t workers : {1u, 2u, 5u}) {
      const auto parts = map_chunks(1000, ExecutionPolicy{workers, 64},
                                    [](std::size_t b, std::size_t e) { return b * 10000 + e; });
      REQUIRE(parts.size() == 16);
      for (std::size_t i = 0; i < parts.size(); ++i)
        CHECK(parts[i] == i * 64 * 10000 + std::min<std::size_t>((i + 1) * 64, 1000));
    }
  }
}
