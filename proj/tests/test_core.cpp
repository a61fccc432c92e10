#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "pointvet/core/camera.hpp"
#include "pointvet/core/dataset.hpp"
#include "pointvet/core/opacity.hpp"
#include "pointvet/core/rng.hpp"
#include "pointvet/core/types.hpp"
#include "pointvet/core/vec.hpp"

using namespace pvet;

TEST_CASE("vec3 algebra") {
  Vec3 a{1, 2, 3}, b{4, 5, 6};
  CHECK((a + b) == Vec3{5, 7, 9});
  CHECK((b - a) == Vec3{3, 3, 3});
  CHECK((a * 2.0) == Vec3{2, 4, 6});
  CHECK(a.dot(b) == 32.0);
  CHECK(a.cross(b) == Vec3{-3, 6, -3});
  CHECK(Vec3{3, 4, 0}.norm() == 5.0);
  CHECK(Vec3{0, 0, 2}.normalized() == Vec3{0, 0, 1});
  CHECK(Vec3{-1, 0.5, 2}.clamped(0, 1) == Vec3{0, 0.5, 1});
  CHECK(a.cwise_min(b) == a);
  CHECK(a.cwise_max(b) == b);
}

TEST_CASE("mat3 products and transpose") {
  Mat3 id = Mat3::identity();
  Vec3 v{1, 2, 3};
  CHECK((id * v) == v);

  // 90 degree rotation about z.
  Mat3 rz = Mat3::from_rows({0, -1, 0}, {1, 0, 0}, {0, 0, 1});
  CHECK((rz * Vec3{1, 0, 0}) == Vec3{0, 1, 0});
  CHECK(rz.orthonormality_error() < 1e-15);
  Mat3 back = rz.transposed() * rz;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(back(i, j) == doctest::Approx(i == j ? 1.0 : 0.0));
}

TEST_CASE("box3 containment and dilation") {
  Box3 box{{0, 0, 0}, {1, 2, 3}};
  CHECK(box.contains({0.5, 1.0, 2.9}));
  CHECK(box.contains({0, 0, 0}));
  CHECK(!box.contains({1.01, 0, 0}));
  CHECK(box.center() == Vec3{0.5, 1.0, 1.5});
  CHECK(box.extent() == Vec3{1, 2, 3});
  CHECK(box.dilated(1.0).contains({-0.5, -0.5, 3.5}));
  Box3 e = Box3::empty();
  e.extend({2, 2, 2});
  e.extend({-1, 0, 3});
  CHECK(e.min == Vec3{-1, 0, 2});
  CHECK(e.max == Vec3{2, 2, 3});
}

TEST_CASE("pinhole projection") {
  Camera cam;
  cam.fx = cam.fy = 100.0;
  cam.cx = cam.cy = 50.0;
  cam.width = 200;
  cam.height = 100;

  SUBCASE("point on the principal axis") {
    auto p = project(cam, {0, 0, 2});
    REQUIRE(p.has_value());
    CHECK(p->u == 50.0);
    CHECK(p->v == 50.0);
    CHECK(p->depth == 2.0);
  }
  SUBCASE("off-axis point") {
    auto p = project(cam, {1, 0, 2});
    REQUIRE(p.has_value());
    CHECK(p->u == 100.0);
    CHECK(p->v == 50.0);
    CHECK(p->depth == 2.0);
  }
  SUBCASE("behind the camera") { CHECK(!project(cam, {0, 0, -1}).has_value()); }
  SUBCASE("at the camera plane") { CHECK(!project(cam, {0.3, 0.1, 0.0}).has_value()); }
  SUBCASE("outside the image") {
    CHECK(!project(cam, {4, 0, 2}).has_value());
    CHECK(!project(cam, {0, 2, 2}).has_value());  // v = 150 >= height
  }
}

TEST_CASE("look_at builds a valid camera aimed at the target") {
  Camera cam = look_at({3, -2, 1.5}, {0, 0, 0}, {0, 0, 1}, 80, 80, 32, 32, 64, 64);
  CHECK(cam.valid());
  auto p = project(cam, {0, 0, 0});
  REQUIRE(p.has_value());
  CHECK(p->u == doctest::Approx(32.0).epsilon(1e-9));
  CHECK(p->v == doctest::Approx(32.0).epsilon(1e-9));
  CHECK(p->depth == doctest::Approx(Vec3{3, -2, 1.5}.norm()));
  CHECK((cam.position() - Vec3{3, -2, 1.5}).norm() < 1e-12);
}

TEST_CASE("sigmoid opacity mapping") {
  CHECK(alpha_of(0.0, 1.0) == 0.5);
  CHECK(alpha_of(0.0, 123.0) == 0.5);
  CHECK(alpha_of(1.0, 1.0) == doctest::Approx(0.7310585786300049).epsilon(1e-12));
  CHECK(alpha_of(1.0, 10.0) == doctest::Approx(0.9999546021312976).epsilon(1e-12));
  // stable_sigmoid must not overflow for extreme raws.
  CHECK(alpha_of(-5000.0, 10.0) == 0.0);
  CHECK(alpha_of(5000.0, 10.0) == 1.0);
  CHECK(std::isfinite(alpha_of(-710.0, 1.0)));
  CHECK(alpha_of(logit(0.3), 1.0) == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("mt19937_64 matches the standard's reference value") {
  // 10000th output of a default-seeded engine, fixed by the C++ standard.
  std::mt19937_64 rng;
  for (int i = 0; i < 9999; ++i) rng();
  CHECK(rng() == 9981545732273789042ull);
}

TEST_CASE("uniform01 stays in [0,1) and is seed-deterministic") {
  std::mt19937_64 a(42), b(42);
  double sum = 0.0;
  for (int i = 0; i < 20000; ++i) {
    const double u = uniform01(a);
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(u == uniform01(b));
    sum += u;
  }
  CHECK(sum / 20000.0 == doctest::Approx(0.5).epsilon(0.02));
  CHECK(uniform_in(a, -3.0, -1.0) >= -3.0);
  CHECK(uniform_in(a, -3.0, -1.0) < -1.0);
}

TEST_CASE("substream seeds do not collide over a large index range") {
  std::set<uint64_t> seen;
  for (uint64_t i = 0; i < 100000; ++i) seen.insert(substream_seed(7, i));
  CHECK(seen.size() == 100000);
  CHECK(substream_seed(7, 3) != substream_seed(8, 3));
}

TEST_CASE("every-kth split holds out ceil(n/k) views") {
  std::vector<int> train, eval;

  split_every_kth(100, 20, train, eval);
  CHECK(eval == std::vector<int>{0, 20, 40, 60, 80});
  CHECK(train.size() == 95);

  split_every_kth(101, 20, train, eval);
  CHECK(eval.size() == 6);  // ceil(101/20)
  CHECK(train.size() == 95);

  split_every_kth(16, 8, train, eval);
  CHECK(eval == std::vector<int>{0, 8});

  SUBCASE("k = 0 disables the hold-out") {
    split_every_kth(10, 0, train, eval);
    CHECK(eval.empty());
    CHECK(train.size() == 10);
  }
  SUBCASE("counts always partition") {
    for (int n : {1, 7, 64, 333})
      for (int k : {1, 2, 5, 19}) {
        split_every_kth(n, k, train, eval);
        CHECK(int(train.size() + eval.size()) == n);
        CHECK(int(eval.size()) == (n + k - 1) / k);
      }
  }
}

TEST_CASE("make_dataset rejects mismatched counts") {
  std::vector<Camera> cams(3);
  std::vector<ImageBuffer> imgs;
  imgs.emplace_back(4, 4, 3);
  CHECK_THROWS_AS(make_dataset(cams, std::move(imgs), 2), std::invalid_argument);
}

TEST_CASE("image buffer addressing is row-major interleaved") {
  ImageBuffer img(3, 2, 2);  // w=3 h=2 c=2
  img.at(1, 2, 1) = 7.0;
  CHECK(img.data[(size_t(1) * 3 + 2) * 2 + 1] == 7.0);
  CHECK(img.sample_count() == 12);
  CHECK(img.same_shape(ImageBuffer(3, 2, 2)));
  CHECK(!img.same_shape(ImageBuffer(2, 3, 2)));
}

TEST_CASE("error volume indexing is x-fastest") {
  ErrorVolume vol({1, 2, 3}, 0.5, {4, 3, 2});
  CHECK(vol.voxel_count() == 24);
  CHECK(vol.index(1, 0, 0) == 1);
  CHECK(vol.index(0, 1, 0) == 4);
  CHECK(vol.index(0, 0, 1) == 12);
  CHECK(vol.voxel_min(0, 0, 0) == Vec3{1, 2, 3});
  CHECK(vol.voxel_center(0, 0, 0) == Vec3{1.25, 2.25, 3.25});
  CHECK(vol.world_box().max == Vec3{3.0, 3.5, 4.0});
}
