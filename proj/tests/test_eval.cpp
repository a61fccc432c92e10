#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "pointvet/core/rng.hpp"
#include "pointvet/eval/fscore.hpp"
#include "pointvet/eval/metrics.hpp"
#include "pointvet/eval/synth.hpp"

using namespace pvet;
using namespace pvet::eval;

namespace {

ImageBuffer constant_image(int w, int h, int c, double v) { return ImageBuffer(w, h, c, v); }

PointCloud cloud_of(std::vector<Vec3> positions) {
  std::vector<Point> pts;
  for (const Vec3& p : positions) pts.push_back(Point{p, {0.5, 0.5, 0.5}, 0.0, false});
  return PointCloud(std::move(pts));
}

FScoreReport brute_force(const PointCloud& rec, const PointCloud& truth, double tau) {
  auto frac_within = [tau](const PointCloud& from, const PointCloud& to) {
    size_t hits = 0;
    for (const Point& p : from.points) {
      double best = 1e300;
      for (const Point& q : to.points) {
        const Vec3 d = p.position - q.position;
        best = std::min(best, d.dot(d));
      }
      hits += best <= tau * tau ? 1 : 0;
    }
    return double(hits) / double(from.size());
  };
  FScoreReport r;
  r.tau = tau;
  r.precision = frac_within(rec, truth);
  r.recall = frac_within(truth, rec);
  r.f_score = r.precision + r.recall > 0.0
                  ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
                  : 0.0;
  return r;
}

}  // namespace

TEST_CASE("psnr") {
  SUBCASE("identical images saturate at the cap") {
    const ImageBuffer a = constant_image(16, 16, 3, 0.37);
    CHECK(psnr(a, a) == 99.0);
    CHECK(psnr_from_mse(0.0) == 99.0);
    CHECK(psnr_from_mse(-1.0) == 99.0);
  }
  SUBCASE("uniform 0.1 offset") {
    const ImageBuffer a = constant_image(12, 9, 3, 0.4);
    const ImageBuffer b = constant_image(12, 9, 3, 0.5);
    CHECK(psnr(a, b) == doctest::Approx(20.0).epsilon(1e-12));
  }
  SUBCASE("checkerboard against black") {
    ImageBuffer a(8, 8, 1);
    for (int r = 0; r < 8; ++r)
      for (int c = 0; c < 8; ++c) a.at(r, c, 0) = (r + c) % 2;
    const ImageBuffer b(8, 8, 1, 0.0);
    CHECK(psnr(a, b) == doctest::Approx(3.010299956639812).epsilon(1e-12));
  }
  SUBCASE("shape mismatch throws") {
    CHECK_THROWS_AS(psnr(constant_image(4, 4, 3, 0), constant_image(4, 5, 3, 0)),
                    std::invalid_argument);
  }
}

TEST_CASE("luminance uses Rec.601 weights") {
  ImageBuffer img(3, 1, 3);
  img.at(0, 0, 0) = 1.0;
  img.at(0, 1, 1) = 1.0;
  img.at(0, 2, 2) = 1.0;
  const ImageBuffer y = luminance(img);
  CHECK(y.channels == 1);
  CHECK(y.at(0, 0, 0) == doctest::Approx(0.299).epsilon(1e-15));
  CHECK(y.at(0, 1, 0) == doctest::Approx(0.587).epsilon(1e-15));
  CHECK(y.at(0, 2, 0) == doctest::Approx(0.114).epsilon(1e-15));

  const ImageBuffer gray = constant_image(2, 2, 1, 0.25);
  CHECK(luminance(gray).at(0, 0, 0) == 0.25);
  CHECK_THROWS_AS(luminance(constant_image(2, 2, 2, 0.0)), std::invalid_argument);
}

TEST_CASE("ssim") {
  SUBCASE("identical images score 1") {
    std::mt19937_64 rng(3);
    ImageBuffer a(20, 14, 3);
    for (double& v : a.data) v = uniform01(rng);
    CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("constant 0.5 vs 0.6 matches the closed form") {
    const ImageBuffer a = constant_image(24, 24, 1, 0.5);
    const ImageBuffer b = constant_image(24, 24, 1, 0.6);
    // zero variance everywhere: ((2*0.3 + 1e-4) * 9e-4) / ((0.25 + 0.36 + 1e-4) * 9e-4)
    const double expect = 0.6001 / 0.6101;
    CHECK(ssim(a, b) == doctest::Approx(expect).epsilon(1e-12));
    const ImageBuffer map = ssim_map(a, b);
    for (double v : map.data) CHECK(v == doctest::Approx(expect).epsilon(1e-12));
  }
  SUBCASE("structural inversion scores below 1") {
    ImageBuffer a(16, 16, 1);
    for (int r = 0; r < 16; ++r)
      for (int c = 0; c < 16; ++c) a.at(r, c, 0) = (r * 16 + c) / 255.0;
    ImageBuffer b = a;
    for (double& v : b.data) v = 1.0 - v;
    CHECK(ssim(a, b) < 0.5);
    CHECK(ssim(a, b) >= -1.0);
  }
}

TEST_CASE("f-score") {
  SUBCASE("identical clouds") {
    const PointCloud c = cloud_of({{0, 0, 0}, {1, 0, 0}, {0, 2, 0}});
    const auto r = f_score(c, c, 0.1);
    CHECK(r.precision == 1.0);
    CHECK(r.recall == 1.0);
    CHECK(r.f_score == 1.0);
    CHECK(r.tau == 0.1);
  }
  SUBCASE("far apart clouds score zero") {
    const auto r = f_score(cloud_of({{0, 0, 0}}), cloud_of({{10, 0, 0}}), 1.0);
    CHECK(r.precision == 0.0);
    CHECK(r.recall == 0.0);
    CHECK(r.f_score == 0.0);
  }
  SUBCASE("one of two truth points recovered") {
    const auto r = f_score(cloud_of({{0, 0, 0}}), cloud_of({{0, 0, 0}, {5, 0, 0}}), 0.5);
    CHECK(r.precision == 1.0);
    CHECK(r.recall == 0.5);
    CHECK(r.f_score == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  }
  SUBCASE("distance exactly tau counts") {
    const auto r = f_score(cloud_of({{0, 0, 0}}), cloud_of({{0.25, 0, 0}}), 0.25);
    CHECK(r.precision == 1.0);
    CHECK(r.recall == 1.0);
  }
  SUBCASE("grid acceleration matches brute force") {
    std::mt19937_64 rng(9);
    std::vector<Vec3> a, b;
    for (int i = 0; i < 300; ++i)
      a.push_back({uniform_in(rng, -2, 2), uniform_in(rng, -2, 2), uniform_in(rng, -2, 2)});
    for (int i = 0; i < 250; ++i)
      b.push_back({uniform_in(rng, -2, 2), uniform_in(rng, -2, 2), uniform_in(rng, -2, 2)});
    const PointCloud ca = cloud_of(a), cb = cloud_of(b);
    for (double tau : {0.05, 0.2, 0.7, 5.0}) {
      const auto fast = f_score(ca, cb, tau);
      const auto slow = brute_force(ca, cb, tau);
      CHECK(fast.precision == slow.precision);
      CHECK(fast.recall == slow.recall);
      CHECK(fast.f_score == doctest::Approx(slow.f_score).epsilon(1e-15));
    }
  }
  SUBCASE("invalid inputs throw") {
    const PointCloud c = cloud_of({{0, 0, 0}});
    CHECK_THROWS_AS(f_score(PointCloud{}, c, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(f_score(c, PointCloud{}, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(f_score(c, c, 0.0), std::invalid_argument);
  }
}

TEST_CASE("synthetic scenes") {
  SynthSpec spec;
  spec.image_count = 8;
  spec.width = 48;
  spec.height = 48;
  spec.spacing = 0.05;
  spec.seed = 21;

  SUBCASE("clean spec leaves the degraded cloud identical to ground truth") {
    const auto scene = synth_scene(spec);
    REQUIRE(scene.degraded.size() == scene.ground_truth.size());
    for (size_t i = 0; i < scene.degraded.size(); ++i) {
      CHECK(scene.degraded.points[i].position == scene.ground_truth.points[i].position);
      CHECK(scene.degraded.points[i].color == scene.ground_truth.points[i].color);
    }
    CHECK(scene.outlier_positions.empty());
    CHECK(scene.spacing == spec.spacing);
  }
  SUBCASE("shared camera and image layout") {
    const auto scene = synth_scene(spec);
    REQUIRE(scene.cameras.size() == 8);
    REQUIRE(scene.images.size() == 8);
    for (const Camera& cam : scene.cameras) {
      CHECK(cam.width == 48);
      CHECK(cam.height == 48);
      CHECK(cam.position().norm() == doctest::Approx(spec.camera_distance).epsilon(1e-9));
      CHECK(cam.valid());
    }
    for (const ImageBuffer& img : scene.images) {
      CHECK(img.width == 48);
      CHECK(img.height == 48);
      CHECK(img.channels == 3);
      for (double v : img.data) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
      }
    }
    for (const Point& p : scene.ground_truth.points) CHECK(p.alpha_raw == 1.0);
  }
  SUBCASE("same seed reproduces everything bitwise") {
    SynthSpec s2 = spec;
    s2.outlier_count = 50;
    s2.ablations.push_back(Box3{{-1.1, -1.1, 0.8}, {1.1, 1.1, 1.1}});
    const auto a = synth_scene(s2);
    const auto b = synth_scene(s2);
    REQUIRE(a.degraded.size() == b.degraded.size());
    for (size_t i = 0; i < a.degraded.size(); ++i)
      CHECK(a.degraded.points[i].position == b.degraded.points[i].position);
    REQUIRE(a.images.size() == b.images.size());
    for (size_t i = 0; i < a.images.size(); ++i)
      CHECK(a.images[i].data == b.images[i].data);
    const auto c = synth_scene(s2, 4);
    for (size_t i = 0; i < a.images.size(); ++i)
      CHECK(a.images[i].data == c.images[i].data);
  }
  SUBCASE("cap ablation removes close to the cap's area fraction") {
    SynthSpec s2 = spec;
    s2.ablations.push_back(Box3{{-1.1, -1.1, 0.8}, {1.1, 1.1, 1.1}});
    const auto scene = synth_scene(s2);
    const double removed =
        double(scene.ground_truth.size() - scene.degraded.size()) /
        double(scene.ground_truth.size());
    CHECK(std::abs(removed - 0.1) < 0.02);  // cap z > 0.8 holds 10% of the area
    for (const Point& p : scene.degraded.points) CHECK(!s2.ablations[0].contains(p.position));
  }
  SUBCASE("outliers are appended inside the truth bounds with random colors") {
    SynthSpec s2 = spec;
    s2.outlier_count = 200;
    const auto scene = synth_scene(s2);
    REQUIRE(scene.outlier_positions.size() == 200);
    REQUIRE(scene.degraded.size() == scene.ground_truth.size() + 200);
    Box3 bounds;
    for (const Point& p : scene.ground_truth.points) bounds.extend(p.position);
    for (size_t i = 0; i < 200; ++i) {
      const Point& p = scene.degraded.points[scene.ground_truth.size() + i];
      CHECK(p.position == scene.outlier_positions[i]);
      CHECK(bounds.contains(p.position));
      for (double ch : {p.color.x, p.color.y, p.color.z}) {
        CHECK(ch >= 0.05);
        CHECK(ch <= 0.95);
      }
    }
  }
  SUBCASE("invalid specs throw") {
    SynthSpec bad = spec;
    bad.image_count = 7;
    CHECK_THROWS_AS(synth_scene(bad), std::invalid_argument);
    bad = spec;
    bad.spacing = 0.0;
    CHECK_THROWS_AS(synth_scene(bad), std::invalid_argument);
    bad = spec;
    bad.outlier_count = -1;
    CHECK_THROWS_AS(synth_scene(bad), std::invalid_argument);
  }
}
