#include "pointvet/eval/metrics.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

namespace pvet::eval {

ImageBuffer luminance(const ImageBuffer& img) {
  if (img.channels == 1) return img;
  if (img.channels != 3) throw std::invalid_argument("luminance: expected 1 or 3 channels");
  ImageBuffer out(img.width, img.height, 1);
  for (int r = 0; r < img.height; ++r)
    for (int c = 0; c < img.width; ++c)
      out.at(r, c, 0) =
          0.299 * img.at(r, c, 0) + 0.587 * img.at(r, c, 1) + 0.114 * img.at(r, c, 2);
  return out;
}

double psnr_from_mse(double mse) {
  if (mse <= 0.0) return 99.0;
  return std::min(99.0, 10.0 * std::log10(1.0 / mse));
}

double psnr(const ImageBuffer& a, const ImageBuffer& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("psnr: image shape mismatch");
  double sse = 0.0;
  for (size_t i = 0; i < a.data.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    sse += d * d;
  }
  return psnr_from_mse(sse / double(a.data.size()));
}

namespace {

constexpr int kWindowRadius = 5;  // 11x11
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

const std::array<double, 11>& gaussian_taps() {
  static const std::array<double, 11> taps = [] {
    std::array<double, 11> t{};
    for (int i = 0; i < 11; ++i) {
      const double d = double(i - kWindowRadius);
      t[size_t(i)] = std::exp(-d * d / (2.0 * kSigma * kSigma));
    }
    return t;
  }();
  return taps;
}

}  // namespace

ImageBuffer ssim_map(const ImageBuffer& a, const ImageBuffer& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("ssim: image shape mismatch");
  const ImageBuffer la = luminance(a);
  const ImageBuffer lb = luminance(b);
  const auto& taps = gaussian_taps();

  ImageBuffer out(a.width, a.height, 1);
  for (int r = 0; r < a.height; ++r) {
    for (int c = 0; c < a.width; ++c) {
      double wsum = 0.0, mu_a = 0.0, mu_b = 0.0, aa = 0.0, bb = 0.0, ab = 0.0;
      for (int dr = -kWindowRadius; dr <= kWindowRadius; ++dr) {
        const int rr = r + dr;
        if (rr < 0 || rr >= a.height) continue;
        for (int dc = -kWindowRadius; dc <= kWindowRadius; ++dc) {
          const int cc = c + dc;
          if (cc < 0 || cc >= a.width) continue;
          const double w = taps[size_t(dr + kWindowRadius)] * taps[size_t(dc + kWindowRadius)];
          const double va = la.at(rr, cc, 0);
          const double vb = lb.at(rr, cc, 0);
          wsum += w;
          mu_a += w * va;
          mu_b += w * vb;
          aa += w * va * va;
          bb += w * vb * vb;
          ab += w * va * vb;
        }
      }
      mu_a /= wsum;
      mu_b /= wsum;
      const double var_a = aa / wsum - mu_a * mu_a;
      const double var_b = bb / wsum - mu_b * mu_b;
      const double cov = ab / wsum - mu_a * mu_b;
      out.at(r, c, 0) = ((2.0 * mu_a * mu_b + kC1) * (2.0 * cov + kC2)) /
                        ((mu_a * mu_a + mu_b * mu_b + kC1) * (var_a + var_b + kC2));
    }
  }
  return out;
}

double ssim(const ImageBuffer& a, const ImageBuffer& b) {
  const ImageBuffer map = ssim_map(a, b);
  double sum = 0.0;
  for (double v : map.data) sum += v;
  return sum / double(map.data.size());
}

}  // namespace pvet::eval
