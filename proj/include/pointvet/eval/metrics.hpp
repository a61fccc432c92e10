#pragma once

#include "pointvet/core/types.hpp"

namespace pvet::eval {

// Rec. 601 luma; identity for single-channel inputs.
ImageBuffer luminance(const ImageBuffer& img);

// 10*log10(1/MSE) for dynamic range 1, capped at the 99 dB sentinel.
double psnr(const ImageBuffer& a, const ImageBuffer& b);
double psnr_from_mse(double mse);

// Per-pixel structural similarity of the luminance channels, 11x11 Gaussian
// window with sigma 1.5, C1=0.01^2, C2=0.03^2. Window weights are
// renormalized where the window is cut off by the image border.
ImageBuffer ssim_map(const ImageBuffer& a, const ImageBuffer& b);

// Mean of ssim_map.
double ssim(const ImageBuffer& a, const ImageBuffer& b);

}  // namespace pvet::eval
