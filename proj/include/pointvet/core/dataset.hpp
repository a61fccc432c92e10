#pragma once

#include <stdexcept>
#include <vector>

#include "pointvet/core/camera.hpp"
#include "pointvet/core/types.hpp"

namespace pvet {

// A loaded multi-view dataset: one camera per image, plus the train/eval
// split (held-out indices are every k-th image, starting at 0).
struct Dataset {
  std::vector<Camera> cameras;
  std::vector<ImageBuffer> images;
  std::vector<int> train_indices;
  std::vector<int> eval_indices;
  int every_kth = 0;

  size_t view_count() const { return cameras.size(); }
};

inline void split_every_kth(int n, int k, std::vector<int>& train, std::vector<int>& eval) {
  train.clear();
  eval.clear();
  for (int i = 0; i < n; ++i) {
    if (k >= 1 && i % k == 0)
      eval.push_back(i);
    else
      train.push_back(i);
  }
}

inline Dataset make_dataset(std::vector<Camera> cameras, std::vector<ImageBuffer> images,
                            int every_kth) {
  if (cameras.size() != images.size())
    throw std::invalid_argument("make_dataset: camera/image count mismatch");
  Dataset ds;
  ds.cameras = std::move(cameras);
  ds.images = std::move(images);
  ds.every_kth = every_kth;
  split_every_kth(int(ds.cameras.size()), every_kth, ds.train_indices, ds.eval_indices);
  return ds;
}

}  // namespace pvet
