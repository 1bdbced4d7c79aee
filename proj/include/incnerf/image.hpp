// Copyright 2026 the incnerf authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#ifndef INCNERF_IMAGE_HPP_
#define INCNERF_IMAGE_HPP_

#include <cstddef>
#include <vector>

#include "incnerf/vec.hpp"

namespace incnerf {

/// Float RGB image, interleaved, row-major. Values live in [0, 1].
struct Image {
  int width = 0;
  int height = 0;
  std::vector<float> data;  // size = width * height * 3

  Image() = default;
  Image(int w, int h, float fill = 0.0f)
      : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3, fill) {}

  float& at(int x, int y, int c) {
    return data[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
  float at(int x, int y, int c) const {
    return data[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }

  Vec3d rgb(int x, int y) const {
    return {static_cast<double>(at(x, y, 0)), static_cast<double>(at(x, y, 1)),
            static_cast<double>(at(x, y, 2))};
  }

  void set_rgb(int x, int y, const Vec3d& c) {
    at(x, y, 0) = static_cast<float>(c.x);
    at(x, y, 1) = static_cast<float>(c.y);
    at(x, y, 2) = static_cast<float>(c.z);
  }

  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width) * height;
  }

  bool operator==(const Image& o) const {
    return width == o.width && height == o.height && data == o.data;
  }
};

}  // namespace incnerf

#endif  // INCNERF_IMAGE_HPP_
