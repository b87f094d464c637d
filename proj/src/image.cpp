#include "md/image.hpp"

#include "md/kernels.hpp"

namespace md {

Image resize_image(const Image& image, std::size_t height, std::size_t width) {
  if (image.height == height && image.width == width) return image;
  Image out(height, width);
  kernels::omp::bilinear_resize<float>(image.data, out.data, 3, image.height, image.width, height, width);
  return out;
}

}  // namespace md
