#include "posemo/poseimage.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "posemo/error.hpp"
#include "posemo/neural.hpp"

namespace posemo {

const std::array<std::size_t, kNumJoints>& chain_order() {
  using namespace joint;
  static const std::array<std::size_t, kNumJoints> order{kNose, kLShoulder, kLElbow, kLWrist, kRShoulder, kRElbow,
                                                         kRWrist, kNeck, kLHip, kLKnee, kLAnkle, kRHip,
                                                         kRKnee, kRAnkle, kLEye, kREye, kLEar, kREar};
  return order;
}

PoseImage pose_matrix(std::span<const Pose> frames) {
  if (frames.empty()) throw Error(ErrorCode::EmptyWindow, "pose image needs at least one frame");
  PoseImage img{frames.size(), kNumJoints, {}};
  img.values.resize(kPoseImageChannels * img.height * img.width);
  const auto& order = chain_order();
  for (std::size_t t = 0; t < frames.size(); ++t) {
    for (std::size_t k = 0; k < kNumJoints; ++k) {
      const auto& j = frames[t].joints[order[k]];
      img.values[(0 * img.height + t) * img.width + k] = j.x;
      img.values[(1 * img.height + t) * img.width + k] = j.y;
    }
  }
  return img;
}

void minmax_to_byte_range(PoseImage& image) {
  const auto plane = image.height * image.width;
  for (std::size_t c = 0; c < kPoseImageChannels; ++c) {
    auto first = image.values.begin() + static_cast<std::ptrdiff_t>(c * plane);
    auto last = first + static_cast<std::ptrdiff_t>(plane);
    const auto [lo, hi] = std::minmax_element(first, last);
    const double a = *lo, b = *hi;
    if (b - a <= 0.0) {
      std::fill(first, last, 127.5);
      continue;
    }
    for (auto it = first; it != last; ++it) *it = std::clamp(255.0 * (*it - a) / (b - a), 0.0, 255.0);
  }
}

PoseImage resize_bilinear(const PoseImage& image, std::size_t height, std::size_t width) {
  if (height == 0 || width == 0) throw Error(ErrorCode::InvalidArgument, "resize target must be nonempty");
  PoseImage out{height, width, std::vector<double>(kPoseImageChannels * height * width)};
  const auto sh = image.height, sw = image.width;
  auto sample = [](std::size_t dst, std::size_t n_dst, std::size_t n_src, std::size_t& i0, std::size_t& i1, double& f) {
    double s = (static_cast<double>(dst) + 0.5) * static_cast<double>(n_src) / static_cast<double>(n_dst) - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(n_src - 1));
    i0 = static_cast<std::size_t>(std::floor(s));
    i1 = std::min(i0 + 1, n_src - 1);
    f = s - static_cast<double>(i0);
  };
  for (std::size_t y = 0; y < height; ++y) {
    std::size_t y0, y1;
    double fy;
    sample(y, height, sh, y0, y1, fy);
    for (std::size_t x = 0; x < width; ++x) {
      std::size_t x0, x1;
      double fx;
      sample(x, width, sw, x0, x1, fx);
      for (std::size_t c = 0; c < kPoseImageChannels; ++c) {
        const double top = (1.0 - fx) * image.at(c, y0, x0) + fx * image.at(c, y0, x1);
        const double bot = (1.0 - fx) * image.at(c, y1, x0) + fx * image.at(c, y1, x1);
        out.values[(c * height + y) * width + x] = (1.0 - fy) * top + fy * bot;
      }
    }
  }
  return out;
}

PoseImage encode_pose_image(std::span<const Pose> frames, std::size_t height, std::size_t width) {
  auto m = pose_matrix(frames);
  minmax_to_byte_range(m);
  if (m.height == height && m.width == width) return m;
  return resize_bilinear(m, height, width);
}

std::vector<double> image_tensor(const PoseImage& image) {
  std::vector<double> v(image.values.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = image.values[i] / 127.5 - 1.0;
  return v;
}

std::vector<double> embed(const PoseImage& image, const ConvEncoder& encoder) {
  const auto& s = encoder.shape();
  if (image.height != s.height || image.width != s.width || s.in_channels != kPoseImageChannels) {
    throw Error(ErrorCode::ShapeMismatch, "pose image " + std::to_string(image.height) + "x" +
                                              std::to_string(image.width) + " does not match the encoder input " +
                                              std::to_string(s.height) + "x" + std::to_string(s.width));
  }
  auto f = encoder.features(image_tensor(image));
  double n = 0.0;
  for (double v : f) n += v * v;
  n = std::sqrt(n);
  if (n > 0.0) {
    for (double& v : f) v /= n;
  }
  return f;
}

void write_pgm(const PoseImage& image, std::size_t channel, const std::filesystem::path& path) {
  if (channel >= kPoseImageChannels) throw Error(ErrorCode::InvalidArgument, "no such image channel");
  std::string bytes = "P5\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  for (std::size_t y = 0; y < image.height; ++y) {
    for (std::size_t x = 0; x < image.width; ++x) {
      const double v = std::clamp(std::round(image.at(channel, y, x)), 0.0, 255.0);
      bytes.push_back(static_cast<char>(static_cast<unsigned char>(v)));
    }
  }
  std::ofstream out(path, std::ios::binary);
  if (!out || !out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()))) {
    throw Error(ErrorCode::IoError, "cannot write " + path.string());
  }
}

}  // namespace posemo
