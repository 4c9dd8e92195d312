#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "posemo/core.hpp"

namespace posemo {

class ConvEncoder;

// Column order of the pose image: nose, left arm, right arm, neck, left leg,
// right leg, eyes, ears.
const std::array<std::size_t, kNumJoints>& chain_order();

inline constexpr std::size_t kPoseImageChannels = 2;

struct PoseImage {
  std::size_t height = 0;
  std::size_t width = 0;
  // channel-major: values[(c * height + y) * width + x], c = 0 for x, 1 for y.
  std::vector<double> values;

  double at(std::size_t c, std::size_t y, std::size_t x) const { return values[(c * height + y) * width + x]; }
};

// Raw (frames x 18) coordinate matrix per channel, columns in chain order.
PoseImage pose_matrix(std::span<const Pose> frames);

// Per-channel affine map of the whole image onto [0, 255]; constant channels
// become 127.5.
void minmax_to_byte_range(PoseImage& image);

// Bilinear resampling with half-pixel centers and edge clamping.
PoseImage resize_bilinear(const PoseImage& image, std::size_t height, std::size_t width);

// Throws EmptyWindow for zero frames.
PoseImage encode_pose_image(std::span<const Pose> frames, std::size_t height, std::size_t width);

// Network input: values mapped from [0, 255] to [-1, 1].
std::vector<double> image_tensor(const PoseImage& image);

// L2-normalized penultimate activation. Throws ShapeMismatch when the image
// size differs from the encoder's input.
std::vector<double> embed(const PoseImage& image, const ConvEncoder& encoder);

// 8-bit binary PGM of one channel.
void write_pgm(const PoseImage& image, std::size_t channel, const std::filesystem::path& path);

}  // namespace posemo
