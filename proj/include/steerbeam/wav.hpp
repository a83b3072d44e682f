#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "steerbeam/audio.hpp"

namespace steerbeam {

enum class WavEncoding { Pcm16, Float32 };

class WavError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// RIFF/WAVE reader for PCM16 and IEEE float32 (plain or WAVE_FORMAT_EXTENSIBLE).
// Any other encoding is rejected with its name in the message.
MultichannelAudio read_wav(const std::filesystem::path& path);
MultichannelAudio decode_wav(std::span<const std::uint8_t> bytes);

void write_wav(const MultichannelAudio& audio, const std::filesystem::path& path,
               WavEncoding encoding = WavEncoding::Float32);
std::vector<std::uint8_t> encode_wav(const MultichannelAudio& audio,
                                     WavEncoding encoding = WavEncoding::Float32);

}  // namespace steerbeam
