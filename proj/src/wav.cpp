#include "steerbeam/wav.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>

namespace steerbeam {
namespace {

static_assert(std::endian::native == std::endian::little, "WAV codec assumes a little-endian host");

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::string format_name(std::uint16_t tag, std::uint16_t bits) {
  switch (tag) {
    case kFormatPcm: return "PCM " + std::to_string(bits) + "-bit";
    case kFormatFloat: return "IEEE float " + std::to_string(bits) + "-bit";
    case 2: return "Microsoft ADPCM";
    case 6: return "A-law";
    case 7: return "mu-law";
    case 0x11: return "IMA ADPCM";
    case 0x55: return "MPEG Layer 3";
    default: return "format tag 0x" + [tag] {
      char buf[8];
      std::snprintf(buf, sizeof buf, "%04X", tag);
      return std::string(buf);
    }();
  }
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t remaining() const { return bytes_.size() - pos_; }
  std::size_t position() const { return pos_; }

  template <typename T>
  T read(const char* what) {
    if (remaining() < sizeof(T)) throw WavError(std::string("truncated WAV: missing ") + what);
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string tag(const char* what) {
    if (remaining() < 4) throw WavError(std::string("truncated WAV: missing ") + what);
    std::string t(reinterpret_cast<const char*>(bytes_.data() + pos_), 4);
    pos_ += 4;
    return t;
  }
  std::span<const std::uint8_t> take(std::size_t n) {
    n = std::min(n, remaining());
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  void skip(std::size_t n) { pos_ += std::min(n, remaining()); }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

template <typename T>
void put(std::vector<std::uint8_t>& out, T v) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
  out.insert(out.end(), p, p + sizeof(T));
}

void put_tag(std::vector<std::uint8_t>& out, const char* t) { out.insert(out.end(), t, t + 4); }

}  // namespace

MultichannelAudio decode_wav(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  if (r.tag("RIFF header") != "RIFF") throw WavError("not a RIFF file");
  r.read<std::uint32_t>("RIFF size");
  if (r.tag("WAVE tag") != "WAVE") throw WavError("RIFF file is not WAVE");

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  std::span<const std::uint8_t> data;
  bool have_data = false;

  while (r.remaining() > 0 && !(have_fmt && have_data)) {
    const std::string id = r.tag("chunk id");
    const auto size = r.read<std::uint32_t>("chunk size");
    if (id == "fmt ") {
      if (size < 16 || r.remaining() < size) throw WavError("truncated WAV: fmt chunk");
      const std::size_t start = r.position();
      format = r.read<std::uint16_t>("format tag");
      channels = r.read<std::uint16_t>("channel count");
      rate = r.read<std::uint32_t>("sample rate");
      r.read<std::uint32_t>("byte rate");
      r.read<std::uint16_t>("block align");
      bits = r.read<std::uint16_t>("bits per sample");
      if (format == kFormatExtensible) {
        if (size < 40) throw WavError("truncated WAV: extensible fmt chunk");
        r.read<std::uint16_t>("extension size");
        r.read<std::uint16_t>("valid bits");
        r.read<std::uint32_t>("channel mask");
        format = r.read<std::uint16_t>("subformat");
      }
      r.skip(size - (r.position() - start));
      have_fmt = true;
    } else if (id == "data") {
      data = r.take(size);
      have_data = true;
    } else {
      r.skip(size);
    }
    if (size % 2 == 1) r.skip(1);
  }
  if (!have_fmt) throw WavError("truncated WAV: no fmt chunk");
  if (!have_data) throw WavError("truncated WAV: no data chunk");
  if (channels == 0) throw WavError("WAV declares zero channels");
  if (rate == 0) throw WavError("WAV declares zero sample rate");

  const bool pcm16 = format == kFormatPcm && bits == 16;
  const bool float32 = format == kFormatFloat && bits == 32;
  if (!pcm16 && !float32)
    throw WavError("unsupported WAV encoding: " + format_name(format, bits));

  const std::size_t sample_bytes = bits / 8;
  const std::size_t frames = data.size() / (sample_bytes * channels);
  std::vector<std::vector<double>> out(channels, std::vector<double>(frames));
  const std::uint8_t* p = data.data();
  for (std::size_t i = 0; i < frames; ++i) {
    for (std::size_t m = 0; m < channels; ++m) {
      if (pcm16) {
        std::int16_t v;
        std::memcpy(&v, p, 2);
        out[m][i] = static_cast<double>(v) / 32768.0;
      } else {
        float v;
        std::memcpy(&v, p, 4);
        out[m][i] = static_cast<double>(v);
      }
      p += sample_bytes;
    }
  }
  return {std::move(out), static_cast<double>(rate)};
}

MultichannelAudio read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw WavError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  try {
    return decode_wav(bytes);
  } catch (const WavError& e) {
    throw WavError(path.string() + ": " + e.what());
  }
}

std::vector<std::uint8_t> encode_wav(const MultichannelAudio& audio, WavEncoding encoding) {
  const auto channels = static_cast<std::uint16_t>(audio.num_channels());
  if (channels == 0) throw WavError("cannot write WAV with zero channels");
  const auto rate = static_cast<std::uint32_t>(std::lround(audio.sample_rate()));
  const std::uint16_t bits = encoding == WavEncoding::Pcm16 ? 16 : 32;
  const std::uint16_t block = static_cast<std::uint16_t>(channels * bits / 8);
  const auto data_bytes = static_cast<std::uint32_t>(audio.num_samples() * block);

  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  put_tag(out, "RIFF");
  put<std::uint32_t>(out, 36 + data_bytes);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put<std::uint32_t>(out, 16);
  put<std::uint16_t>(out, encoding == WavEncoding::Pcm16 ? kFormatPcm : kFormatFloat);
  put<std::uint16_t>(out, channels);
  put<std::uint32_t>(out, rate);
  put<std::uint32_t>(out, rate * block);
  put<std::uint16_t>(out, block);
  put<std::uint16_t>(out, bits);
  put_tag(out, "data");
  put<std::uint32_t>(out, data_bytes);
  for (std::size_t i = 0; i < audio.num_samples(); ++i) {
    for (std::size_t m = 0; m < channels; ++m) {
      const double v = audio.channel(m)[i];
      if (encoding == WavEncoding::Pcm16) {
        const double scaled = std::round(std::clamp(v, -1.0, 1.0) * 32768.0);
        put<std::int16_t>(out, static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0)));
      } else {
        put<float>(out, static_cast<float>(v));
      }
    }
  }
  return out;
}

void write_wav(const MultichannelAudio& audio, const std::filesystem::path& path,
               WavEncoding encoding) {
  const auto bytes = encode_wav(audio, encoding);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw WavError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw WavError("write failed: " + path.string());
}

}  // namespace steerbeam
