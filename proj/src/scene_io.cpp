#include "steerbeam/scene_io.hpp"

#include <fstream>
#include <initializer_list>
#include <set>
#include <string>

namespace steerbeam {
namespace {

using nlohmann::json;

class Fields {
 public:
  Fields(const json& obj, std::string path, std::initializer_list<const char*> allowed)
      : obj_(obj), path_(std::move(path)) {
    if (!obj.is_object()) fail("expected an object");
    const std::set<std::string> known(allowed.begin(), allowed.end());
    for (const auto& [key, _] : obj.items()) {
      if (!known.contains(key)) throw SceneError(child(key) + ": unknown field");
    }
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw SceneError((path_.empty() ? "scene" : path_) + ": " + what);
  }
  std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  bool has(const char* key) const { return obj_.contains(key) && !obj_.at(key).is_null(); }
  const json& raw(const char* key) const { return obj_.at(key); }

  double number(const char* key, double fallback) const {
    if (!has(key)) return fallback;
    const auto& v = obj_.at(key);
    if (!v.is_number()) throw SceneError(child(key) + ": expected a number");
    return v.get<double>();
  }
  std::optional<double> optional_number(const char* key) const {
    if (!has(key)) return std::nullopt;
    return number(key, 0.0);
  }
  std::uint64_t unsigned_integer(const char* key, std::uint64_t fallback) const {
    if (!has(key)) return fallback;
    const auto& v = obj_.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
      throw SceneError(child(key) + ": expected a non-negative integer");
    return v.get<std::uint64_t>();
  }
  bool boolean(const char* key, bool fallback) const {
    if (!has(key)) return fallback;
    const auto& v = obj_.at(key);
    if (!v.is_boolean()) throw SceneError(child(key) + ": expected true or false");
    return v.get<bool>();
  }
  std::string string(const char* key, const std::string& fallback) const {
    if (!has(key)) return fallback;
    const auto& v = obj_.at(key);
    if (!v.is_string()) throw SceneError(child(key) + ": expected a string");
    return v.get<std::string>();
  }
  template <std::size_t N>
  std::array<double, N> vec(const char* key, std::array<double, N> fallback) const {
    if (!has(key)) return fallback;
    const auto& v = obj_.at(key);
    if (!v.is_array() || v.size() != N)
      throw SceneError(child(key) + ": expected an array of " + std::to_string(N) + " numbers");
    std::array<double, N> out{};
    for (std::size_t i = 0; i < N; ++i) {
      if (!v[i].is_number()) throw SceneError(child(key) + "[" + std::to_string(i) + "]: expected a number");
      out[i] = v[i].get<double>();
    }
    return out;
  }

 private:
  const json& obj_;
  std::string path_;
};

SignalSpec parse_signal(const json& doc, const std::string& path,
                        const std::filesystem::path& base_dir) {
  Fields f(doc, path, {"kind", "freq_hz", "path", "level_dbfs"});
  SignalSpec s;
  const auto kind = f.string("kind", "speech_shaped");
  if (kind == "speech_shaped") {
    s.kind = SignalSpec::Kind::SpeechShaped;
  } else if (kind == "speech_like") {
    s.kind = SignalSpec::Kind::SpeechLike;
  } else if (kind == "white_noise") {
    s.kind = SignalSpec::Kind::WhiteNoise;
  } else if (kind == "tone") {
    s.kind = SignalSpec::Kind::Tone;
  } else if (kind == "wav") {
    s.kind = SignalSpec::Kind::Wav;
    if (!f.has("path")) throw SceneError(f.child("path") + ": required for kind 'wav'");
    std::filesystem::path p = f.string("path", "");
    s.path = p.is_relative() ? base_dir / p : p;
  } else {
    throw SceneError(f.child("kind") + ": expected one of speech_shaped, speech_like, white_noise, tone, wav");
  }
  s.freq_hz = f.number("freq_hz", s.freq_hz);
  s.level_dbfs = f.number("level_dbfs", s.level_dbfs);
  if (s.kind == SignalSpec::Kind::Tone && !(s.freq_hz > 0.0))
    throw SceneError(f.child("freq_hz") + ": must be positive");
  return s;
}

SourceSpec parse_source(const json& doc, const std::string& path, std::size_t index,
                        const std::filesystem::path& base_dir) {
  Fields f(doc, path, {"name", "role", "signal", "angle_deg", "distance_m", "position"});
  SourceSpec s;
  s.name = f.string("name", "source" + std::to_string(index));
  const auto role = f.string("role", "");
  if (role.empty()) throw SceneError(f.child("role") + ": required");
  const auto parsed = parse_role(role);
  if (!parsed) throw SceneError(f.child("role") + ": expected one of target, interferer, noise");
  s.role = *parsed;
  if (f.has("signal")) s.signal = parse_signal(f.raw("signal"), f.child("signal"), base_dir);
  s.angle_deg = f.optional_number("angle_deg");
  s.distance_m = f.number("distance_m", s.distance_m);
  if (!(s.distance_m > 0.0)) throw SceneError(f.child("distance_m") + ": must be positive");
  if (f.has("position")) s.position = f.vec<2>("position", {});
  if (s.angle_deg && s.position) throw SceneError(path + ": give either angle_deg or position, not both");
  if (!s.angle_deg && !s.position) throw SceneError(path + ": one of angle_deg or position is required");
  return s;
}

}  // namespace

Scene parse_scene(const json& doc, const std::filesystem::path& base_dir) {
  Fields f(doc, "", {"version", "seed", "sample_rate", "duration_s", "room", "array", "roi",
                     "exclude_mirrored_roi", "sir_db", "snr_db", "level_dbfs", "sources"});
  if (f.has("version") && f.unsigned_integer("version", 1) != 1)
    throw SceneError("version: only version 1 is supported");

  Scene scene;
  scene.seed = f.unsigned_integer("seed", scene.seed);
  scene.sample_rate = static_cast<int>(f.unsigned_integer("sample_rate", scene.sample_rate));
  if (scene.sample_rate != 16000)
    throw SceneError("sample_rate: only 16000 Hz is supported");
  scene.duration_s = f.number("duration_s", scene.duration_s);
  if (!(scene.duration_s > 0.0)) throw SceneError("duration_s: must be positive");

  if (f.has("room")) {
    const auto& room = f.raw("room");
    if (room.is_string()) {
      if (room.get<std::string>() != "anechoic")
        throw SceneError("room: expected \"anechoic\" or an object");
    } else {
      Fields r(room, "room", {"kind", "dims", "t60", "max_order", "rir_length_s", "high_pass_hz"});
      const auto kind = r.string("kind", "shoebox");
      if (kind == "shoebox") {
        ShoeboxRoom box;
        box.dims = r.vec<3>("dims", box.dims);
        box.t60 = r.number("t60", box.t60);
        box.max_order = static_cast<int>(r.number("max_order", box.max_order));
        box.rir_length_s = r.number("rir_length_s", box.rir_length_s);
        box.high_pass_hz = r.number("high_pass_hz", box.high_pass_hz);
        if (box.high_pass_hz < 0.0) throw SceneError("room.high_pass_hz: must be non-negative");
        for (double v : box.dims) {
          if (!(v > 0.0)) throw SceneError("room.dims: must be positive");
        }
        if (box.t60 < 0.0) throw SceneError("room.t60: must be non-negative");
        scene.room = box;
      } else if (kind != "anechoic") {
        throw SceneError("room.kind: expected one of anechoic, shoebox");
      }
    }
  }

  if (f.has("array")) {
    Fields a(f.raw("array"), "array", {"position", "orientation_deg", "mic_spacing", "speed_of_sound"});
    const auto p = a.vec<3>("position", {scene.array.x, scene.array.y, scene.array.z});
    scene.array = {p[0], p[1], p[2], a.number("orientation_deg", 0.0)};
    scene.geometry.mic_spacing = a.number("mic_spacing", scene.geometry.mic_spacing);
    scene.geometry.speed_of_sound = a.number("speed_of_sound", scene.geometry.speed_of_sound);
    if (!(scene.geometry.mic_spacing > 0.0)) throw SceneError("array.mic_spacing: must be positive");
    if (!(scene.geometry.speed_of_sound > 0.0)) throw SceneError("array.speed_of_sound: must be positive");
  }
  if (f.has("roi")) {
    Fields r(f.raw("roi"), "roi", {"theta1_deg", "beta_deg"});
    scene.roi.center_deg = r.number("theta1_deg", scene.roi.center_deg);
    scene.roi.half_width_deg = r.number("beta_deg", scene.roi.half_width_deg);
    try {
      scene.roi.validate();
    } catch (const std::invalid_argument& e) {
      throw SceneError(std::string("roi: ") + e.what());
    }
  }
  scene.exclude_mirrored_roi = f.boolean("exclude_mirrored_roi", scene.exclude_mirrored_roi);
  scene.sir_db = f.optional_number("sir_db");
  scene.snr_db = f.optional_number("snr_db");
  scene.level_dbfs = f.optional_number("level_dbfs");

  if (!f.has("sources")) throw SceneError("sources: required");
  const auto& sources = f.raw("sources");
  if (!sources.is_array()) throw SceneError("sources: expected an array");
  for (std::size_t i = 0; i < sources.size(); ++i)
    scene.sources.push_back(parse_source(sources[i], "sources[" + std::to_string(i) + "]", i, base_dir));

  validate_scene(scene);
  return scene;
}

Scene load_scene(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SceneError("cannot open scene file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    // nlohmann reports "line L, column C" in the message.
    throw SceneError(path.string() + ": " + e.what());
  }
  try {
    return parse_scene(doc, path.parent_path());
  } catch (const SceneError& e) {
    throw SceneError(path.string() + ": " + e.what());
  }
}

nlohmann::json scene_to_json(const Scene& scene) {
  json doc;
  doc["version"] = 1;
  doc["seed"] = scene.seed;
  doc["sample_rate"] = scene.sample_rate;
  doc["duration_s"] = scene.duration_s;
  if (scene.room) {
    doc["room"] = {{"kind", "shoebox"},
                   {"dims", scene.room->dims},
                   {"t60", scene.room->t60},
                   {"max_order", scene.room->max_order},
                   {"rir_length_s", scene.room->rir_length_s},
                   {"high_pass_hz", scene.room->high_pass_hz}};
  } else {
    doc["room"] = {{"kind", "anechoic"}};
  }
  doc["array"] = {{"position", {scene.array.x, scene.array.y, scene.array.z}},
                  {"orientation_deg", scene.array.orientation_deg},
                  {"mic_spacing", scene.geometry.mic_spacing},
                  {"speed_of_sound", scene.geometry.speed_of_sound}};
  doc["roi"] = {{"theta1_deg", scene.roi.center_deg}, {"beta_deg", scene.roi.half_width_deg}};
  doc["exclude_mirrored_roi"] = scene.exclude_mirrored_roi;
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  doc["sir_db"] = opt(scene.sir_db);
  doc["snr_db"] = opt(scene.snr_db);
  doc["level_dbfs"] = opt(scene.level_dbfs);
  doc["sources"] = json::array();
  for (const auto& s : scene.sources) {
    json src{{"name", s.name}, {"role", to_string(s.role)}};
    json sig;
    switch (s.signal.kind) {
      case SignalSpec::Kind::SpeechShaped: sig["kind"] = "speech_shaped"; break;
      case SignalSpec::Kind::SpeechLike: sig["kind"] = "speech_like"; break;
      case SignalSpec::Kind::WhiteNoise: sig["kind"] = "white_noise"; break;
      case SignalSpec::Kind::Tone: sig["kind"] = "tone"; sig["freq_hz"] = s.signal.freq_hz; break;
      case SignalSpec::Kind::Wav: sig["kind"] = "wav"; sig["path"] = s.signal.path.string(); break;
    }
    if (s.signal.kind != SignalSpec::Kind::Wav) sig["level_dbfs"] = s.signal.level_dbfs;
    src["signal"] = sig;
    if (s.position) {
      src["position"] = *s.position;
    } else {
      src["angle_deg"] = s.angle_deg.value_or(90.0);
      src["distance_m"] = s.distance_m;
    }
    doc["sources"].push_back(src);
  }
  return doc;
}

}  // namespace steerbeam
