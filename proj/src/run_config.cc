// Copyright (c) 2026 SpoofBench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "spoofbench/run_config.h"

#include <Eigen/Core>
#include <fftw3.h>
#include <fmt/format.h>
#include <fmt/ranges.h>
#include <png.h>

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "spoofbench/error.h"

namespace spoofbench {

namespace {

std::string_view Trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T ParseNumber(std::string_view key, std::string_view text) {
  T v{};
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError(fmt::format("{}: cannot parse '{}'", key, text));
  }
  return v;
}

bool ParseBool(std::string_view key, std::string_view text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw ConfigError(fmt::format("{}: expected true/false, got '{}'", key, text));
}

std::vector<std::string> ParseList(std::string_view text) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in{std::string(text)};
  while (std::getline(in, item, ',')) {
    const auto t = Trim(item);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

std::string JoinList(const std::vector<std::string>& v) {
  return fmt::format("{}", fmt::join(v, ","));
}

struct Field {
  std::string key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, std::string_view)> set;
};

// `ref` is a generic lambda returning a reference to the member, so one
// accessor serves both the const getter and the setter.
template <typename Ref>
Field Bind(std::string key, Ref ref) {
  using T = std::decay_t<decltype(ref(std::declval<RunConfig&>()))>;
  Field f;
  f.key = key;
  f.get = [ref](const RunConfig& c) -> std::string {
    const T& v = ref(c);
    if constexpr (std::is_same_v<T, bool>) {
      return v ? "true" : "false";
    } else if constexpr (std::is_floating_point_v<T>) {
      return fmt::format("{}", v);
    } else if constexpr (std::is_arithmetic_v<T>) {
      return std::to_string(v);
    } else {
      return v;
    }
  };
  f.set = [ref, key](RunConfig& c, std::string_view text) {
    T& v = ref(c);
    if constexpr (std::is_same_v<T, bool>) {
      v = ParseBool(key, text);
    } else if constexpr (std::is_arithmetic_v<T>) {
      v = ParseNumber<T>(key, text);
    } else {
      v = std::string(text);
    }
  };
  return f;
}

#define SB_FIELD(key, member) Bind(key, [](auto& c) -> auto& { return c.member; })

const std::vector<Field>& Fields() {
  static const std::vector<Field> fields = [] {
    std::vector<Field> f = {
        SB_FIELD("run.name", name),
        SB_FIELD("run.seed", seed),
        SB_FIELD("align.target_length", align.target_length),
        SB_FIELD("frontend.name", frontend.name),
        SB_FIELD("frontend.embed_dim", frontend.embed_dim),
        SB_FIELD("frontend.window", frontend.window),
        SB_FIELD("frontend.hop", frontend.hop),
        SB_FIELD("frontend.hidden_layers", frontend.hidden_layers),
        SB_FIELD("frontend.init_seed", frontend_init_seed),
        SB_FIELD("antispoof.reduce_dim", antispoof.reduce_dim),
        SB_FIELD("antispoof.pool", antispoof.pool),
        SB_FIELD("antispoof.stage1_channels", antispoof.stage1_channels),
        SB_FIELD("antispoof.stage1_blocks", antispoof.stage1_blocks),
        SB_FIELD("antispoof.stage2_channels", antispoof.stage2_channels),
        SB_FIELD("antispoof.stage2_blocks", antispoof.stage2_blocks),
        SB_FIELD("antispoof.lr", antispoof.lr),
        SB_FIELD("antispoof.max_epochs", antispoof.max_epochs),
        SB_FIELD("antispoof.batch", antispoof.batch),
        SB_FIELD("spkembed.margin", aam.margin),
        SB_FIELD("spkembed.scale", aam.scale),
        SB_FIELD("spkembed.lr_peak", schedule.peak),
        SB_FIELD("spkembed.warmup_frac", schedule.warmup_frac),
        SB_FIELD("spkembed.constant_frac", schedule.constant_frac),
        SB_FIELD("spkembed.decay_frac", schedule.decay_frac),
        SB_FIELD("spkembed.total_iters", schedule.total_iters),
        SB_FIELD("spkembed.batch", spk.batch),
        SB_FIELD("enhancer.encoder_filters", enhancer.encoder_filters),
        SB_FIELD("enhancer.encoder_kernel", enhancer.encoder_kernel),
        SB_FIELD("enhancer.encoder_stride", enhancer.encoder_stride),
        SB_FIELD("enhancer.bottleneck_channels", enhancer.bottleneck_channels),
        SB_FIELD("enhancer.block_channels", enhancer.block_channels),
        SB_FIELD("enhancer.skip_channels", enhancer.skip_channels),
        SB_FIELD("enhancer.conv_kernel", enhancer.conv_kernel),
        SB_FIELD("enhancer.blocks_per_repeat", enhancer.blocks_per_repeat),
        SB_FIELD("enhancer.repeats", enhancer.repeats),
        SB_FIELD("enhancer.lr", enhancer.lr),
        SB_FIELD("enhancer.epochs", enhancer.epochs),
        SB_FIELD("enhancer.batch", enhancer.batch),
        SB_FIELD("enhancer.identity_init", enhancer.identity_init),
        SB_FIELD("enhancer.in_memory", in_memory),
        SB_FIELD("eval.cdf_bins", cdf_bins),
        SB_FIELD("eval.score_batch", score_batch),
    };
    f.push_back({"run.profile", [](const RunConfig& c) { return std::string(ToString(c.profile)); },
                 [](RunConfig& c, std::string_view v) { c.profile = ParseProfile(v); }});
    f.push_back({"align.train_crop",
                 [](const RunConfig& c) {
                   return std::string(c.train_crop == CropMode::kRandomCrop ? "random_crop"
                                                                            : "fixed_start");
                 },
                 [](RunConfig& c, std::string_view v) {
                   if (v == "random_crop") {
                     c.train_crop = CropMode::kRandomCrop;
                   } else if (v == "fixed_start") {
                     c.train_crop = CropMode::kFixedStart;
                   } else {
                     throw ConfigError("align.train_crop: expected random_crop or fixed_start");
                   }
                 }});
    f.push_back({"split.scenario",
                 [](const RunConfig& c) { return std::string(ToString(c.split.scenario)); },
                 [](RunConfig& c, std::string_view v) { c.split.scenario = ParseScenario(v); }});
    f.push_back({"split.attacker_systems",
                 [](const RunConfig& c) { return JoinList(c.split.attacker_systems); },
                 [](RunConfig& c, std::string_view v) { c.split.attacker_systems = ParseList(v); }});
    f.push_back({"split.defender_systems",
                 [](const RunConfig& c) { return JoinList(c.split.defender_systems); },
                 [](RunConfig& c, std::string_view v) { c.split.defender_systems = ParseList(v); }});
    f.push_back({"enhancer.pairing",
                 [](const RunConfig& c) {
                   return std::string(c.enhancer.pairing == PairingMode::kResample ? "resample"
                                                                                   : "fixed");
                 },
                 [](RunConfig& c, std::string_view v) {
                   if (v == "resample") {
                     c.enhancer.pairing = PairingMode::kResample;
                   } else if (v == "fixed") {
                     c.enhancer.pairing = PairingMode::kFixed;
                   } else {
                     throw ConfigError("enhancer.pairing: expected resample or fixed");
                   }
                 }});
    std::sort(f.begin(), f.end(), [](const Field& a, const Field& b) { return a.key < b.key; });
    return f;
  }();
  return fields;
}

#undef SB_FIELD

const Field& FindField(std::string_view key) {
  for (const auto& f : Fields()) {
    if (f.key == key) return f;
  }
  throw ConfigError(fmt::format("unknown config key '{}'", key));
}

}  // namespace

Profile ParseProfile(std::string_view s) {
  if (s == "toy") return Profile::kToy;
  if (s == "reference") return Profile::kReference;
  throw ConfigError(fmt::format("unknown profile '{}' (expected toy or reference)", s));
}

std::string_view ToString(Profile p) { return p == Profile::kToy ? "toy" : "reference"; }

RunConfig RunConfig::Defaults(Profile profile) {
  RunConfig c;
  c.profile = profile;
  if (profile == Profile::kReference) return c;

  c.align.target_length = 8000;
  c.frontend.embed_dim = 32;
  c.frontend.hidden_layers = 2;

  c.antispoof.reduce_dim = 32;
  c.antispoof.stage1_channels = 8;
  c.antispoof.stage2_channels = 16;
  c.antispoof.lr = 1e-3;
  c.antispoof.max_epochs = 15;
  c.antispoof.batch = 16;

  c.schedule.peak = 2e-3;
  c.schedule.total_iters = 300;
  c.spk.batch = 16;

  c.enhancer.encoder_filters = 128;
  c.enhancer.encoder_kernel = 64;
  c.enhancer.encoder_stride = 32;
  c.enhancer.identity_init = true;
  c.enhancer.bottleneck_channels = 16;
  c.enhancer.block_channels = 32;
  c.enhancer.skip_channels = 16;
  c.enhancer.lr = 1e-3;
  c.enhancer.epochs = 30;
  c.enhancer.batch = 8;
  c.cdf_bins = 200;
  return c;
}

void RunConfig::Set(std::string_view key, std::string_view value) {
  FindField(key).set(*this, Trim(value));
}

std::string RunConfig::Get(std::string_view key) const { return FindField(key).get(*this); }

std::vector<std::string> RunConfig::Keys() {
  std::vector<std::string> out;
  for (const auto& f : Fields()) out.push_back(f.key);
  return out;
}

void RunConfig::ApplyText(std::string_view text, const std::string& source) {
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = line;
    if (auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = Trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(fmt::format("{}:{}: expected 'section.key = value'", source, line_no));
    }
    try {
      Set(Trim(view.substr(0, eq)), view.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(fmt::format("{}:{}: {}", source, line_no, e.what()));
    }
  }
}

void RunConfig::ApplyFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  ApplyText(ss.str(), path.string());
}

std::string RunConfig::ToText() const {
  std::string out;
  for (const auto& f : Fields()) out += f.key + " = " + f.get(*this) + "\n";
  return out;
}

void RunConfig::Finalize() {
  align.seed = seed;
  split.seed = seed;
  antispoof.seed = seed;
  spk.seed = seed;
  enhancer.seed = seed;
  if (align.target_length <= 0) throw ConfigError("align.target_length must be positive");
  if (cdf_bins < 2) throw ConfigError("eval.cdf_bins must be at least 2");
  if (score_batch < 1) throw ConfigError("eval.score_batch must be positive");
  frontend.Validate();
  antispoof.Validate();
  schedule.Validate();
  if (spk.batch < 1) throw ConfigError("spkembed.batch must be positive");
  if (aam.scale <= 0.0 || aam.margin < 0.0) throw ConfigError("spkembed margin/scale out of range");
  enhancer.Validate();
  if (frontend.FramesFor(align.target_length) < 1) {
    throw ConfigError("align.target_length is shorter than the frontend window");
  }
}

void RunDir::Create() const {
  for (const auto& d : {config(), checkpoints(), scores(), enhanced(), report()}) {
    std::error_code ec;
    std::filesystem::create_directories(d, ec);
    if (ec) throw IoError("cannot create " + d.string() + ": " + ec.message());
  }
}

nlohmann::json LibraryVersions() {
  return {{"spoofbench", std::string(kVersion)},
          {"eigen", fmt::format("{}.{}.{}", EIGEN_WORLD_VERSION, EIGEN_MAJOR_VERSION,
                                EIGEN_MINOR_VERSION)},
          {"fftw", std::string(fftw_version)},
          {"fmt", FMT_VERSION},
          {"libpng", PNG_LIBPNG_VER_STRING}};
}

nlohmann::json RunManifest(const RunConfig& config, const std::string& stage,
                           const std::vector<std::string>& argv) {
  return {{"stage", stage},
          {"seed", config.seed},
          {"profile", std::string(ToString(config.profile))},
          {"config", config.ToText()},
          {"versions", LibraryVersions()},
          {"argv", argv}};
}

void WriteRunManifest(const RunDir& dir, const RunConfig& config, const std::string& stage,
                      const std::vector<std::string>& argv) {
  dir.Create();
  {
    std::ofstream out(dir.config() / "config.txt");
    out << config.ToText();
    if (!out) throw IoError("cannot write config snapshot under " + dir.config().string());
  }
  std::ofstream out(dir.config() / ("manifest_" + stage + ".json"));
  out << RunManifest(config, stage, argv).dump(2) << "\n";
  if (!out) throw IoError("cannot write manifest under " + dir.config().string());
}

}  // namespace spoofbench
