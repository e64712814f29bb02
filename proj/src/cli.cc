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

#include "spoofbench/cli.h"

#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <glog/logging.h>

#include "spoofbench/antispoof.h"
#include "spoofbench/checkpoint.h"
#include "spoofbench/data_proto.h"
#include "spoofbench/enhancer.h"
#include "spoofbench/error.h"
#include "spoofbench/eval_metrics.h"
#include "spoofbench/frontend.h"
#include "spoofbench/pipeline.h"
#include "spoofbench/run_config.h"
#include "spoofbench/spk_embed.h"
#include "spoofbench/synth.h"

namespace spoofbench {

namespace {

namespace fs = std::filesystem;

struct CommonOpts {
  std::string config_path;
  std::string profile;
  std::vector<std::string> sets;
  std::string run_dir;
  std::optional<uint64_t> seed;
  std::string name;
};

void AddCommon(CLI::App* app, CommonOpts& o) {
  app->add_option("--config", o.config_path, "config file of 'section.key = value' lines");
  app->add_option("--profile", o.profile, "hyperparameter defaults")
      ->check(CLI::IsMember({"toy", "reference"}));
  app->add_option("--set", o.sets, "override, e.g. --set enhancer.lr=1e-4 (repeatable)");
  app->add_option("--run-dir", o.run_dir, "run directory (default runs/<run.name>)");
  app->add_option("--seed", o.seed, "global seed (overrides config and SPOOFBENCH_SEED)");
  app->add_option("--name", o.name, "run name");
}

std::string ReadText(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Precedence, lowest first: profile defaults, config file, --set,
// SPOOFBENCH_SEED, explicit flags.
RunConfig ResolveConfig(const CommonOpts& o) {
  std::string text;
  Profile profile = Profile::kReference;
  if (!o.config_path.empty()) {
    text = ReadText(o.config_path);
    RunConfig probe;
    probe.ApplyText(text, o.config_path);
    profile = probe.profile;
  }
  if (!o.profile.empty()) profile = ParseProfile(o.profile);
  RunConfig c = RunConfig::Defaults(profile);
  if (!text.empty()) c.ApplyText(text, o.config_path);
  c.profile = profile;
  for (const auto& s : o.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
    c.Set(s.substr(0, eq), s.substr(eq + 1));
  }
  if (const char* env = std::getenv("SPOOFBENCH_SEED"); env && *env) c.Set("run.seed", env);
  if (o.seed) c.seed = *o.seed;
  if (!o.name.empty()) c.name = o.name;
  c.Finalize();
  return c;
}

RunDir ResolveRunDir(const CommonOpts& o, const RunConfig& c) {
  return RunDir{o.run_dir.empty() ? fs::path("runs") / c.name : fs::path(o.run_dir)};
}

std::unique_ptr<Frontend> InitialFrontend(const RunConfig& c, const std::string& checkpoint,
                                          const std::string& external) {
  if (!external.empty()) {
    const auto colon = external.find(':');
    if (colon == std::string::npos) {
      throw ConfigError("--external expects name:checkpoint, got '" + external + "'");
    }
    return LoadExternalFrontend(external.substr(0, colon), external.substr(colon + 1));
  }
  if (!checkpoint.empty()) return LoadFrontend(checkpoint);
  return BuildTinyFrontend(c.frontend, c.frontend_init_seed);
}

void WriteJson(const nlohmann::json& j, const fs::path& path) {
  std::ofstream out(path);
  out << j.dump(2) << "\n";
  if (!out) throw IoError("cannot write " + path.string());
}

struct Context {
  std::vector<std::string> argv;
};

// --- split-data -----------------------------------------------------------

struct SplitOpts {
  CommonOpts common;
  std::string scenario;
  std::string protocol;
  std::string out_dir;
};

int RunSplit(const SplitOpts& o, const Context& ctx) {
  RunConfig c = ResolveConfig(o.common);
  if (!o.scenario.empty()) c.split.scenario = ParseScenario(o.scenario);
  const auto records = ParseProtocol(o.protocol);
  const SplitResult split = MakeSplit(records, c.split);
  const fs::path out(o.out_dir);
  fs::create_directories(out);
  WriteProtocol(split.attacker, out / "attacker.txt");
  WriteProtocol(split.defender, out / "defender.txt");
  nlohmann::json summary = SplitSummary(split);
  summary["scenario"] = std::string(ToString(c.split.scenario));
  summary["seed"] = c.seed;
  WriteJson(summary, out / "split_summary.json");
  WriteJson(RunManifest(c, "split-data", ctx.argv), out / "manifest.json");
  fmt::print("attacker: {} trials, defender: {} trials ({})\n", split.attacker.size(),
             split.defender.size(), ToString(c.split.scenario));
  return kExitOk;
}

// --- train-spkemb ---------------------------------------------------------

struct TrainSpkOpts {
  CommonOpts common;
  std::string audio_dir;
  std::string protocol;
  std::string frontend_ckpt;
  std::string external;
};

int RunTrainSpk(const TrainSpkOpts& o, const Context& ctx) {
  const RunConfig c = ResolveConfig(o.common);
  const RunDir dir = ResolveRunDir(o.common, c);
  WriteRunManifest(dir, c, "train-spkemb", ctx.argv);
  const auto records = ParseProtocol(o.protocol);
  std::vector<std::string> speakers;
  const auto data = BuildSpeakerData(records, DirectoryLoader(o.audio_dir), c.align,
                                     c.train_crop, &speakers);
  AamConfig aam = c.aam;
  aam.num_speakers = static_cast<int64_t>(speakers.size());
  SpeakerExtractor extractor(InitialFrontend(c, o.frontend_ckpt, o.external));
  const TrainReport report = TrainExtractor(extractor, data, c.schedule, aam, c.spk);
  SaveExtractor(extractor, dir.checkpoints() / "spk_extractor.ckpt");
  nlohmann::json j = report.ToJson();
  j["speakers"] = speakers;
  WriteJson(j, dir.report() / "spkemb_train.json");
  fmt::print("speaker extractor: {} utterances, {} speakers, final loss {:.6f}\n", data.size(),
             speakers.size(), report.epoch_loss.empty() ? 0.0 : report.epoch_loss.back());
  return kExitOk;
}

// --- train-enhance --------------------------------------------------------

struct TrainEnhOpts {
  CommonOpts common;
  std::string audio_dir;
  std::string protocol;
  std::string extractor;
};

int RunTrainEnhance(const TrainEnhOpts& o, const Context& ctx) {
  const RunConfig c = ResolveConfig(o.common);
  const RunDir dir = ResolveRunDir(o.common, c);
  WriteRunManifest(dir, c, "train-enhance", ctx.argv);
  const fs::path ext_path =
      o.extractor.empty() ? dir.checkpoints() / "spk_extractor.ckpt" : fs::path(o.extractor);
  auto extractor = LoadExtractor(ext_path);
  extractor->Freeze();
  const auto records = ParseProtocol(o.protocol);
  std::vector<std::string> warnings;
  const auto pairs = BuildEnhancerPairs(records, DirectoryLoader(o.audio_dir), c.align,
                                        c.train_crop, c.seed, &warnings);
  ConvTasNet model(c.enhancer);
  const TrainReport report = TrainEnhancer(model, pairs, *extractor, c.enhancer);
  SaveEnhancer(model, dir.checkpoints() / "enhancer.ckpt");
  nlohmann::json j = report.ToJson();
  j["pairs"] = pairs.size();
  j["warnings"] = warnings;
  WriteJson(j, dir.report() / "enhancer_train.json");
  fmt::print("enhancer: {} pairs, loss {:.6f} -> {:.6f}\n", pairs.size(),
             report.epoch_loss.empty() ? 0.0 : report.epoch_loss.front(),
             report.epoch_loss.empty() ? 0.0 : report.epoch_loss.back());
  return kExitOk;
}

// --- train-antispoof ------------------------------------------------------

struct TrainAsOpts {
  CommonOpts common;
  std::string audio_dir;
  std::string protocol;
  std::string dev_protocol;
  std::string frontend_ckpt;
  std::string external;
};

int RunTrainAntispoof(const TrainAsOpts& o, const Context& ctx) {
  const RunConfig c = ResolveConfig(o.common);
  const RunDir dir = ResolveRunDir(o.common, c);
  WriteRunManifest(dir, c, "train-antispoof", ctx.argv);
  const auto loader = DirectoryLoader(o.audio_dir);
  const auto train = BuildAntispoofData(ParseProtocol(o.protocol), loader, c.align, c.train_crop);
  std::vector<LabeledUtterance> dev;
  if (!o.dev_protocol.empty()) {
    dev = BuildAntispoofData(ParseProtocol(o.dev_protocol), loader, c.align,
                             CropMode::kFixedStart);
  }
  AntispoofModel model(InitialFrontend(c, o.frontend_ckpt, o.external), c.antispoof);
  const TrainReport report = TrainAntispoof(model, train, dev, c.antispoof);
  SaveAntispoof(model, dir.checkpoints() / "antispoof.ckpt");
  WriteJson(report.ToJson(), dir.report() / "antispoof_train.json");
  fmt::print("anti-spoofing model: {} training utterances, best epoch {}\n", train.size(),
             report.best_epoch);
  return kExitOk;
}

// --- enhance --------------------------------------------------------------

struct EnhanceOpts {
  CommonOpts common;
  std::string audio_dir;
  std::string protocol;
  std::string enhancer;
  std::string out_dir;
};

int RunEnhance(const EnhanceOpts& o, const Context& ctx) {
  const RunConfig c = ResolveConfig(o.common);
  const RunDir dir = ResolveRunDir(o.common, c);
  WriteRunManifest(dir, c, "enhance", ctx.argv);
  auto model = LoadEnhancer(o.enhancer.empty() ? dir.checkpoints() / "enhancer.ckpt"
                                               : fs::path(o.enhancer));
  const fs::path out = o.out_dir.empty() ? dir.enhanced() : fs::path(o.out_dir);
  const auto result = BatchEnhance(ParseProtocol(o.protocol), o.audio_dir, *model, out,
                                   c.align.target_length, c.enhancer.batch);
  for (const auto& e : result.errors) std::cerr << "error: " << e << "\n";
  fmt::print("enhance: {} files written to {}, {} failed\n", result.entries.size(),
             out.string(), result.errors.size());
  return result.errors.empty() ? kExitOk : kExitFailure;
}

// --- score ----------------------------------------------------------------

struct ScoreOpts {
  CommonOpts common;
  std::string audio_dir;
  std::string protocol;
  std::string antispoof;
  std::string manifest;
  std::string enhancer;
  std::string out;
  std::string label = "scores";
  bool in_memory = false;
};

int RunScore(const ScoreOpts& o, const Context& ctx) {
  RunConfig c = ResolveConfig(o.common);
  if (o.in_memory) c.in_memory = true;
  const RunDir dir = ResolveRunDir(o.common, c);
  WriteRunManifest(dir, c, "score", ctx.argv);
  if (!o.manifest.empty() && c.in_memory) {
    throw ConfigError("--manifest and in-memory enhancement are mutually exclusive");
  }
  if (o.manifest.empty() && o.audio_dir.empty()) {
    throw ConfigError("score needs --audio-dir or --manifest");
  }
  auto model = LoadAntispoof(o.antispoof.empty() ? dir.checkpoints() / "antispoof.ckpt"
                                                 : fs::path(o.antispoof));
  std::unique_ptr<ConvTasNet> enhancer;
  if (c.in_memory) {
    enhancer = LoadEnhancer(o.enhancer.empty() ? dir.checkpoints() / "enhancer.ckpt"
                                               : fs::path(o.enhancer));
  }
  const AudioLoader loader =
      o.manifest.empty() ? DirectoryLoader(o.audio_dir) : ManifestLoader(o.manifest);
  const auto records = ParseProtocol(o.protocol);
  const auto scores = ScoreTrials(records, loader, *model, c.align.target_length,
                                  c.score_batch, enhancer.get());
  const fs::path out = o.out.empty() ? dir.scores() / (o.label + ".txt") : fs::path(o.out);
  WriteScores(scores, out);
  WriteJson({{"label", o.label},
             {"enhancement", c.in_memory ? "in_memory"
                             : o.manifest.empty() ? "none"
                                                  : "file"},
             {"trials", scores.size()}},
            fs::path(out).replace_extension(".json"));
  fmt::print("scored {} trials -> {}\n", scores.size(), out.string());
  return kExitOk;
}

// --- eval-eer -------------------------------------------------------------

struct EerOpts {
  std::string scores;
  std::string protocol;
};

int RunEvalEer(const EerOpts& o) {
  const ScoreSet set = JoinScores(ReadScores(o.scores), ParseProtocol(o.protocol));
  const EerResult r = ComputeEer(set);
  fmt::print("EER: {}%\n", FormatEerPercent(r.eer));
  fmt::print("Threshold: {:.6f}\n", r.threshold);
  return kExitOk;
}

// --- report ---------------------------------------------------------------

struct ReportOpts {
  CommonOpts common;
  std::vector<std::string> cells;
  std::vector<std::string> spectrograms;
  std::string antispoof;
  std::string out_dir;
};

std::vector<std::string> SplitFields(const std::string& s, size_t n) {
  std::vector<std::string> out;
  size_t start = 0;
  while (out.size() + 1 < n) {
    const auto colon = s.find(':', start);
    if (colon == std::string::npos) break;
    out.push_back(s.substr(start, colon - start));
    start = colon + 1;
  }
  out.push_back(s.substr(start));
  if (out.size() != n) {
    throw ConfigError(fmt::format("'{}' should have {} ':'-separated fields", s, n));
  }
  return out;
}

void AddUnique(std::vector<std::string>& v, const std::string& s) {
  if (std::find(v.begin(), v.end(), s) == v.end()) v.push_back(s);
}

int RunReport(const ReportOpts& o, const Context& ctx) {
  const RunConfig c = ResolveConfig(o.common);
  const RunDir dir = ResolveRunDir(o.common, c);
  WriteRunManifest(dir, c, "report", ctx.argv);
  if (o.cells.empty()) throw ConfigError("report needs at least one --cell");

  ReportInput input;
  std::map<std::string, CdfPanel> panels;
  for (const auto& spec : o.cells) {
    const auto f = SplitFields(spec, 4);  // model:condition:scores:protocol
    RunCell cell{f[0], f[1], std::nullopt};
    AddUnique(input.models, f[0]);
    AddUnique(input.conditions, f[1]);
    if (fs::exists(f[2])) {
      cell.scores = JoinScores(ReadScores(f[2]), ParseProtocol(f[3]));
      CdfPanel& panel = panels[f[0]];
      panel.name = f[0];
      if (panel.series.empty()) {
        panel.series.emplace_back("bonafide", cell.scores->Scores(TrialKey::kBonafide));
      }
      panel.series.emplace_back("spoof " + f[1], cell.scores->Scores(TrialKey::kSpoof));
    } else {
      LOG(WARNING) << "report: missing scores " << f[2];
    }
    input.cells.push_back(std::move(cell));
  }
  for (auto& [name, panel] : panels) input.cdf_panels.push_back(std::move(panel));

  std::unique_ptr<AntispoofModel> model;
  if (!o.antispoof.empty()) model = LoadAntispoof(o.antispoof);
  for (const auto& spec : o.spectrograms) {
    const auto f = SplitFields(spec, 3);  // name:before.wav:after.wav
    SpectrogramPanel p{f[0], ReadAudio(f[1]), ReadAudio(f[2]), std::nullopt, std::nullopt};
    if (model) {
      p.score_before = BonafideScore(p.before, *model);
      p.score_after = BonafideScore(p.after, *model);
    }
    input.spectrogram_panels.push_back(std::move(p));
  }
  input.metadata = {{"run", c.name}, {"seed", c.seed}, {"config", c.ToText()}};

  const fs::path out = o.out_dir.empty() ? dir.report() : fs::path(o.out_dir);
  const ReportSummary summary = EmitReport(input, out);
  for (size_t i = 0; i < input.models.size(); ++i) {
    fmt::print("{}", input.models[i]);
    for (const auto& cell : summary.table[i]) fmt::print("\t{}", cell);
    fmt::print("\n");
  }
  for (const auto& w : summary.warnings) std::cerr << "warning: " << w << "\n";
  return kExitOk;
}

// --- synth-corpus ---------------------------------------------------------

struct SynthOpts {
  SynthConfig config;
  std::string out_dir;
};

int RunSynth(const SynthOpts& o) {
  const SynthCorpus corpus = GenerateCorpus(o.config);
  WriteCorpus(corpus, o.out_dir);
  fmt::print("wrote {} utterances to {}\n", corpus.records.size(), o.out_dir);
  return kExitOk;
}

}  // namespace

int CliMain(const std::vector<std::string>& args) {
  CLI::App app{"attacker/defender anti-spoofing experiments", "spoofbench"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");
  Context ctx{args};
  std::function<int()> action;

  SplitOpts split;
  auto* sp = app.add_subcommand("split-data", "split a protocol into attacker/defender sets");
  AddCommon(sp, split.common);
  sp->add_option("--scenario", split.scenario, "disjoint | shared_defender_full")
      ->check(CLI::IsMember({"disjoint", "shared_defender_full"}));
  sp->add_option("protocol", split.protocol)->required();
  sp->add_option("out_dir", split.out_dir)->required();
  sp->callback([&] { action = [&] { return RunSplit(split, ctx); }; });

  TrainSpkOpts spk;
  auto* ts = app.add_subcommand("train-spkemb", "fine-tune the speaker-embedding extractor");
  AddCommon(ts, spk.common);
  ts->add_option("--audio-dir", spk.audio_dir)->required();
  ts->add_option("--frontend", spk.frontend_ckpt, "initial frontend checkpoint");
  ts->add_option("--external", spk.external, "external frontend adapter name:checkpoint");
  ts->add_option("protocol", spk.protocol)->required();
  ts->callback([&] { action = [&] { return RunTrainSpk(spk, ctx); }; });

  TrainEnhOpts enh;
  auto* te = app.add_subcommand("train-enhance", "train the enhancer against a frozen extractor");
  AddCommon(te, enh.common);
  te->add_option("--audio-dir", enh.audio_dir)->required();
  te->add_option("--extractor", enh.extractor, "extractor checkpoint");
  te->add_option("protocol", enh.protocol)->required();
  te->callback([&] { action = [&] { return RunTrainEnhance(enh, ctx); }; });

  TrainAsOpts as;
  auto* ta = app.add_subcommand("train-antispoof", "train the anti-spoofing model");
  AddCommon(ta, as.common);
  ta->add_option("--audio-dir", as.audio_dir)->required();
  ta->add_option("--dev", as.dev_protocol, "development protocol for model selection");
  ta->add_option("--frontend", as.frontend_ckpt, "initial frontend checkpoint");
  ta->add_option("--external", as.external, "external frontend adapter name:checkpoint");
  ta->add_option("protocol", as.protocol)->required();
  ta->callback([&] { action = [&] { return RunTrainAntispoof(as, ctx); }; });

  EnhanceOpts en;
  auto* ea = app.add_subcommand("enhance", "enhance the spoofed trials of a protocol");
  AddCommon(ea, en.common);
  ea->add_option("--audio-dir", en.audio_dir)->required();
  ea->add_option("--enhancer", en.enhancer, "enhancer checkpoint");
  ea->add_option("--out", en.out_dir, "output folder (default <run>/enhanced)");
  ea->add_option("protocol", en.protocol)->required();
  ea->callback([&] { action = [&] { return RunEnhance(en, ctx); }; });

  ScoreOpts sc;
  auto* sa = app.add_subcommand("score", "write bona fide scores for a protocol");
  AddCommon(sa, sc.common);
  sa->add_option("--audio-dir", sc.audio_dir);
  sa->add_option("--manifest", sc.manifest, "read audio through an enhance manifest");
  sa->add_option("--antispoof", sc.antispoof, "anti-spoofing checkpoint");
  sa->add_option("--enhancer", sc.enhancer, "enhancer checkpoint for --in-memory");
  sa->add_flag("--in-memory", sc.in_memory, "enhance spoofed trials in memory before scoring");
  sa->add_option("--label", sc.label, "score file name under <run>/scores");
  sa->add_option("--out", sc.out, "explicit score file path");
  sa->add_option("protocol", sc.protocol)->required();
  sa->callback([&] { action = [&] { return RunScore(sc, ctx); }; });

  EerOpts eer;
  auto* ee = app.add_subcommand("eval-eer", "EER of a score file against a protocol");
  ee->add_option("scores", eer.scores)->required();
  ee->add_option("protocol", eer.protocol)->required();
  ee->callback([&] { action = [&] { return RunEvalEer(eer); }; });

  ReportOpts rep;
  auto* ra = app.add_subcommand("report", "results table, CDF plots and spectrograms");
  AddCommon(ra, rep.common);
  ra->add_option("--cell", rep.cells, "model:condition:scores:protocol (repeatable)");
  ra->add_option("--spectrogram", rep.spectrograms, "name:before.wav:after.wav (repeatable)");
  ra->add_option("--antispoof", rep.antispoof, "checkpoint used to annotate spectrograms");
  ra->add_option("--out", rep.out_dir, "output folder (default <run>/report)");
  ra->callback([&] { action = [&] { return RunReport(rep, ctx); }; });

  SynthOpts syn;
  auto* sy = app.add_subcommand("synth-corpus", "write a synthetic multi-speaker corpus");
  sy->add_option("--speakers", syn.config.speakers);
  sy->add_option("--bonafide-per-speaker", syn.config.bonafide_per_speaker);
  sy->add_option("--spoofs-per-system", syn.config.spoofs_per_system);
  sy->add_option("--length", syn.config.length);
  sy->add_option("--artifact-level", syn.config.artifact_level);
  sy->add_option("--prefix", syn.config.utt_prefix);
  sy->add_option("--seed", syn.config.seed);
  sy->add_option("out_dir", syn.out_dir)->required();
  sy->callback([&] { action = [&] { return RunSynth(syn); }; });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }
  try {
    return action ? action() : kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace spoofbench
