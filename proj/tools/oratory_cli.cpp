// oratory: command-line front end for the speaking-quality classifier.
//
//   oratory synth    --talks 200 --segments 10 --signal 5 -o corpus/
//   oratory label    --manifest corpus/manifest.jsonl -o corpus/labeled.jsonl
//   oratory train    --manifest corpus/labeled.jsonl --segments corpus/segments.osf -o run/
//   oratory eval     --run run/ --manifest ... --segments ...
//   oratory score    --checkpoint run/fold0.omdl --segments ... -o scores
//   oratory feedback --checkpoint run/fold0.omdl --segments ... --targets 5
//   oratory baseline --manifest ... --segments ... --ours run/report.json -o table.csv
//   oratory gradcheck
//
// Exit status: 0 success, 1 runtime failure, 2 usage error.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "oratory/baseline.hpp"
#include "oratory/checkpoint.hpp"
#include "oratory/evaluation.hpp"
#include "oratory/feature_store.hpp"
#include "oratory/feedback.hpp"
#include "oratory/labeling.hpp"
#include "oratory/selfcheck.hpp"
#include "oratory/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace oratory;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct Common {
  std::uint64_t seed = 42;
  std::size_t threads = 1;
  int verbose = 0;
};

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("I/O failure writing " + path.string());
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

Architecture parse_modalities(const std::string& text) {
  bool use[3] = {false, false, false};
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) use[static_cast<int>(parse_modality(item))] = true;
  if (!use[0] && !use[1] && !use[2]) throw ArgumentError("--modalities selects nothing");
  return Architecture::with_modalities(use[0], use[1], use[2]);
}

/// Labels from the manifest when present, otherwise per-year percentile labels.
LabeledDataset dataset_from(const std::vector<TalkRecord>& manifest) {
  const bool labeled = std::any_of(manifest.begin(), manifest.end(), [](const TalkRecord& t) { return t.label; });
  return labeled ? labeled_from_manifest(manifest) : label_by_year(manifest);
}

std::string fixed(double v, int digits = 4) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(digits);
  os << v;
  return os.str();
}

json reports_json(const std::vector<EvaluationReport>& reports, bool with_scores = false) {
  json out = json::array();
  for (const auto& r : reports) out.push_back(to_json(r, with_scores));
  return out;
}

void print_summary(const std::string& title, const std::vector<EvaluationReport>& reports) {
  std::cout << title << '\n';
  for (const auto& r : reports) {
    std::cout << "  " << to_string(r.aggregation) << ": roc_auc " << fixed(r.roc_auc) << "  f1 " << fixed(r.f1)
              << "  (" << r.n_talks << " talks)\n";
  }
}

const SegmentFeatures& find_segment(const std::vector<SegmentFeatures>& segs, const std::string& talk,
                                    std::uint32_t index) {
  for (const auto& s : segs)
    if (s.talk_id == talk && s.segment_index == index) return s;
  throw ArgumentError("no segment " + talk + ":" + std::to_string(index) + " in the segment file");
}

// ---------------------------------------------------------------------------

struct SynthArgs {
  std::size_t talks = 200, segments = 10;
  double signal = 5.0, posture = 0.0;
  double pose_weight = 1.0, face_weight = 1.0, voice_weight = 1.0;
  int years = 12;
  std::string out;
};

int cmd_synth(const SynthArgs& a, const Common& c) {
  SynthConfig cfg;
  cfg.n_talks = a.talks;
  cfg.segments_per_talk = a.segments;
  cfg.signal_strength = a.signal;
  cfg.weights = {a.pose_weight, a.face_weight, a.voice_weight};
  cfg.posture_signal = a.posture;
  cfg.n_years = a.years;
  cfg.seed = c.seed;
  const SynthCorpus corpus = synth_corpus(cfg);
  fs::create_directories(a.out);
  write_manifest(corpus.talks, fs::path(a.out) / "manifest.jsonl");
  write_segments(corpus.segments, fs::path(a.out) / "segments.osf");
  std::cout << "wrote " << corpus.talks.size() << " talks, " << corpus.segments.size() << " segments to "
            << a.out << '\n';
  return 0;
}

int cmd_stats(const std::string& manifest_path) {
  const auto st = corpus_stats(read_manifest(manifest_path));
  json years = json::object();
  for (const auto& [y, n] : st.per_year_counts) years[std::to_string(y)] = n;
  std::cout << json{{"n_talks", st.n_talks},     {"n_segments", st.n_segments}, {"view_min", st.view_min},
                    {"view_max", st.view_max},   {"view_median", st.view_median},
                    {"view_mean", st.view_mean}, {"per_year_counts", years}}
                   .dump(2)
            << '\n';
  return 0;
}

int cmd_label(const std::string& manifest_path, const std::string& out, std::string drop_list) {
  const auto manifest = read_manifest(manifest_path);
  const auto labeled = label_by_year(manifest);
  if (drop_list.empty()) drop_list = out + ".dropped";
  std::ostringstream m, d;
  write_manifest(labeled.talks, m);
  for (const auto& id : labeled.dropped) d << id << '\n';
  write_text(out, m.str());
  write_text(drop_list, d.str());
  const auto good = std::count_if(labeled.talks.begin(), labeled.talks.end(), [](const auto& t) { return *t.label == 1; });
  std::cout << "labeled " << labeled.talks.size() << " talks (" << good << " good, "
            << labeled.talks.size() - static_cast<std::size_t>(good) << " bad), dropped " << labeled.dropped.size()
            << '\n';
  return 0;
}

struct TrainArgs {
  std::string manifest, segments, out, modalities = "pose,face,voice";
  TrainConfig config;
};

int cmd_train(TrainArgs a, const Common& c) {
  const auto manifest = read_manifest(a.manifest);
  const auto segments = read_segments(a.segments);
  validate_corpus(manifest, segments);
  const LabeledDataset data = dataset_from(manifest);
  a.config.seed = c.seed;
  a.config.threads = c.threads;
  a.config.arch = parse_modalities(a.modalities);
  if (c.verbose > 0 && c.threads <= 1) {
    a.config.on_epoch = [](std::size_t epoch, double loss, double auc) {
      std::cerr << "  epoch " << epoch << "  loss " << fixed(loss, 5) << "  val_auc " << fixed(auc) << '\n';
    };
  }
  std::cerr << "training " << a.config.arch.modality_label() << " model on " << data.talks.size() << " talks, "
            << a.config.folds << " folds\n";
  const auto folds = run_cv(data, segments, a.config);

  fs::create_directories(a.out);
  json per_fold = json::array(), assignment = json::array();
  for (const auto& f : folds) {
    save_checkpoint(f.training.model, fs::path(a.out) / ("fold" + std::to_string(f.fold) + ".omdl"));
    std::ostringstream curve;
    write_curve_csv(curve, f.training.curve);
    write_text(fs::path(a.out) / ("fold" + std::to_string(f.fold) + "_curve.csv"), curve.str());
    per_fold.push_back({{"fold", f.fold},
                        {"best_epoch", f.training.best_epoch},
                        {"best_val_auc", f.training.best_val_auc},
                        {"reports", reports_json(f.reports)}});
    assignment.push_back({{"fold", f.fold}, {"test", f.test_talks}, {"val", f.val_talks}, {"train", f.train_talks}});
  }
  const auto averaged = average_cv(folds);
  const json report = {{"model", "ours"},
                       {"inputs", a.config.arch.modality_label()},
                       {"architecture", a.config.arch.descriptor()},
                       {"seed", c.seed},
                       {"folds", per_fold},
                       {"averaged", reports_json(averaged)}};
  write_text(fs::path(a.out) / "report.json", report.dump(2) + "\n");
  write_text(fs::path(a.out) / "folds.json", json(assignment).dump(2) + "\n");
  std::ostringstream csv;
  write_report_csv(csv, averaged, "ours", a.config.arch.modality_label());
  write_text(fs::path(a.out) / "report.csv", csv.str());
  print_summary("cross-validated (" + std::to_string(folds.size()) + " folds):", averaged);
  return 0;
}

struct EvalArgs {
  std::string run, manifest, segments, out, modalities = "pose,face,voice", aggregation;
  std::vector<std::string> checkpoints;
};

int cmd_eval(const EvalArgs& a) {
  const auto manifest = read_manifest(a.manifest);
  const auto segments = read_segments(a.segments);
  const LabeledDataset data = dataset_from(manifest);
  const Architecture expected = parse_modalities(a.modalities);
  std::vector<Aggregation> strategies(kAllAggregations.begin(), kAllAggregations.end());
  if (!a.aggregation.empty()) strategies = {parse_aggregation(a.aggregation)};

  std::vector<std::vector<EvaluationReport>> per_model;
  json models = json::array();
  auto talks_named = [&](const std::vector<std::string>& ids) {
    std::set<std::string> wanted(ids.begin(), ids.end());
    std::vector<TalkRecord> out;
    for (const auto& t : data.talks)
      if (wanted.count(t.talk_id)) out.push_back(t);
    if (out.size() != wanted.size()) throw FormatError("fold assignment names talks missing from the manifest");
    return out;
  };
  if (!a.run.empty()) {
    const json folds = read_json(fs::path(a.run) / "folds.json");
    for (const auto& f : folds) {
      const std::size_t fold = f.at("fold").get<std::size_t>();
      const fs::path ck = fs::path(a.run) / ("fold" + std::to_string(fold) + ".omdl");
      const auto model = load_model_for<float>(ck, expected);
      per_model.push_back(evaluate(model, talks_named(f.at("test").get<std::vector<std::string>>()), segments,
                                   strategies));
      models.push_back({{"checkpoint", ck.string()}, {"reports", reports_json(per_model.back())}});
    }
  }
  for (const auto& path : a.checkpoints) {
    const auto model = load_model_for<float>(path, expected);
    per_model.push_back(evaluate(model, data.talks, segments, strategies));
    models.push_back({{"checkpoint", path}, {"reports", reports_json(per_model.back())}});
  }
  if (per_model.empty()) throw ArgumentError("eval needs --run or --checkpoint");
  const auto averaged = average_reports(per_model);
  const json report = {{"inputs", expected.modality_label()}, {"models", models}, {"averaged", reports_json(averaged)}};
  if (!a.out.empty()) {
    write_text(a.out + ".json", report.dump(2) + "\n");
    std::ostringstream csv;
    write_report_csv(csv, averaged);
    write_text(a.out + ".csv", csv.str());
  }
  print_summary("evaluation over " + std::to_string(per_model.size()) + " checkpoint(s):", averaged);
  return 0;
}

struct ScoreArgs {
  std::string checkpoint, segments, manifest, out, modalities = "pose,face,voice", aggregation = "max";
};

int cmd_score(const ScoreArgs& a) {
  const auto model = load_model_for<float>(a.checkpoint, parse_modalities(a.modalities));
  auto segments = read_segments(a.segments);
  if (!a.manifest.empty()) {
    const auto manifest = read_manifest(a.manifest);
    std::set<std::string> ids;
    for (const auto& t : manifest) ids.insert(t.talk_id);
    std::erase_if(segments, [&](const SegmentFeatures& s) { return !ids.count(s.talk_id); });
  }
  const Aggregation strategy = parse_aggregation(a.aggregation);
  const auto scores = model.score(std::span<const SegmentFeatures>(segments));
  std::ostringstream seg_csv, talk_csv;
  seg_csv.precision(9);
  talk_csv.precision(17);
  seg_csv << "talk_id,segment_index,score\n";
  std::map<std::string, std::vector<double>> by_talk;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    seg_csv << segments[i].talk_id << ',' << segments[i].segment_index << ',' << scores[i] << '\n';
    by_talk[segments[i].talk_id].push_back(scores[i]);
  }
  talk_csv << "talk_id," << to_string(strategy) << "_score\n";
  for (const auto& [id, s] : by_talk) talk_csv << id << ',' << aggregate_talk_score(s, strategy) << '\n';
  if (a.out.empty()) {
    std::cout << seg_csv.str();
  } else {
    write_text(a.out + "_segments.csv", seg_csv.str());
    write_text(a.out + "_talks.csv", talk_csv.str());
    std::cout << "scored " << segments.size() << " segments of " << by_talk.size() << " talks\n";
  }
  return 0;
}

struct FeedbackArgs {
  std::string checkpoint, segments, target, csv, modalities = "pose,face,voice";
  std::size_t targets = 1;
};

int cmd_feedback(const FeedbackArgs& a) {
  const auto model = load_model_for<float>(a.checkpoint, parse_modalities(a.modalities));
  const auto segments = read_segments(a.segments);
  if (segments.empty()) throw ArgumentError("segment file is empty");

  std::vector<const SegmentFeatures*> targets;
  if (!a.target.empty()) {
    const auto colon = a.target.rfind(':');
    if (colon == std::string::npos) throw ArgumentError("--target expects TALK:SEGMENT");
    targets.push_back(&find_segment(segments, a.target.substr(0, colon),
                                    static_cast<std::uint32_t>(std::stoul(a.target.substr(colon + 1)))));
  } else {
    const auto scores = model.score(std::span<const SegmentFeatures>(segments));
    std::vector<std::size_t> order(segments.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return scores[x] < scores[y]; });
    for (std::size_t i = 0; i < std::min(a.targets, order.size()); ++i) targets.push_back(&segments[order[i]]);
  }

  // Donors come from other talks only; the pool is shared across targets.
  std::vector<const SegmentFeatures*> all;
  for (const auto& s : segments) all.push_back(&s);
  const DonorPool<float> pool(model, all);
  std::vector<FeedbackReport> reports;
  json out = json::array();
  for (const SegmentFeatures* t : targets) {
    std::vector<const SegmentFeatures*> segs;
    std::vector<SegmentLatents<float>> lats;
    std::vector<double> scores;
    for (std::size_t i = 0; i < pool.segments.size(); ++i) {
      if (pool.segments[i]->talk_id == t->talk_id) continue;
      segs.push_back(pool.segments[i]);
      lats.push_back(pool.latents[i]);
      scores.push_back(pool.scores[i]);
    }
    if (segs.empty()) throw ArgumentError("no donor segments outside talk " + t->talk_id);
    reports.push_back(recommend_modality<float>(*t, model.segment_latents(*t), segs, lats, scores, model));
    out.push_back(to_json(reports.back()));
  }
  if (!a.csv.empty()) {
    std::ostringstream csv;
    write_feedback_csv(csv, reports);
    write_text(a.csv, csv.str());
  }
  std::cout << out.dump(2) << '\n';
  return 0;
}

struct BaselineArgs {
  std::string manifest, segments, out, ours, inputs = "all";
  BaselineConfig config;
};

int cmd_baseline(BaselineArgs a, const Common& c) {
  const auto manifest = read_manifest(a.manifest);
  const auto segments = read_segments(a.segments);
  validate_corpus(manifest, segments);
  const LabeledDataset data = dataset_from(manifest);
  a.config.seed = c.seed;

  std::vector<BaselineInputs> which;
  if (a.inputs == "all") which = {BaselineInputs::video, BaselineInputs::audio, BaselineInputs::video_audio};
  else if (a.inputs == "video") which = {BaselineInputs::video};
  else if (a.inputs == "audio") which = {BaselineInputs::audio};
  else if (a.inputs == "video+audio") which = {BaselineInputs::video_audio};
  else throw ArgumentError("unknown --inputs '" + a.inputs + "'");

  std::ostringstream table;
  bool header = true;
  if (!a.ours.empty()) {
    const json ours = read_json(a.ours);
    std::vector<EvaluationReport> rows;
    for (const auto& r : ours.at("averaged")) {
      rows.push_back({parse_aggregation(r.at("strategy").get<std::string>()), r.at("roc_auc").get<double>(),
                      r.at("f1").get<double>(), r.at("n_talks").get<std::size_t>(), {}});
    }
    write_report_csv(table, rows, "ours", ours.at("inputs").get<std::string>(), header);
    header = false;
  }
  for (BaselineInputs in : which) {
    a.config.inputs = in;
    const auto cv = train_baseline(data, segments, a.config);
    for (const auto& w : std::set<std::string>(cv.warnings.begin(), cv.warnings.end())) std::cerr << "warning: " << w << '\n';
    write_report_csv(table, cv.averaged, "baseline", to_string(in), header);
    header = false;
  }
  if (!a.out.empty()) write_text(a.out, table.str());
  std::cout << table.str();
  return 0;
}

int cmd_gradcheck(const Common& c) {
  bool ok = true;
  auto line = [&](const nn::GradCheckReport& r) {
    ok = ok && r.passed;
    std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << "  max_rel_error " << r.max_rel_error << "  checked "
              << r.checked << "  skipped " << r.skipped << "  tolerance " << r.tolerance << '\n';
  };
  for (const auto& r : layer_grad_checks(c.seed)) line(r);
  line(model_grad_check(Architecture{}, c.seed));
  return ok ? 0 : kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Train and evaluate a pose/face/voice speaking-quality classifier"};
  app.require_subcommand(1);
  app.fallthrough();  // --seed, --threads, -v accepted after the subcommand too
  Common common;
  app.add_option("--seed", common.seed, "Seed for every random stream")->capture_default_str();
  app.add_option("--threads", common.threads, "Folds trained concurrently")->check(CLI::PositiveNumber);
  app.add_flag("-v,--verbose", common.verbose, "Per-epoch progress on stderr");

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Generate a seeded synthetic corpus");
  s->add_option("--talks", synth.talks, "Number of talks")->check(CLI::Range(2, 1000000))->capture_default_str();
  s->add_option("--segments", synth.segments, "Segments per talk")->check(CLI::Range(1, 100000))->capture_default_str();
  s->add_option("--signal", synth.signal, "Class signal strength")->check(CLI::NonNegativeNumber)->capture_default_str();
  s->add_option("--pose-weight", synth.pose_weight, "Signal multiplier for pose")->check(CLI::NonNegativeNumber);
  s->add_option("--face-weight", synth.face_weight, "Signal multiplier for face")->check(CLI::NonNegativeNumber);
  s->add_option("--voice-weight", synth.voice_weight, "Signal multiplier for voice")->check(CLI::NonNegativeNumber);
  s->add_option("--posture-signal", synth.posture, "Class gap of the wrist/shoulder ratio")->check(CLI::NonNegativeNumber);
  s->add_option("--years", synth.years, "Distinct publication years")->check(CLI::Range(1, 1000));
  s->add_option("-o,--out", synth.out, "Output directory")->required();

  std::string stats_manifest;
  auto* st = app.add_subcommand("stats", "View-count statistics of a manifest");
  st->add_option("--manifest", stats_manifest)->required()->check(CLI::ExistingFile);

  std::string label_manifest, label_out, label_drop;
  auto* l = app.add_subcommand("label", "Per-year percentile labels");
  l->add_option("--manifest", label_manifest)->required()->check(CLI::ExistingFile);
  l->add_option("-o,--out", label_out, "Labeled manifest")->required();
  l->add_option("--drop-list", label_drop, "Dropped talk ids (default: <out>.dropped)");

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Cross-validated training");
  t->add_option("--manifest", train.manifest)->required()->check(CLI::ExistingFile);
  t->add_option("--segments", train.segments)->required()->check(CLI::ExistingFile);
  t->add_option("-o,--out", train.out, "Run directory")->required();
  t->add_option("--folds", train.config.folds)->check(CLI::Range(2, 100))->capture_default_str();
  t->add_option("--lr", train.config.learning_rate)->check(CLI::NonNegativeNumber)->capture_default_str();
  t->add_option("--batch", train.config.batch_size)->check(CLI::Range(2, 1 << 20))->capture_default_str();
  t->add_option("--epochs", train.config.max_epochs)->check(CLI::PositiveNumber)->capture_default_str();
  t->add_option("--patience", train.config.patience)->check(CLI::PositiveNumber)->capture_default_str();
  t->add_option("--modalities", train.modalities, "Comma list of pose, face, voice")->capture_default_str();

  EvalArgs eval;
  auto* e = app.add_subcommand("eval", "Evaluate checkpoints at talk level");
  e->add_option("--run", eval.run, "Run directory from train (each fold on its held-out talks)")
      ->check(CLI::ExistingDirectory);
  e->add_option("--checkpoint", eval.checkpoints, "Checkpoint scored on every labeled talk")->check(CLI::ExistingFile);
  e->add_option("--manifest", eval.manifest)->required()->check(CLI::ExistingFile);
  e->add_option("--segments", eval.segments)->required()->check(CLI::ExistingFile);
  e->add_option("--modalities", eval.modalities, "Architecture the checkpoints must match")->capture_default_str();
  e->add_option("--aggregation", eval.aggregation)->check(CLI::IsMember({"max", "mean", "median"}));
  e->add_option("-o,--out", eval.out, "Write <out>.json and <out>.csv");

  ScoreArgs score;
  auto* sc = app.add_subcommand("score", "Per-segment and per-talk scores");
  sc->add_option("--checkpoint", score.checkpoint)->required()->check(CLI::ExistingFile);
  sc->add_option("--segments", score.segments)->required()->check(CLI::ExistingFile);
  sc->add_option("--manifest", score.manifest, "Restrict to these talks")->check(CLI::ExistingFile);
  sc->add_option("--modalities", score.modalities)->capture_default_str();
  sc->add_option("--aggregation", score.aggregation)->check(CLI::IsMember({"max", "mean", "median"}))->capture_default_str();
  sc->add_option("-o,--out", score.out, "Write <out>_segments.csv and <out>_talks.csv");

  FeedbackArgs feedback;
  auto* f = app.add_subcommand("feedback", "Modality-replacement diagnostic");
  f->add_option("--checkpoint", feedback.checkpoint)->required()->check(CLI::ExistingFile);
  f->add_option("--segments", feedback.segments)->required()->check(CLI::ExistingFile);
  f->add_option("--modalities", feedback.modalities)->capture_default_str();
  f->add_option("--target", feedback.target, "TALK:SEGMENT to diagnose");
  f->add_option("--targets", feedback.targets, "Otherwise the N lowest-scoring segments")->check(CLI::PositiveNumber);
  f->add_option("--csv", feedback.csv, "Also write (target, modality, delta) rows");

  BaselineArgs baseline;
  auto* b = app.add_subcommand("baseline", "Interpretable-feature logistic regression");
  b->add_option("--manifest", baseline.manifest)->required()->check(CLI::ExistingFile);
  b->add_option("--segments", baseline.segments)->required()->check(CLI::ExistingFile);
  b->add_option("--folds", baseline.config.folds)->check(CLI::Range(2, 100))->capture_default_str();
  b->add_option("--lr", baseline.config.learning_rate)->check(CLI::NonNegativeNumber)->capture_default_str();
  b->add_option("--batch", baseline.config.batch_size)->check(CLI::Range(2, 1 << 20))->capture_default_str();
  b->add_option("--epochs", baseline.config.max_epochs)->check(CLI::PositiveNumber)->capture_default_str();
  b->add_option("--patience", baseline.config.patience)->check(CLI::PositiveNumber)->capture_default_str();
  b->add_option("--inputs", baseline.inputs)->check(CLI::IsMember({"all", "video", "audio", "video+audio"}));
  b->add_option("--ours", baseline.ours, "report.json from train, added as model=ours rows")
      ->check(CLI::ExistingFile);
  b->add_option("-o,--out", baseline.out, "CSV table");

  auto* g = app.add_subcommand("gradcheck", "Finite-difference checks of every layer and the full model");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*s) return cmd_synth(synth, common);
    if (*st) return cmd_stats(stats_manifest);
    if (*l) return cmd_label(label_manifest, label_out, label_drop);
    if (*t) return cmd_train(train, common);
    if (*e) return cmd_eval(eval);
    if (*sc) return cmd_score(score);
    if (*f) return cmd_feedback(feedback);
    if (*b) return cmd_baseline(baseline, common);
    if (*g) return cmd_gradcheck(common);
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
