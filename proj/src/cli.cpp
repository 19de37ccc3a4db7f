#include "curafuse/cli.hpp"

#include "curafuse/corpus.hpp"
#include "curafuse/dedup.hpp"
#include "curafuse/encoders.hpp"
#include "curafuse/eval.hpp"
#include "curafuse/io.hpp"
#include "curafuse/rng.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>

#ifndef CURAFUSE_VERSION
#define CURAFUSE_VERSION "dev"
#endif

namespace curafuse {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

void PipelineConfig::validate() const {
  if (!(near_threshold > 0.0 && near_threshold <= 1.0))
    throw ConfigError("near_threshold: must be in (0, 1]");
  if (audit_index.tables == 0) throw ConfigError("tables: must be positive");
  if (audit_index.bits == 0 || audit_index.bits > 64) throw ConfigError("bits: must be in 1..64");
  if (audit_k == 0) throw ConfigError("k: must be positive");
  if (flag_min_disagree == 0 || flag_min_disagree > audit_k)
    throw ConfigError("min_disagree: must be in 1..k");
  fractions.validate();
  train.validate();
  if (trend_degree == 0 || trend_degree > 3) throw ConfigError("degree: must be 1, 2 or 3");
  if (schedule_first.has_value() != schedule_last.has_value())
    throw ConfigError("schedule: both schedule_from and schedule_to are required");
  if (schedule_first && *schedule_last < *schedule_first)
    throw ConfigError("schedule: schedule_to precedes schedule_from");
}

namespace {

std::string created_at() {
  using namespace std::chrono;
  sys_seconds now = floor<seconds>(system_clock::now());
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH")) {
    char* end = nullptr;
    const long long v = std::strtoll(epoch, &end, 10);
    if (end && *end == '\0') now = sys_seconds{seconds{v}};
  }
  return format_rfc3339(now);
}

}  // namespace

std::string emit_run_manifest(const PipelineConfig& cfg) {
  ojson m;
  m["tool"] = "curafuse";
  m["version"] = CURAFUSE_VERSION;
  m["command"] = cfg.command;
  m["seed"] = cfg.seed;

  ojson c;
  c["near_threshold"] = cfg.near_threshold;
  c["tables"] = cfg.audit_index.tables;
  c["bits"] = cfg.audit_index.bits;
  c["k"] = cfg.audit_k;
  c["min_disagree"] = cfg.flag_min_disagree;
  c["fractions"] = {cfg.fractions.train_frac, cfg.fractions.val_frac, cfg.fractions.test_frac};
  c["learning_rate"] = cfg.train.learning_rate;
  c["max_epochs"] = cfg.train.max_epochs;
  c["batch_size"] = cfg.train.batch_size;
  c["patience"] = cfg.train.patience;
  c["trend_from"] = cfg.trend_from.str();
  c["degree"] = cfg.trend_degree;
  c["schedule_from"] = cfg.schedule_first ? ojson(cfg.schedule_first->str()) : ojson(nullptr);
  c["schedule_to"] = cfg.schedule_last ? ojson(cfg.schedule_last->str()) : ojson(nullptr);
  m["config"] = std::move(c);

  ojson inputs = ojson::object();
  for (const auto& [role, path] : cfg.inputs) {
    ojson entry;
    entry["path"] = path.string();
    std::error_code ec;
    entry["sha256"] = fs::is_regular_file(path, ec) ? ojson(sha256_file_hex(path)) : ojson(nullptr);
    inputs[role] = std::move(entry);
  }
  m["inputs"] = std::move(inputs);
  ojson outputs = ojson::object();
  for (const auto& [role, path] : cfg.outputs) outputs[role] = path.string();
  m["outputs"] = std::move(outputs);
  m["created_at"] = created_at();
  return m.dump(2) + "\n";
}

namespace {

// Output files are staged in memory and written together once the command has succeeded.
class Artifacts {
public:
  void add(const fs::path& path, std::string contents) { files_.emplace_back(path, std::move(contents)); }
  // Stage everything first so a failed write leaves none of the outputs behind.
  void commit() const {
    std::vector<fs::path> staged;
    try {
      for (const auto& [path, contents] : files_) {
        staged.push_back(fs::path(path.string() + ".staged"));
        write_file_atomic(staged.back(), contents);
      }
      for (std::size_t i = 0; i < files_.size(); ++i) fs::rename(staged[i], files_[i].first);
    } catch (const std::exception& e) {
      std::error_code ec;
      for (const auto& s : staged) fs::remove(s, ec);
      throw DataError(std::string("writing outputs: ") + e.what());
    }
  }

private:
  std::vector<std::pair<fs::path, std::string>> files_;
};

const fs::path& need(const std::map<std::string, fs::path>& paths, const std::string& role) {
  auto it = paths.find(role);
  if (it == paths.end() || it->second.empty()) throw ConfigError(role + ": path is required");
  return it->second;
}

std::optional<fs::path> maybe(const std::map<std::string, fs::path>& paths, const std::string& role) {
  auto it = paths.find(role);
  if (it == paths.end() || it->second.empty()) return std::nullopt;
  return it->second;
}

Dataset load_dataset(const fs::path& path, std::ostream& err) {
  LoadResult r = load_posts(path);
  if (r.skipped) err << "warning: " << path.string() << ": skipped " << r.skipped << " malformed line(s)\n";
  return std::move(r.dataset);
}

ojson count_json(std::initializer_list<std::pair<const char*, std::size_t>> kv) {
  ojson j;
  for (const auto& [k, v] : kv) j[k] = v;
  return j;
}

// Stub encoders unless score files are given; a score file replaces its modality.
struct EncoderSet {
  std::unique_ptr<ModalityEncoder> text;
  std::unique_ptr<ModalityEncoder> image;
  EncoderPair pair() const { return {*text, *image}; }
};

EncoderSet make_encoders(const PipelineConfig& cfg, std::uint64_t encoder_seed) {
  EncoderSet e;
  if (auto p = maybe(cfg.inputs, "text_scores"))
    e.text = std::make_unique<PrecomputedEncoder>(Modality::Text, load_score_csv(*p), "precomputed-text");
  else
    e.text = std::make_unique<HashedTextEncoder>(encoder_seed);
  if (auto p = maybe(cfg.inputs, "image_scores"))
    e.image = std::make_unique<PrecomputedEncoder>(Modality::Image, load_score_csv(*p), "precomputed-image");
  else
    e.image = std::make_unique<DHashImageEncoder>(encoder_seed);
  return e;
}

std::uint64_t encoder_seed_for(std::uint64_t seed) { return derive_seed(seed, {fnv1a64("encoders")}); }

std::vector<std::string> read_id_list(const fs::path& path) {
  const std::string text = read_file(path);
  std::vector<std::string> ids;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) ids.push_back(line);
  }
  return ids;
}

void cmd_ingest(const PipelineConfig& cfg, Artifacts& art, std::ostream& err) {
  const LoadResult loaded = load_posts(need(cfg.inputs, "input"));
  const FilterResult filtered = filter_multimodal(sanitize_dataset(loaded.dataset));
  art.add(need(cfg.outputs, "out"), to_jsonl(filtered.dataset));
  const std::string report = count_json({{"loaded", loaded.dataset.size()},
                                         {"skipped_malformed", loaded.skipped},
                                         {"missing_text", filtered.missing_text},
                                         {"missing_image", filtered.missing_image},
                                         {"undecodable_image", filtered.undecodable_image},
                                         {"kept", filtered.dataset.size()}})
                                 .dump(2) + "\n";
  if (auto r = maybe(cfg.outputs, "report")) art.add(*r, report);
  err << report;
}

void cmd_dedupe(const PipelineConfig& cfg, Artifacts& art, std::ostream& err) {
  const Dataset d = load_dataset(need(cfg.inputs, "input"), err);
  const DedupResult r = remove_duplicates(d, cfg.near_threshold);
  art.add(need(cfg.outputs, "out"), to_jsonl(r.dataset));
  const std::string report = r.report.to_json() + "\n";
  if (auto p = maybe(cfg.outputs, "report")) art.add(*p, report);
  err << report;
}

void cmd_audit(const PipelineConfig& cfg, Artifacts& art, std::ostream& err) {
  const Dataset d = load_dataset(need(cfg.inputs, "input"), err);
  std::vector<Embedding> embeddings;
  if (auto p = maybe(cfg.inputs, "embeddings")) {
    embeddings = read_embeddings(*p);
    if (embeddings.size() != d.size())
      throw DataError("embeddings: " + std::to_string(embeddings.size()) + " records for " +
                      std::to_string(d.size()) + " posts");
  } else {
    embeddings.resize(d.size());
    const std::uint64_t embed_seed = derive_seed(cfg.seed, {fnv1a64("embed")});
    parallel_for(d.size(), [&](std::size_t i) { embeddings[i] = stub_embed(d.posts[i], embed_seed); });
  }
  std::vector<IndexItem> items;
  items.reserve(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (!d.posts[i].label) throw DataError("audit: unlabeled post " + d.posts[i].id);
    items.push_back({d.posts[i].id, std::move(embeddings[i]), d.posts[i].label});
  }
  IndexParams params = cfg.audit_index;
  params.seed = derive_seed(cfg.seed, {fnv1a64("index")});
  SimIndex index(std::move(items), params);
  if (index.size() <= cfg.audit_k)
    throw DataError("audit: need more than k=" + std::to_string(cfg.audit_k) + " posts");
  const FlagReport report = audit_labels(index, cfg.audit_k, cfg.flag_min_disagree);
  art.add(need(cfg.outputs, "report"), report.to_json() + "\n");
  err << "audit: flagged " << report.flagged.size() << " of " << report.examined << "\n";

  if (auto removal = maybe(cfg.inputs, "remove")) {
    const auto ids = read_id_list(*removal);
    art.add(need(cfg.outputs, "out"), to_jsonl(apply_removals(d, ids)));
  }
}

void cmd_balance(const PipelineConfig& cfg, Artifacts& art, std::ostream& err) {
  const Dataset d = load_dataset(need(cfg.inputs, "input"), err);
  const Dataset b = balance(d, cfg.seed);
  art.add(need(cfg.outputs, "out"), to_jsonl(b));
  const auto counts = class_counts(b);
  err << "balance: " << counts[0] << " per class, " << b.size() << " total\n";
}

void cmd_split(const PipelineConfig& cfg, Artifacts& art, std::ostream& err) {
  const Dataset d = load_dataset(need(cfg.inputs, "input"), err);
  SplitSpec spec = cfg.fractions;
  spec.seed = cfg.seed;
  const Splits s = split(d, spec);
  const fs::path dir = need(cfg.outputs, "out_dir");
  art.add(dir / "train.jsonl", to_jsonl(s.train));
  art.add(dir / "val.jsonl", to_jsonl(s.val));
  art.add(dir / "test.jsonl", to_jsonl(s.test));
  art.add(dir / "split.csv", split_membership_csv(s));
  err << "split: " << s.train.size() << " / " << s.val.size() << " / " << s.test.size() << "\n";
}

void cmd_train(const PipelineConfig& cfg, Artifacts& art, std::ostream& err) {
  const Dataset train = load_dataset(need(cfg.inputs, "train"), err);
  const Dataset val = load_dataset(need(cfg.inputs, "val"), err);
  if (train.size() == 0 || val.size() == 0) throw DataError("train: training and validation sets must be non-empty");
  const std::uint64_t enc_seed = encoder_seed_for(cfg.seed);
  const EncoderSet enc = make_encoders(cfg, enc_seed);
  TrainConfig tc = cfg.train;
  tc.seed = cfg.seed;
  FusionHead head = train_fusion(train, val, enc.pair(), tc);
  head.text_encoder = enc.text->name();
  head.image_encoder = enc.image->name();
  head.encoder_seed = enc_seed;
  art.add(need(cfg.outputs, "out"), head.to_json() + "\n");
  err << "train: " << head.epochs_run << " epochs, best validation loss " << head.best_val_loss << "\n";
}

FusionHead load_head(const PipelineConfig& cfg) { return FusionHead::from_json(read_file(need(cfg.inputs, "head"))); }

void cmd_eval(const PipelineConfig& cfg, Artifacts& art, std::ostream& err) {
  const Dataset d = load_dataset(need(cfg.inputs, "input"), err);
  const FusionHead head = load_head(cfg);
  const EncoderSet enc = make_encoders(cfg, head.encoder_seed);
  const auto samples = encode_samples(d, enc.pair());
  if (samples.empty()) throw DataError("eval: no samples");
  std::vector<int> preds, truth;
  std::vector<ProbRow> probs;
  for (const FusionSample& s : samples) {
    const Prediction p = predict(s.text, s.image, head);
    preds.push_back(encode_label(p.label));
    truth.push_back(s.code);
    probs.push_back(p.probs);
  }
  const MetricReport report = metrics(confusion(preds, truth));
  art.add(need(cfg.outputs, "report"), report.to_json() + "\n");
  const CurveSet curves = ovr_curves(probs, truth);
  if (auto p = maybe(cfg.outputs, "roc")) art.add(*p, curves.roc_csv());
  if (auto p = maybe(cfg.outputs, "pr")) art.add(*p, curves.pr_csv());
  err << "eval: accuracy " << report.accuracy << ", macro F1 " << report.macro_f1 << "\n";
}

void cmd_classify(const PipelineConfig& cfg, Artifacts& art, std::ostream& err) {
  const Dataset d = load_dataset(need(cfg.inputs, "input"), err);
  const FusionHead head = load_head(cfg);
  const EncoderSet enc = make_encoders(cfg, head.encoder_seed);
  std::vector<std::optional<Prediction>> preds(d.size());
  parallel_for(d.size(), [&](std::size_t i) {
    try {
      preds[i] = predict(d.posts[i], enc.pair(), head);
    } catch (const MissingModalityError&) {
    }
  });
  std::string csv = "id,posted_at,source,label,p0,p1,p2\n";
  std::size_t skipped = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (!preds[i]) {
      ++skipped;
      continue;
    }
    const Post& p = d.posts[i];
    csv += p.id + "," + format_rfc3339(p.posted_at) + "," + p.source + "," +
           std::string(label_name(preds[i]->label));
    for (double v : preds[i]->probs) csv += "," + format_double(v);
    csv += "\n";
  }
  art.add(need(cfg.outputs, "out"), csv);
  err << "classify: " << d.size() - skipped << " classified, " << skipped << " skipped (missing modality)\n";
}

void cmd_trend(const PipelineConfig& cfg, Artifacts& art, std::ostream& err) {
  if (cfg.schedule_first) {
    std::string csv = "year,month,day1,day2,day3\n";
    for (MonthKey m = *cfg.schedule_first; m <= *cfg.schedule_last; m = m.next()) {
      const auto days = sampling_schedule(m, cfg.seed);
      csv += std::to_string(m.year) + "," + std::to_string(m.month) + "," + std::to_string(days[0]) + "," +
             std::to_string(days[1]) + "," + std::to_string(days[2]) + "\n";
    }
    art.add(need(cfg.outputs, "schedule"), csv);
  }
  auto input = maybe(cfg.inputs, "input");
  if (!input) {
    if (!cfg.schedule_first) throw ConfigError("input: path is required");
    return;
  }

  // predictions CSV: id,posted_at,source,label,...
  const std::string text = read_file(*input);
  std::map<std::string, std::vector<ClassifiedPost>> by_source;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line);
    if (line_no == 1 && !f.empty() && f[0] == "id") continue;
    if (f.size() < 4) throw DataError("predictions line " + std::to_string(line_no) + ": too few fields");
    const auto ts = parse_rfc3339(f[1]);
    const auto label = parse_label_name(f[3]);
    if (!ts || !label) throw DataError("predictions line " + std::to_string(line_no) + ": bad timestamp or label");
    by_source[f[2]].push_back({*ts, *label});
  }

  std::string series_csv(kSeriesCsvHeader);
  std::string fits_csv(kFitCsvHeader);
  for (const auto& [source, posts] : by_source) {
    const MonthlySeries s = aggregate_monthly(posts);
    series_csv += series_csv_rows(source, s);
    try {
      fits_csv += fit_csv_row(source, fit_series(s, cfg.trend_degree));
    } catch (const std::invalid_argument& e) {
      err << "warning: " << source << ": no degree-" << cfg.trend_degree << " fit: " << e.what() << "\n";
    }
    try {
      fits_csv += fit_csv_row(source, linear_fit(s, cfg.trend_from));
    } catch (const std::invalid_argument& e) {
      err << "warning: " << source << ": no linear fit: " << e.what() << "\n";
    }
  }
  art.add(need(cfg.outputs, "series"), series_csv);
  art.add(need(cfg.outputs, "fits"), fits_csv);
  err << "trend: " << by_source.size() << " series\n";
}

fs::path manifest_path(const PipelineConfig& cfg) {
  if (auto p = maybe(cfg.outputs, "manifest")) return *p;
  for (const char* role : {"out", "report", "fits", "schedule"})
    if (auto p = maybe(cfg.outputs, role)) return fs::path(p->string() + ".manifest.json");
  if (auto p = maybe(cfg.outputs, "out_dir")) return *p / "manifest.json";
  return "manifest.json";
}

}  // namespace

int run(const PipelineConfig& cfg, std::ostream& out, std::ostream& err) {
  (void)out;
  try {
    cfg.validate();
    for (const auto& [role, path] : cfg.inputs)
      if (!path.empty() && !fs::exists(path)) throw DataError(role + ": no such file: " + path.string());
    Artifacts art;
    const std::string& c = cfg.command;
    if (c == "ingest") cmd_ingest(cfg, art, err);
    else if (c == "dedupe") cmd_dedupe(cfg, art, err);
    else if (c == "audit") cmd_audit(cfg, art, err);
    else if (c == "balance") cmd_balance(cfg, art, err);
    else if (c == "split") cmd_split(cfg, art, err);
    else if (c == "train") cmd_train(cfg, art, err);
    else if (c == "eval") cmd_eval(cfg, art, err);
    else if (c == "classify") cmd_classify(cfg, art, err);
    else if (c == "trend") cmd_trend(cfg, art, err);
    else throw ConfigError("command: unknown subcommand '" + c + "'");
    art.add(manifest_path(cfg), emit_run_manifest(cfg));
    art.commit();
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  }
}

namespace {

struct MonthOpt {
  std::string text;
  std::optional<MonthKey> parse(const char* field) const {
    if (text.empty()) return std::nullopt;
    auto m = MonthKey::parse(text);
    if (!m) throw ConfigError(std::string(field) + ": expected YYYY-MM, got '" + text + "'");
    return m;
  }
};

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"curafuse: dataset curation, late-fusion classification and trend analysis", "curafuse"};
  app.require_subcommand(1, 1);
  app.set_config("--config", "", "INI file of key = value options; flags on the command line win");
  app.set_version_flag("--version", CURAFUSE_VERSION);

  PipelineConfig cfg;
  std::map<std::string, std::string> paths;
  std::string fractions = "0.6,0.2,0.2";
  MonthOpt trend_from{"2018-01"}, sched_from, sched_to;

  auto path_opt = [&](CLI::App* sub, const std::string& flag, const std::string& role, const std::string& help,
                      bool required = false) {
    auto* o = sub->add_option(flag, paths[sub->get_name() + ":" + role], help);
    if (required) o->required();
  };
  auto seed_opt = [&](CLI::App* sub) { sub->add_option("--seed", cfg.seed, "Root seed for all randomness"); };
  auto manifest_opt = [&](CLI::App* sub) {
    path_opt(sub, "--manifest", "out:manifest", "Manifest path (default: next to the main output)");
  };

  auto* ingest = app.add_subcommand("ingest", "Load JSONL posts, sanitize text, keep multimodal posts");
  path_opt(ingest, "--input", "in:input", "Posts JSONL", true);
  path_opt(ingest, "--out", "out:out", "Output JSONL", true);
  path_opt(ingest, "--report", "out:report", "Counts report JSON");
  manifest_opt(ingest);

  auto* dedupe = app.add_subcommand("dedupe", "Remove exact-id, exact-text and near-image duplicates");
  path_opt(dedupe, "--input", "in:input", "Posts JSONL", true);
  path_opt(dedupe, "--out", "out:out", "Output JSONL", true);
  path_opt(dedupe, "--report", "out:report", "DedupReport JSON");
  dedupe->add_option("--near-threshold", cfg.near_threshold, "Remove images with similarity above this")
      ->capture_default_str();
  manifest_opt(dedupe);

  auto* audit = app.add_subcommand("audit", "Flag posts whose nearest neighbours mostly carry another label");
  path_opt(audit, "--input", "in:input", "Labeled posts JSONL", true);
  path_opt(audit, "--report", "out:report", "FlagReport JSON", true);
  path_opt(audit, "--embeddings", "in:embeddings", "Flat little-endian float32 file, 768 per post");
  path_opt(audit, "--remove", "in:remove", "Ids to remove after review, one per line");
  path_opt(audit, "--out", "out:out", "Dataset after removals (with --remove)");
  audit->add_option("--tables", cfg.audit_index.tables, "Hash tables")->capture_default_str();
  audit->add_option("--bits", cfg.audit_index.bits, "Bits per table")->capture_default_str();
  audit->add_option("--k", cfg.audit_k, "Neighbours per query")->capture_default_str();
  audit->add_option("--min-disagree", cfg.flag_min_disagree, "Disagreeing neighbours needed to flag")
      ->capture_default_str();
  seed_opt(audit);
  manifest_opt(audit);

  auto* bal = app.add_subcommand("balance", "Undersample every class to the minority count");
  path_opt(bal, "--input", "in:input", "Labeled posts JSONL", true);
  path_opt(bal, "--out", "out:out", "Output JSONL", true);
  seed_opt(bal);
  manifest_opt(bal);

  auto* spl = app.add_subcommand("split", "Stratified train/val/test split");
  path_opt(spl, "--input", "in:input", "Labeled posts JSONL", true);
  path_opt(spl, "--out-dir", "out:out_dir", "Directory for train/val/test JSONL and split.csv", true);
  spl->add_option("--fractions", fractions, "train,val,test fractions")->capture_default_str();
  seed_opt(spl);
  manifest_opt(spl);

  auto add_encoder_opts = [&](CLI::App* sub) {
    path_opt(sub, "--text-scores", "in:text_scores", "CSV id,s0,s1,s2 replacing the text encoder");
    path_opt(sub, "--image-scores", "in:image_scores", "CSV id,s0,s1,s2 replacing the image encoder");
  };

  auto* train = app.add_subcommand("train", "Train the late-fusion head");
  path_opt(train, "--train", "in:train", "Training JSONL", true);
  path_opt(train, "--val", "in:val", "Validation JSONL", true);
  path_opt(train, "--out", "out:out", "FusionHead JSON", true);
  add_encoder_opts(train);
  train->add_option("--lr", cfg.train.learning_rate, "Learning rate")->capture_default_str();
  train->add_option("--epochs", cfg.train.max_epochs, "Maximum epochs")->capture_default_str();
  train->add_option("--batch-size", cfg.train.batch_size, "Mini-batch size")->capture_default_str();
  train->add_option("--patience", cfg.train.patience, "Early-stopping patience")->capture_default_str();
  seed_opt(train);
  manifest_opt(train);

  auto* ev = app.add_subcommand("eval", "Evaluate a head on labeled posts");
  path_opt(ev, "--input", "in:input", "Labeled posts JSONL", true);
  path_opt(ev, "--head", "in:head", "FusionHead JSON", true);
  path_opt(ev, "--report", "out:report", "MetricReport JSON", true);
  path_opt(ev, "--roc", "out:roc", "ROC curve CSV");
  path_opt(ev, "--pr", "out:pr", "Precision-recall curve CSV");
  add_encoder_opts(ev);
  manifest_opt(ev);

  auto* cls = app.add_subcommand("classify", "Predict labels for posts");
  path_opt(cls, "--input", "in:input", "Posts JSONL", true);
  path_opt(cls, "--head", "in:head", "FusionHead JSON", true);
  path_opt(cls, "--out", "out:out", "Predictions CSV", true);
  add_encoder_opts(cls);
  manifest_opt(cls);

  auto* tr = app.add_subcommand("trend", "Monthly relative abundance series and regressions");
  path_opt(tr, "--input", "in:input", "Predictions CSV from classify");
  path_opt(tr, "--series-out", "out:series", "Series CSV");
  path_opt(tr, "--fits-out", "out:fits", "Fits CSV");
  tr->add_option("--from", trend_from.text, "First month of the linear fit")->capture_default_str();
  tr->add_option("--degree", cfg.trend_degree, "Polynomial degree of the full-window fit")->capture_default_str();
  tr->add_option("--schedule-from", sched_from.text, "First month of a sampling schedule (YYYY-MM)");
  tr->add_option("--schedule-to", sched_to.text, "Last month of a sampling schedule (YYYY-MM)");
  path_opt(tr, "--schedule-out", "out:schedule", "Sampling schedule CSV");
  seed_opt(tr);
  manifest_opt(tr);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << CURAFUSE_VERSION << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    const CLI::App* sub = app.get_subcommands().front();
    cfg.command = sub->get_name();
    const std::string prefix = cfg.command + ":";
    for (const auto& [key, value] : paths) {
      if (key.rfind(prefix, 0) != 0 || value.empty()) continue;
      const std::string rest = key.substr(prefix.size());
      const std::string role = rest.substr(rest.find(':') + 1);
      (rest.rfind("in:", 0) == 0 ? cfg.inputs : cfg.outputs)[role] = value;
    }
    cfg.fractions = SplitSpec::parse_fractions(fractions, cfg.seed);
    if (auto m = trend_from.parse("from")) cfg.trend_from = *m;
    cfg.schedule_first = sched_from.parse("schedule_from");
    cfg.schedule_last = sched_to.parse("schedule_to");
    if (cfg.schedule_first && !maybe(cfg.outputs, "schedule"))
      throw ConfigError("schedule_out: required with --schedule-from");
    if (cfg.command == "trend" && maybe(cfg.inputs, "input") &&
        (!maybe(cfg.outputs, "series") || !maybe(cfg.outputs, "fits")))
      throw ConfigError("series_out/fits_out: required with --input");
    if (cfg.command == "audit" && maybe(cfg.inputs, "remove") && !maybe(cfg.outputs, "out"))
      throw ConfigError("out: required with --remove");
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  return run(cfg, out, err);
}

}  // namespace curafuse
