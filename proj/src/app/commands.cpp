#include "relmatch/app/commands.hpp"

#include "relmatch/caption/model_io.hpp"
#include "relmatch/caption/training.hpp"
#include "relmatch/data/synth.hpp"
#include "relmatch/diff/weights.hpp"
#include "relmatch/error.hpp"
#include "relmatch/match/model_io.hpp"
#include "relmatch/match/trainer.hpp"
#include "relmatch/metrics/cider.hpp"
#include "relmatch/text/tokenize.hpp"
#include "relmatch/vrr/split.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>

namespace relmatch::app {
namespace {

std::ostream& log(const CommandOptions& o) {
  static std::ofstream null;
  return o.log != nullptr ? *o.log : null;
}

void require(const fs::path& p, const char* flag) {
  if (p.empty()) throw ConfigError(std::string("missing required option ") + flag);
}

fs::path prepare_out(const CommandOptions& o) {
  require(o.out, "--out");
  fs::create_directories(o.out);
  return o.out;
}

std::size_t max_relations(const RunConfig& c) { return static_cast<std::size_t>(c.m); }

match::MatcherHyper hyper_of(const RunConfig& c) {
  match::MatcherHyper h;
  h.lambda_region = c.lambda_region;
  h.lambda_relation = c.lambda_relation;
  h.margin = c.margin;
  h.epsilon = c.epsilon;
  h.max_len = c.max_len;
  return h;
}

std::vector<std::vector<std::string>> tokenized_captions(const std::vector<data::ImageCaptions>& corpus) {
  std::vector<std::vector<std::string>> out;
  for (const auto& rec : corpus)
    for (const auto& c : rec.captions) out.push_back(text::tokenize(c));
  return out;
}

std::vector<match::EncodedPair> encode_pairs(const std::vector<data::ImageCaptions>& corpus,
                                             const text::Vocabulary& vocab) {
  std::vector<match::EncodedPair> out;
  for (const auto& p : data::flatten(corpus)) out.push_back({p.image_index, vocab.encode(text::tokenize(p.caption, vocab))});
  return out;
}

nlohmann::ordered_json curve(const std::vector<double>& v) {
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (double x : v) j.push_back(x);
  return j;
}

match::MatcherModel fit_matcher(const RunConfig& c, const Dataset& data, std::ostream& out) {
  match::MatcherModel model;
  model.vocabulary = text::Vocabulary::build(tokenized_captions(data.corpus), static_cast<std::size_t>(c.min_count));
  Rng rng = substream(c.seed, "init");
  const match::MatcherDims dims{static_cast<Eigen::Index>(model.vocabulary.size()), c.word_dim, c.hidden, c.region_dim,
                                c.relation_dim};
  model.params = match::init_matcher(dims, hyper_of(c), rng);
  match::MatcherTrainConfig tc;
  tc.schedule = {c.lr1, static_cast<int>(c.epochs1), c.lr2, static_cast<int>(c.epochs2)};
  tc.batch_size = static_cast<std::size_t>(c.batch_size);
  tc.seed = c.seed;
  tc.on_epoch = [&](int e, double loss) { out << "epoch " << e + 1 << "  loss " << loss << '\n'; };
  const auto pairs = encode_pairs(data.corpus, model.vocabulary);
  auto result = match::train_matcher(model.params, data.features, pairs, tc);
  model.params = std::move(result.params);
  model.meta["epoch_losses"] = result.epoch_losses;
  model.meta["final_step_loss"] = result.step_losses.back();
  return model;
}

}  // namespace

Dataset load_dataset(const fs::path& captions, const fs::path& features_dir, std::size_t max_rel) {
  require(captions, "--captions");
  require(features_dir, "--features-dir");
  Dataset d;
  d.corpus = data::load_caption_corpus(captions);
  if (d.corpus.empty()) throw Error("caption corpus " + captions.string() + " is empty");
  for (const auto& rec : d.corpus) {
    const fs::path p = visual::feature_path(features_dir, rec.image_id);
    if (!fs::exists(p)) throw Error("missing features for image " + rec.image_id + " (" + p.string() + ")");
    d.features.push_back(visual::load_features(p, max_rel));
  }
  return d;
}

nlohmann::ordered_json artifact_header(const std::string& command, const RunConfig& config) {
  nlohmann::ordered_json j;
  j["version"] = kVersion;
  j["command"] = command;
  j["seed"] = config.seed;
  j["config"] = to_json(config);
  return j;
}

void write_json(const nlohmann::ordered_json& j, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

void synth_data(const CommandOptions& o) {
  const fs::path out = prepare_out(o);
  const RunConfig& c = o.config;
  data::SynthConfig sc;
  sc.pairs = static_cast<std::size_t>(c.synth_pairs);
  sc.captions_per_image = static_cast<std::size_t>(c.synth_captions_per_image);
  sc.regions = c.k;
  sc.relations = c.m;
  sc.region_dim = c.region_dim;
  sc.relation_dim = c.relation_dim;
  sc.noise = c.synth_noise;
  sc.seed = c.seed;
  const data::SynthCorpus syn = data::synth_corpus(sc);
  fs::create_directories(out / "features");
  for (const auto& f : syn.features) visual::save_features(f, visual::feature_path(out / "features", f.image_id));
  data::save_caption_corpus(syn.corpus, out / "captions.jsonl");
  std::vector<std::string> labels;
  for (int i = 0; i < 50; ++i) labels.push_back("label" + std::to_string(i));
  visual::save_relation_labels(labels, out / "relation_labels.txt");
  auto j = artifact_header("synth-data", c);
  j["images"] = syn.corpus.size();
  write_json(j, out / "synth.json");
  log(o) << "wrote " << syn.corpus.size() << " images to " << out.string() << '\n';
}

void train_matcher(const CommandOptions& o) {
  const fs::path out = prepare_out(o);
  const Dataset data = load_dataset(o.captions, o.features_dir, max_relations(o.config));
  match::MatcherModel model = fit_matcher(o.config, data, log(o));
  auto header = artifact_header("train-matcher", o.config);
  auto report = header;
  report["epoch_losses"] = model.meta["epoch_losses"];
  report["final_step_loss"] = model.meta["final_step_loss"];
  report["pairs"] = data::flatten(data.corpus).size();
  report["vocabulary_size"] = model.vocabulary.size();
  model.meta = nlohmann::json::parse(header.dump());
  match::save_matcher(model, out / "matcher.ckpt");
  write_json(report, out / "train_matcher.json");
}

metrics::FoldedRetrieval eval_retrieval(const CommandOptions& o) {
  const fs::path out = prepare_out(o);
  require(o.checkpoint, "--checkpoint");
  const match::MatcherModel model = match::load_matcher(o.checkpoint);
  const Dataset data = load_dataset(o.captions, o.features_dir, max_relations(o.config));
  const auto pairs = encode_pairs(data.corpus, model.vocabulary);
  const auto result = metrics::eval_retrieval(model.params, data.features, pairs,
                                              static_cast<std::size_t>(o.config.folds));
  auto j = artifact_header("eval-retrieval", o.config);
  j["images"] = data.corpus.size();
  j["captions"] = pairs.size();
  j["retrieval"] = metrics::to_json(result);
  write_json(j, out / "retrieval.json");
  log(o) << metrics::format_table(result);
  return result;
}

void train_captioner(const CommandOptions& o) {
  const fs::path out = prepare_out(o);
  const RunConfig& c = o.config;
  const Dataset data = load_dataset(o.captions, o.features_dir, max_relations(c));
  caption::CaptionerModel model;
  model.vocabulary = text::Vocabulary::build(tokenized_captions(data.corpus), static_cast<std::size_t>(c.min_count));
  Rng rng = substream(c.seed, "init");
  const caption::CaptionerDims dims{static_cast<Eigen::Index>(model.vocabulary.size()), c.cap_word_dim, c.cap_hidden,
                                    c.cap_attention_dim, c.cap_feature_dim, c.region_dim, c.relation_dim};
  model.params = caption::init_captioner(dims, rng);
  std::vector<caption::CaptionExample> examples;
  for (const auto& p : data::flatten(data.corpus)) {
    examples.push_back({p.image_index, caption::with_markers(model.vocabulary.encode(text::tokenize(p.caption, model.vocabulary)))});
  }
  caption::CaptionTrainConfig tc;
  tc.learning_rate = c.cap_lr;
  tc.epochs = static_cast<int>(c.cap_epochs);
  tc.batch_size = static_cast<std::size_t>(c.cap_batch_size);
  tc.seed = c.seed;
  tc.on_epoch = [&](int e, double loss) { log(o) << "epoch " << e + 1 << "  xe " << loss << '\n'; };
  const auto result = caption::train_captioner(model.params, data.features, examples, tc);
  model.params = result.params;
  auto header = artifact_header("train-captioner", c);
  model.meta = nlohmann::json::parse(header.dump());
  caption::save_captioner(model, out / "captioner.ckpt");
  header["epoch_losses"] = curve(result.epoch_losses);
  header["final_step_loss"] = result.step_losses.empty() ? 0.0 : result.step_losses.back();
  write_json(header, out / "train_captioner.json");
}

void caption(const CommandOptions& o) {
  const fs::path out = prepare_out(o);
  require(o.checkpoint, "--checkpoint");
  require(o.features_dir, "--features-dir");
  const RunConfig& c = o.config;
  const caption::CaptionerModel model = caption::load_captioner(o.checkpoint);
  std::vector<data::ImageCaptions> corpus;
  std::vector<visual::VisualFeatureSet> features;
  if (!o.captions.empty()) {
    const Dataset d = load_dataset(o.captions, o.features_dir, max_relations(c));
    corpus = d.corpus;
    features = d.features;
  } else {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(o.features_dir))
      if (e.path().extension() == ".rsgf") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) features.push_back(visual::load_features(f, max_relations(c)));
  }
  std::ofstream lines(out / "generated_captions.jsonl");
  if (!lines) throw Error("cannot write generated captions");
  std::vector<metrics::Tokens> candidates;
  for (const auto& f : features) {
    const caption::Decoded d = c.beam == 1 ? caption::decode_greedy(model.params, f, c.cap_max_len)
                                           : caption::decode_beam(model.params, f, c.beam, c.cap_max_len);
    nlohmann::ordered_json j;
    j["image_id"] = f.image_id;
    j["caption"] = caption::caption_text(model.vocabulary, d.tokens);
    j["log_prob"] = d.log_prob;
    lines << j.dump() << '\n';
    candidates.push_back(caption::caption_words(model.vocabulary, d.tokens));
  }
  log(o) << "captioned " << features.size() << " images\n";
  if (!corpus.empty()) {
    std::vector<std::vector<metrics::Tokens>> refs;
    for (const auto& rec : corpus) {
      refs.emplace_back();
      for (const auto& cap : rec.captions) refs.back().push_back(text::tokenize(cap));
    }
    const double score = metrics::corpus_cider_d(candidates, refs);
    auto j = artifact_header("caption", c);
    j["images"] = features.size();
    j["cider_d"] = score;
    write_json(j, out / "caption_metrics.json");
    log(o) << "CIDEr-D " << score << '\n';
  }
}

void scst_finetune(const CommandOptions& o) {
  const fs::path out = prepare_out(o);
  require(o.checkpoint, "--checkpoint");
  const RunConfig& c = o.config;
  caption::CaptionerModel model = caption::load_captioner(o.checkpoint);
  const Dataset data = load_dataset(o.captions, o.features_dir, max_relations(c));
  std::vector<std::vector<metrics::Tokens>> refs;
  for (const auto& rec : data.corpus) {
    refs.emplace_back();
    for (const auto& cap : rec.captions) refs.back().push_back(text::tokenize(cap));
  }
  caption::ScstConfig sc;
  sc.learning_rate = c.scst_lr;
  sc.epochs = static_cast<int>(c.scst_epochs);
  sc.batch_size = static_cast<std::size_t>(c.cap_batch_size);
  sc.max_len = c.cap_max_len;
  sc.seed = c.seed;
  sc.on_epoch = [&](int e, const caption::ScstStats& s) {
    log(o) << "epoch " << e + 1 << "  sample CIDEr-D " << s.mean_sample_reward << "  greedy CIDEr-D "
           << s.mean_greedy_reward << '\n';
  };
  const auto result = caption::scst_finetune(model.params, data.features, refs, model.vocabulary, sc);
  model.params = result.params;
  auto header = artifact_header("scst-finetune", c);
  model.meta = nlohmann::json::parse(header.dump());
  caption::save_captioner(model, out / "captioner_scst.ckpt");
  nlohmann::ordered_json steps = nlohmann::ordered_json::array();
  for (const auto& s : result.step_stats) {
    steps.push_back({{"mean_sample_reward", s.mean_sample_reward}, {"mean_greedy_reward", s.mean_greedy_reward}});
  }
  header["steps"] = steps;
  write_json(header, out / "scst.json");
}

void build_vrr_split(const CommandOptions& o) {
  const fs::path out = prepare_out(o);
  require(o.captions, "--captions");
  const auto corpus = data::load_caption_corpus(o.captions);
  const vrr::PredicateList list = o.predicates.empty() ? vrr::builtin_predicates() : vrr::load_predicates(o.predicates);
  const vrr::SplitResult r = vrr::build_split(corpus, list, o.config.seed);
  vrr::save_split(r.split, out / "vrr_split.jsonl");
  auto j = artifact_header("build-vrr-split", o.config);
  j["predicates"] = list.size();
  j["predicate_source"] = list.provenance;
  j["summary"] = vrr::to_json(r.summary);
  write_json(j, out / "vrr_summary.json");
  log(o) << "images with a relation caption: " << r.summary.images_selected << " of " << r.summary.images_total
         << " (" << list.size() << " predicates)\n";
}

GradcheckResult gradcheck(const CommandOptions& o) {
  const std::uint64_t seed = o.config.seed;
  Rng rng = substream(seed, "init");
  GradcheckResult result;

  {
    match::MatcherHyper hyper;
    hyper.lambda_region = 5.0;
    hyper.lambda_relation = 7.0;
    match::MatcherParams p = match::init_matcher({10, 300, 8, 8, 8}, hyper, rng);
    std::uniform_real_distribution<double> b(-0.5, 0.5);
    p.weights.fusion_bias(0, 0) = b(rng);
    p.weights.importance_bias(0, 0) = b(rng);
    for (auto* g : {&p.weights.text.forward, &p.weights.text.backward}) {
      g->input_bias = uniform_matrix(rng, 1, 24, -0.1, 0.1);
      g->hidden_bias = uniform_matrix(rng, 1, 24, -0.1, 0.1);
    }
    p.weights.visual.region_bias = uniform_matrix(rng, 1, 8, -0.1, 0.1);
    p.weights.visual.relation_bias = uniform_matrix(rng, 1, 8, -0.1, 0.1);
    const std::vector<visual::VisualFeatureSet> feats = {visual::synth_features(substream(seed, "img0")(), 3, 2, 8, 8),
                                                         visual::synth_features(substream(seed, "img1")(), 3, 2, 8, 8)};
    std::uniform_int_distribution<text::TokenId> tok(4, 9);
    std::vector<std::vector<text::TokenId>> caps = {{tok(rng), tok(rng), tok(rng)}, {tok(rng), tok(rng), tok(rng), tok(rng)}};
    const std::vector<match::TrainingPair> batch = {{&feats[0], caps[0]}, {&feats[1], caps[1]}};
    std::function<diff::Var(diff::Tape&, const match::MatcherWeights<diff::Var>&)> loss =
        [&](diff::Tape&, const match::MatcherWeights<diff::Var>& w) { return match::matcher_loss(w, hyper, batch); };
    result.matcher = diff::grad_check(loss, p.weights);
  }
  {
    const caption::CaptionerDims dims{10, 8, 8, 8, 8, 8, 8};
    caption::CaptionerParams p = caption::init_captioner(dims, rng);
    p.output_bias = uniform_matrix(rng, 1, 10, -0.5, 0.5);
    const visual::VisualFeatureSet f = visual::synth_features(substream(seed, "img2")(), 3, 2, 8, 8);
    const std::vector<text::TokenId> cap = caption::with_markers({4, 7, 5, 9});
    std::function<diff::Var(diff::Tape&, const caption::CaptionerWeights<diff::Var>&)> loss =
        [&](diff::Tape&, const caption::CaptionerWeights<diff::Var>& w) {
          return caption::xe_loss(w, caption::prepare_image(w, f), cap);
        };
    result.captioner = diff::grad_check(loss, p);
  }

  auto line = [&](const char* what, const diff::GradCheckReport& r) {
    log(o) << what << ": max relative error " << r.max_rel_error << " over " << r.checked << " entries (worst "
           << r.worst_entry << ") " << (r.passed ? "PASS" : "FAIL") << '\n';
  };
  line("matcher loss", result.matcher);
  line("captioner xe_loss", result.captioner);
  if (!o.out.empty()) {
    fs::create_directories(o.out);
    auto j = artifact_header("gradcheck", o.config);
    auto rep = [](const diff::GradCheckReport& r) {
      return nlohmann::ordered_json{{"max_rel_error", r.max_rel_error},
                                    {"max_abs_error", r.max_abs_error},
                                    {"worst_entry", r.worst_entry},
                                    {"checked", r.checked},
                                    {"passed", r.passed}};
    };
    j["tolerance"] = diff::GradCheckOptions{}.tolerance;
    j["matcher"] = rep(result.matcher);
    j["captioner"] = rep(result.captioner);
    write_json(j, o.out / "gradcheck.json");
  }
  return result;
}

void sweep_temperature(const CommandOptions& o) {
  const fs::path out = prepare_out(o);
  const Dataset train = load_dataset(o.captions, o.features_dir, max_relations(o.config));
  const Dataset val = o.val_captions.empty() ? train
                                             : load_dataset(o.val_captions, o.features_dir, max_relations(o.config));
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  double best_rsum = -1.0, best_lambda = 0.0;
  log(o) << "lambda     rsum\n";
  for (double lambda : o.config.sweep_lambdas) {
    RunConfig c = o.config;
    c.lambda_region = lambda;
    c.lambda_relation = lambda;
    std::ostringstream sink;
    const match::MatcherModel model = fit_matcher(c, train, sink);
    const auto r = metrics::eval_retrieval(model.params, val.features, encode_pairs(val.corpus, model.vocabulary),
                                           static_cast<std::size_t>(c.folds));
    const double rsum = 100.0 * (r.image_to_text.r1 + r.image_to_text.r5 + r.image_to_text.r10 +
                                 r.text_to_image.r1 + r.text_to_image.r5 + r.text_to_image.r10);
    rows.push_back({{"lambda", lambda}, {"rsum", rsum}, {"retrieval", metrics::to_json(r)}});
    if (rsum > best_rsum) {
      best_rsum = rsum;
      best_lambda = lambda;
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "%-8g %7.1f\n", lambda, rsum);
    log(o) << buf;
  }
  auto j = artifact_header("sweep-temperature", o.config);
  j["sweep"] = rows;
  j["best_lambda"] = best_lambda;
  write_json(j, out / "sweep.json");
}

}  // namespace relmatch::app
