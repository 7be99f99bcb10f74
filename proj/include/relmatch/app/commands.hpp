#pragma once

#include "relmatch/config.hpp"
#include "relmatch/data/corpus.hpp"
#include "relmatch/diff/grad_check.hpp"
#include "relmatch/metrics/retrieval.hpp"
#include "relmatch/visual/features.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace relmatch::app {

namespace fs = std::filesystem;

/// Inputs shared by every subcommand. Empty paths mean "not given".
struct CommandOptions {
  RunConfig config;
  fs::path out;
  fs::path features_dir;
  fs::path captions;
  fs::path val_captions;
  fs::path checkpoint;
  fs::path predicates;
  std::ostream* log = nullptr;  // human-readable progress and tables
};

/// Caption corpus plus the feature set of every image, in corpus order.
struct Dataset {
  std::vector<data::ImageCaptions> corpus;
  std::vector<visual::VisualFeatureSet> features;
};

/// Missing feature files are an error naming the image id.
Dataset load_dataset(const fs::path& captions, const fs::path& features_dir, std::size_t max_relations);

/// {version, command, seed, config} block embedded in every artifact.
nlohmann::ordered_json artifact_header(const std::string& command, const RunConfig& config);

/// Writes `j` with two-space indentation and a trailing newline.
void write_json(const nlohmann::ordered_json& j, const fs::path& path);

/// Writes features/<id>.rsgf, captions.jsonl, relation_labels.txt.
void synth_data(const CommandOptions& o);

/// Writes matcher.ckpt and train_matcher.json.
void train_matcher(const CommandOptions& o);

/// Writes retrieval.json.
metrics::FoldedRetrieval eval_retrieval(const CommandOptions& o);

/// Writes captioner.ckpt and train_captioner.json.
void train_captioner(const CommandOptions& o);

/// Writes generated_captions.jsonl, plus caption_metrics.json when
/// reference captions are given.
void caption(const CommandOptions& o);

/// Writes captioner_scst.ckpt and scst.json.
void scst_finetune(const CommandOptions& o);

/// Writes vrr_split.jsonl and vrr_summary.json.
void build_vrr_split(const CommandOptions& o);

struct GradcheckResult {
  diff::GradCheckReport matcher;
  diff::GradCheckReport captioner;
  bool passed() const { return matcher.passed && captioner.passed; }
};

/// Finite-difference check of the full matcher loss (h=8, k=3, m=2, batch
/// of 2) and of the captioner cross-entropy on toy dims. Writes
/// gradcheck.json when an output directory is given.
GradcheckResult gradcheck(const CommandOptions& o);

/// Trains one matcher per temperature in sweep_lambdas (both heads share
/// it) and scores each on the validation captions. Writes sweep.json.
void sweep_temperature(const CommandOptions& o);

}  // namespace relmatch::app
