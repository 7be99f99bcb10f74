#include "relmatch/app/commands.hpp"
#include "relmatch/error.hpp"

#include <gtest/gtest.h>

#include <fstream>

using namespace relmatch;
namespace fs = std::filesystem;

namespace {

fs::path fresh(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / name;
  fs::remove_all(p);
  return p;
}

app::CommandOptions small(const fs::path& root) {
  app::CommandOptions o;
  RunConfig& c = o.config;
  c.hidden = 8;
  c.region_dim = 8;
  c.relation_dim = 8;
  c.k = 3;
  c.m = 2;
  c.epochs1 = 1;
  c.epochs2 = 1;
  c.batch_size = 4;
  c.synth_pairs = 6;
  o.out = root / "data";
  app::synth_data(o);
  o.features_dir = root / "data" / "features";
  o.captions = root / "data" / "captions.jsonl";
  o.out = root;
  return o;
}

}  // namespace

TEST(Commands, SynthDataWritesCorpusAndFeatures) {
  const fs::path root = fresh("relmatch_app_synth");
  const auto o = small(root);
  EXPECT_TRUE(fs::exists(root / "data" / "captions.jsonl"));
  EXPECT_TRUE(fs::exists(root / "data" / "relation_labels.txt"));
  const app::Dataset d = app::load_dataset(o.captions, o.features_dir, 2);
  EXPECT_EQ(d.corpus.size(), 6u);
  EXPECT_EQ(d.features[0].regions.rows(), 3);
  EXPECT_EQ(d.features[0].relations.rows(), 2);
  fs::remove_all(root);
}

TEST(Commands, MissingFeatureFileNamesTheImage) {
  const fs::path root = fresh("relmatch_app_missing");
  const auto o = small(root);
  fs::remove(o.features_dir / "synth3.rsgf");
  try {
    app::load_dataset(o.captions, o.features_dir, 2);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("synth3"), std::string::npos);
  }
  fs::remove_all(root);
}

TEST(Commands, MissingRequiredOptionsAreErrors) {
  app::CommandOptions o;
  EXPECT_THROW(app::train_matcher(o), ConfigError);
  o.out = fresh("relmatch_app_noopt");
  EXPECT_THROW(app::eval_retrieval(o), ConfigError);
  fs::remove_all(o.out);
}

TEST(Commands, TrainThenEvaluateWritesArtifacts) {
  const fs::path root = fresh("relmatch_app_train");
  auto o = small(root);
  app::train_matcher(o);
  o.checkpoint = root / "matcher.ckpt";
  const auto r = app::eval_retrieval(o);
  EXPECT_EQ(r.folds.size(), 1u);
  std::ifstream in(root / "retrieval.json");
  const auto j = nlohmann::json::parse(in);
  EXPECT_EQ(j["command"], "eval-retrieval");
  EXPECT_EQ(j["images"], 6);
  EXPECT_DOUBLE_EQ(j["retrieval"]["mean"]["image_to_text"]["r1"].get<double>(), r.image_to_text.r1);
  fs::remove_all(root);
}

TEST(Commands, CheckpointVocabularyIsUsedForEvaluation) {
  const fs::path root = fresh("relmatch_app_vocab");
  auto o = small(root);
  app::train_matcher(o);
  o.checkpoint = root / "matcher.ckpt";
  // Unseen words map to <unk> rather than failing.
  std::ofstream(o.captions) << R"({"image_id":"synth0","captions":["a zebra sitting on a unicorn"]})" << '\n';
  EXPECT_NO_THROW(app::eval_retrieval(o));
  fs::remove_all(root);
}
