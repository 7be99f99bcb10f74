#include "relmatch/data/synth.hpp"

#include "relmatch/error.hpp"
#include "relmatch/rng.hpp"

#include <set>

namespace relmatch::data {

const std::vector<std::string>& synth_predicates() {
  static const std::vector<std::string> preds = {"sitting on", "walking on", "chasing",      "biting",
                                                 "leaning on", "jumping on", "hanging from", "flying over"};
  return preds;
}

SynthCorpus synth_corpus(const SynthConfig& config) {
  if (config.pairs == 0) throw Error("synth_corpus: need at least one pair");
  if (config.captions_per_image == 0) throw Error("synth_corpus: need at least one caption per image");
  if (config.regions < 2) throw Error("synth_corpus: need at least two regions per image");

  const auto& preds = synth_predicates();
  const std::int64_t objects = std::max<std::int64_t>(8, static_cast<std::int64_t>(config.pairs));
  const std::int64_t pred_base = 1'000'000;
  Rng rng = substream(config.seed, "synth-corpus");
  std::uniform_int_distribution<std::int64_t> pick_obj(0, objects - 1);
  std::uniform_int_distribution<std::size_t> pick_pred(0, preds.size() - 1);

  SynthCorpus out;
  std::set<std::pair<std::int64_t, std::int64_t>> used;
  for (std::size_t i = 0; i < config.pairs; ++i) {
    std::int64_t s = 0, o = 0;
    do {
      s = pick_obj(rng);
      o = pick_obj(rng);
    } while (s == o || used.count({s, o}) > 0);
    used.insert({s, o});
    const std::size_t p = pick_pred(rng);

    const std::string id = "synth" + std::to_string(i);
    const std::string subj = "obj" + std::to_string(s), obj = "obj" + std::to_string(o);
    ImageCaptions rec{id, {}};
    const std::string templates[] = {"a " + subj + " " + preds[p] + " a " + obj,
                                     "the " + subj + " is " + preds[p] + " the " + obj,
                                     subj + " " + preds[p] + " " + obj,
                                     "there is a " + subj + " " + preds[p] + " a " + obj};
    for (std::size_t c = 0; c < config.captions_per_image; ++c) rec.captions.push_back(templates[c % 4]);
    out.corpus.push_back(std::move(rec));

    visual::PlantedAlignment plant;
    plant.noise = config.noise;
    plant.region_targets = {visual::word_target(config.seed, s, config.region_dim, "region"),
                            visual::word_target(config.seed, o, config.region_dim, "region")};
    if (config.relations > 0) {
      plant.relation_targets = {
          visual::word_target(config.seed, pred_base + static_cast<std::int64_t>(p), config.relation_dim, "relation")};
    }
    const std::uint64_t image_seed = substream(config.seed, id)();
    out.features.push_back(visual::synth_features(image_seed, config.regions, config.relations, config.region_dim,
                                                  config.relation_dim, plant, id));
  }
  return out;
}

}  // namespace relmatch::data
