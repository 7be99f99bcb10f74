#include "relmatch/match/model_io.hpp"

namespace relmatch::match {

nlohmann::json hyper_to_json(const MatcherHyper& hyper) {
  return {{"lambda_region", hyper.lambda_region}, {"lambda_relation", hyper.lambda_relation},
          {"margin", hyper.margin},               {"epsilon", hyper.epsilon},
          {"max_len", hyper.max_len}};
}

MatcherHyper hyper_from_json(const nlohmann::json& j) {
  MatcherHyper h;
  h.lambda_region = j.at("lambda_region").get<double>();
  h.lambda_relation = j.at("lambda_relation").get<double>();
  h.margin = j.at("margin").get<double>();
  h.epsilon = j.at("epsilon").get<double>();
  h.max_len = j.at("max_len").get<Index>();
  return h;
}

void save_matcher(const MatcherModel& model, const std::filesystem::path& path) {
  data::Checkpoint ckpt;
  ckpt.meta = model.meta;
  ckpt.meta["kind"] = "matcher";
  ckpt.meta["hyper"] = hyper_to_json(model.params.hyper);
  nlohmann::json tokens = nlohmann::json::array();
  for (std::size_t i = 0; i < model.vocabulary.size(); ++i) {
    tokens.push_back(model.vocabulary.token(static_cast<text::TokenId>(i)));
  }
  ckpt.meta["vocabulary"] = tokens;
  data::store_weights(ckpt, model.params.weights, "");
  data::save_checkpoint(ckpt, path);
}

MatcherModel load_matcher(const std::filesystem::path& path) {
  const data::Checkpoint ckpt = data::load_checkpoint(path);
  if (ckpt.meta.value("kind", "") != "matcher") throw Error(path.string() + " is not a matcher checkpoint");
  MatcherModel model;
  model.meta = ckpt.meta;
  model.params.hyper = hyper_from_json(ckpt.meta.at("hyper"));
  data::restore_weights(ckpt, model.params.weights, "");
  for (const auto& t : ckpt.meta.at("vocabulary")) {
    const auto tok = t.get<std::string>();
    if (!model.vocabulary.contains(tok)) model.vocabulary.add(tok);
  }
  if (static_cast<Index>(model.vocabulary.size()) != model.params.weights.text.embedding.rows()) {
    throw Error(path.string() + ": vocabulary size does not match the embedding table");
  }
  return model;
}

}  // namespace relmatch::match
