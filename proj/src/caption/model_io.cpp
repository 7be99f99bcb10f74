#include "relmatch/caption/model_io.hpp"

#include "relmatch/error.hpp"

namespace relmatch::caption {

void save_captioner(const CaptionerModel& model, const std::filesystem::path& path) {
  data::Checkpoint ckpt;
  ckpt.meta = model.meta;
  ckpt.meta["kind"] = "captioner";
  nlohmann::json tokens = nlohmann::json::array();
  for (std::size_t i = 0; i < model.vocabulary.size(); ++i) {
    tokens.push_back(model.vocabulary.token(static_cast<TokenId>(i)));
  }
  ckpt.meta["vocabulary"] = tokens;
  data::store_weights(ckpt, model.params, "");
  data::save_checkpoint(ckpt, path);
}

CaptionerModel load_captioner(const std::filesystem::path& path) {
  const data::Checkpoint ckpt = data::load_checkpoint(path);
  if (ckpt.meta.value("kind", "") != "captioner") throw Error(path.string() + " is not a captioner checkpoint");
  CaptionerModel model;
  model.meta = ckpt.meta;
  data::restore_weights(ckpt, model.params, "");
  for (const auto& t : ckpt.meta.at("vocabulary")) {
    const auto tok = t.get<std::string>();
    if (!model.vocabulary.contains(tok)) model.vocabulary.add(tok);
  }
  if (static_cast<Index>(model.vocabulary.size()) != model.params.embedding.rows()) {
    throw Error(path.string() + ": vocabulary size does not match the embedding table");
  }
  return model;
}

}  // namespace relmatch::caption
