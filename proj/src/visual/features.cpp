#include "relmatch/visual/features.hpp"

#include "relmatch/error.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

static_assert(std::endian::native == std::endian::little, "feature files assume a little-endian host");

namespace relmatch::visual {
namespace {

class Writer {
 public:
  void u32(std::uint32_t v) { raw(&v, sizeof v); }
  void f32(double v) {
    const float f = static_cast<float>(v);
    raw(&f, sizeof f);
  }
  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::byte*>(p);
    out.insert(out.end(), b, b + n);
  }
  std::vector<std::byte> out;
};

class Reader {
 public:
  explicit Reader(std::span<const std::byte> bytes) : bytes_(bytes) {}

  std::uint32_t u32(const char* what) {
    std::uint32_t v;
    take(&v, sizeof v, what);
    return v;
  }
  double f32(const char* what) {
    const std::size_t at = pos_;
    float f;
    take(&f, sizeof f, what);
    if (!std::isfinite(f)) throw ParseError(std::string("non-finite value in ") + what, at);
    return static_cast<double>(f);
  }
  void take(void* dst, std::size_t n, const char* what) {
    if (bytes_.size() - pos_ < n) {
      throw ParseError(std::string("truncated payload while reading ") + what, pos_);
    }
    std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }
  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::span<const std::byte> bytes_;
  std::size_t pos_ = 0;
};

Matrix read_matrix(Reader& r, std::uint32_t rows, std::uint32_t cols, const char* what) {
  const std::size_t need = static_cast<std::size_t>(rows) * cols * sizeof(float);
  if (r.remaining() < need) throw ParseError(std::string("truncated payload in ") + what, r.pos());
  Matrix m(rows, cols);
  for (std::uint32_t i = 0; i < rows; ++i)
    for (std::uint32_t j = 0; j < cols; ++j) m(i, j) = r.f32(what);
  return m;
}

void write_matrix(Writer& w, const Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) w.f32(m(i, j));
}

double round_to_float(double v) { return static_cast<double>(static_cast<float>(v)); }

}  // namespace

void validate(const VisualFeatureSet& set) {
  if (set.regions.rows() < 1) throw Error("image " + set.image_id + ": needs at least one region");
  if (!set.regions.allFinite()) throw Error("image " + set.image_id + ": non-finite region feature");
  if (!set.relations.allFinite()) throw Error("image " + set.image_id + ": non-finite relation feature");
  const auto m = static_cast<std::size_t>(set.relations.rows());
  if (set.labels.size() != m || set.confidence.size() != m) {
    throw Error("image " + set.image_id + ": " + std::to_string(m) + " relation rows but " +
                std::to_string(set.labels.size()) + " labels and " + std::to_string(set.confidence.size()) +
                " confidences");
  }
  for (std::size_t i = 1; i < m; ++i) {
    if (set.confidence[i] > set.confidence[i - 1]) {
      throw Error("image " + set.image_id + ": relations not sorted by descending confidence");
    }
  }
}

void keep_top_relations(VisualFeatureSet& set, std::size_t max_relations) {
  const std::size_t m = set.confidence.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return set.confidence[a] > set.confidence[b]; });
  order.resize(std::min(m, max_relations));

  Matrix rel(static_cast<Eigen::Index>(order.size()), set.relations.cols());
  std::vector<RelationLabel> labels;
  std::vector<double> conf;
  for (std::size_t i = 0; i < order.size(); ++i) {
    rel.row(static_cast<Eigen::Index>(i)) = set.relations.row(static_cast<Eigen::Index>(order[i]));
    labels.push_back(set.labels[order[i]]);
    conf.push_back(set.confidence[order[i]]);
  }
  set.relations = std::move(rel);
  set.labels = std::move(labels);
  set.confidence = std::move(conf);
}

std::vector<std::byte> serialize_features(const VisualFeatureSet& set) {
  if (set.labels.size() != static_cast<std::size_t>(set.relations.rows()) ||
      set.confidence.size() != set.labels.size()) {
    throw Error("image " + set.image_id + ": relation rows, labels and confidences disagree in count");
  }
  Writer w;
  w.raw(kFeatureMagic, 4);
  w.u32(kFeatureVersion);
  w.u32(static_cast<std::uint32_t>(set.regions.rows()));
  w.u32(static_cast<std::uint32_t>(set.regions.cols()));
  write_matrix(w, set.regions);
  w.u32(static_cast<std::uint32_t>(set.relations.rows()));
  w.u32(static_cast<std::uint32_t>(set.relations.cols()));
  write_matrix(w, set.relations);
  for (std::size_t i = 0; i < set.labels.size(); ++i) {
    w.u32(set.labels[i].subject);
    w.u32(set.labels[i].predicate);
    w.u32(set.labels[i].object);
    w.f32(set.confidence[i]);
  }
  return std::move(w.out);
}

VisualFeatureSet parse_features(std::span<const std::byte> bytes, std::string image_id, std::size_t max_relations) {
  Reader r(bytes);
  char magic[4];
  r.take(magic, 4, "magic");
  if (std::memcmp(magic, kFeatureMagic, 4) != 0) throw ParseError("bad magic, expected RSGF", 0);
  const std::size_t version_at = r.pos();
  const std::uint32_t version = r.u32("version");
  if (version != kFeatureVersion) {
    throw ParseError("unsupported feature format version " + std::to_string(version), version_at);
  }
  VisualFeatureSet set;
  set.image_id = std::move(image_id);
  const std::size_t k_at = r.pos();
  const std::uint32_t k = r.u32("region count");
  const std::uint32_t dv = r.u32("region dim");
  if (k == 0 || dv == 0) throw ParseError("region block must be non-empty", k_at);
  set.regions = read_matrix(r, k, dv, "region features");
  const std::uint32_t m = r.u32("relation count");
  const std::uint32_t dr = r.u32("relation dim");
  set.relations = read_matrix(r, m, dr, "relation features");
  for (std::uint32_t i = 0; i < m; ++i) {
    RelationLabel l;
    l.subject = r.u32("relation subject");
    l.predicate = r.u32("relation predicate");
    l.object = r.u32("relation object");
    set.labels.push_back(l);
    set.confidence.push_back(r.f32("relation confidence"));
  }
  if (r.remaining() != 0) throw ParseError("trailing bytes after relation records", r.pos());
  keep_top_relations(set, max_relations);
  return set;
}

void save_features(const VisualFeatureSet& set, const std::filesystem::path& path) {
  const auto bytes = serialize_features(set);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write feature file " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

VisualFeatureSet load_features(const std::filesystem::path& path, std::size_t max_relations) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open feature file " + path.string());
  std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto* b = reinterpret_cast<const std::byte*>(raw.data());
  try {
    return parse_features(std::span<const std::byte>(b, raw.size()), path.stem().string(), max_relations);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.offset());
  }
}

std::filesystem::path feature_path(const std::filesystem::path& dir, const std::string& image_id) {
  return dir / (image_id + ".rsgf");
}

std::vector<std::string> load_relation_labels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open relation label file " + path.string());
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    out.push_back(line);
  }
  return out;
}

void save_relation_labels(const std::vector<std::string>& labels, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write relation label file " + path.string());
  for (const auto& l : labels) out << l << '\n';
}

Eigen::VectorXd word_target(std::uint64_t seed, std::int64_t word, Eigen::Index dim, std::string_view space) {
  Rng rng = substream(seed, std::string(space) + ":" + std::to_string(word));
  return gaussian_matrix(rng, dim, 1).col(0);
}

VisualFeatureSet synth_features(std::uint64_t seed, Eigen::Index k, Eigen::Index m, Eigen::Index d_v,
                                Eigen::Index d_r, const std::optional<PlantedAlignment>& planted,
                                std::string image_id) {
  if (k < 1 || m < 0 || d_v < 1 || d_r < 1) throw Error("synth_features: dimensions must be positive");
  Rng rng = substream(seed, "features");
  VisualFeatureSet set;
  set.image_id = std::move(image_id);
  set.regions = gaussian_matrix(rng, k, d_v);
  set.relations = gaussian_matrix(rng, m, d_r);

  if (planted) {
    std::normal_distribution<double> noise(0.0, 1.0);
    auto plant = [&](Matrix& rows, const std::vector<Eigen::VectorXd>& targets, const char* what) {
      if (static_cast<Eigen::Index>(targets.size()) > rows.rows()) {
        throw Error(std::string("synth_features: more planted ") + what + " than rows");
      }
      for (std::size_t i = 0; i < targets.size(); ++i) {
        if (targets[i].size() != rows.cols()) throw Error(std::string("synth_features: planted ") + what + " dim");
        for (Eigen::Index j = 0; j < rows.cols(); ++j) {
          rows(static_cast<Eigen::Index>(i), j) = targets[i](j) + planted->noise * noise(rng);
        }
      }
    };
    plant(set.regions, planted->region_targets, "regions");
    plant(set.relations, planted->relation_targets, "relations");
  }
  set.regions = set.regions.unaryExpr(&round_to_float);
  set.relations = set.relations.unaryExpr(&round_to_float);

  std::uniform_real_distribution<double> conf(0.05, 1.0);
  std::uniform_int_distribution<std::uint32_t> label(0, 49);
  for (Eigen::Index i = 0; i < m; ++i) {
    set.labels.push_back({label(rng), label(rng), label(rng)});
    set.confidence.push_back(round_to_float(conf(rng)));
  }
  std::sort(set.confidence.begin(), set.confidence.end(), std::greater<>());
  return set;
}

}  // namespace relmatch::visual
