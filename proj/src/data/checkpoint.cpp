#include "relmatch/data/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

static_assert(std::endian::native == std::endian::little, "checkpoints assume a little-endian host");

namespace relmatch::data {
namespace {

constexpr char kMagic[4] = {'R', 'S', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

}  // namespace

const Eigen::MatrixXd& Checkpoint::array(const std::string& name) const {
  for (const auto& [n, m] : arrays)
    if (n == name) return m;
  throw Error("checkpoint has no array named " + name);
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  nlohmann::json header;
  header["meta"] = ckpt.meta;
  header["arrays"] = nlohmann::json::array();
  for (const auto& [name, m] : ckpt.arrays) {
    header["arrays"].push_back({{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}});
  }
  const std::string text = header.dump();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write checkpoint " + path.string());
  const std::uint64_t len = text.size();
  out.write(kMagic, 4);
  out.write(reinterpret_cast<const char*>(&kVersion), sizeof kVersion);
  out.write(reinterpret_cast<const char*>(&len), sizeof len);
  out.write(text.data(), static_cast<std::streamsize>(len));
  for (const auto& [name, m] : ckpt.arrays) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        const double v = m(i, j);
        out.write(reinterpret_cast<const char*>(&v), sizeof v);
      }
  }
  if (!out) throw Error("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint " + path.string());
  std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::size_t pos = 0;
  auto take = [&](void* dst, std::size_t n, const char* what) {
    if (raw.size() - pos < n) throw ParseError(path.string() + ": truncated checkpoint reading " + what, pos);
    std::memcpy(dst, raw.data() + pos, n);
    pos += n;
  };
  char magic[4];
  take(magic, 4, "magic");
  if (std::memcmp(magic, kMagic, 4) != 0) throw ParseError(path.string() + ": bad checkpoint magic", 0);
  std::uint32_t version;
  take(&version, sizeof version, "version");
  if (version != kVersion) throw ParseError(path.string() + ": unsupported checkpoint version", 4);
  std::uint64_t len;
  take(&len, sizeof len, "header length");
  if (raw.size() - pos < len) throw ParseError(path.string() + ": truncated checkpoint header", pos);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(raw.begin() + static_cast<std::ptrdiff_t>(pos),
                                   raw.begin() + static_cast<std::ptrdiff_t>(pos + len));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": bad checkpoint header: " + e.what(), pos);
  }
  pos += len;

  Checkpoint ckpt;
  ckpt.meta = header.at("meta");
  for (const auto& a : header.at("arrays")) {
    const auto rows = a.at("rows").get<Eigen::Index>();
    const auto cols = a.at("cols").get<Eigen::Index>();
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) {
        double v;
        take(&v, sizeof v, "array payload");
        m(i, j) = v;
      }
    ckpt.arrays.emplace_back(a.at("name").get<std::string>(), std::move(m));
  }
  if (pos != raw.size()) throw ParseError(path.string() + ": trailing bytes in checkpoint", pos);
  return ckpt;
}

}  // namespace relmatch::data
