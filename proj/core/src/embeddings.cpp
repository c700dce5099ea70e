#include "dive/embeddings.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "dive/error.hpp"

namespace dive {
namespace {

constexpr char kMagic[8] = {'D', 'I', 'V', 'E', 'E', 'M', 'B', '1'};

std::filesystem::path sidecar_path(const std::filesystem::path& file) {
  std::filesystem::path p = file;
  p += ".ids.jsonl";
  return p;
}

std::uint32_t read_u32_le(std::istream& in, const char* what) {
  unsigned char buf[4];
  in.read(reinterpret_cast<char*>(buf), 4);
  if (!in) {
    throw DataError(std::string("truncated payload reading ") + what);
  }
  return std::uint32_t(buf[0]) | (std::uint32_t(buf[1]) << 8) |
         (std::uint32_t(buf[2]) << 16) | (std::uint32_t(buf[3]) << 24);
}

void write_u32_le(std::ostream& out, std::uint32_t v) {
  const unsigned char buf[4] = {
      static_cast<unsigned char>(v & 0xFF),
      static_cast<unsigned char>((v >> 8) & 0xFF),
      static_cast<unsigned char>((v >> 16) & 0xFF),
      static_cast<unsigned char>((v >> 24) & 0xFF),
  };
  out.write(reinterpret_cast<const char*>(buf), 4);
}

}  // namespace

void EmbeddingMatrix::add_row(std::string image_id,
                              std::span<const float> values) {
  if (values.size() != dim_) {
    throw DataError("embedding row for '" + image_id + "' has " +
                    std::to_string(values.size()) + " values, expected " +
                    std::to_string(dim_));
  }
  if (index_.contains(image_id)) {
    throw DataError("duplicate embedding row id '" + image_id + "'");
  }
  double norm_sq = 0.0;
  for (const float v : values) {
    if (!std::isfinite(v)) {
      throw DataError("non-finite value in embedding row '" + image_id + "'");
    }
    norm_sq += double(v) * double(v);
  }
  if (norm_sq == 0.0) {
    throw DataError("zero-norm row '" + image_id + "'");
  }
  index_.emplace(image_id, row_ids_.size());
  row_ids_.push_back(std::move(image_id));
  values_.insert(values_.end(), values.begin(), values.end());
}

std::optional<std::size_t> EmbeddingMatrix::row_of(
    const std::string& image_id) const {
  const auto it = index_.find(image_id);
  if (it == index_.end()) {
    return std::nullopt;
  }
  return it->second;
}

EmbeddingMatrix EmbeddingMatrix::load(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) {
    throw DataError("cannot open embedding file " + file.string());
  }
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0) {
    throw DataError("magic mismatch in " + file.string() +
                    " (expected DIVEEMB1)");
  }
  const std::uint32_t n = read_u32_le(in, "row count");
  const std::uint32_t dim = read_u32_le(in, "dimension");
  if (dim == 0) {
    throw DataError("embedding dimension must be positive in " +
                    file.string());
  }

  std::vector<float> values(std::size_t(n) * dim);
  if (!values.empty()) {
    in.read(reinterpret_cast<char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(float)));
    if (in.gcount() !=
        static_cast<std::streamsize>(values.size() * sizeof(float))) {
      throw DataError("truncated payload in " + file.string());
    }
  }

  std::ifstream ids(sidecar_path(file));
  if (!ids) {
    throw DataError("missing id sidecar " + sidecar_path(file).string());
  }
  EmbeddingMatrix m(dim);
  std::string line;
  std::size_t row = 0;
  while (std::getline(ids, line)) {
    if (line.empty()) {
      continue;
    }
    if (row >= n) {
      throw DataError("id sidecar has more rows than " + file.string());
    }
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw DataError("bad JSON in " + sidecar_path(file).string() +
                      " row " + std::to_string(row + 1) + ": " + e.what());
    }
    if (!j.contains("image_id") || !j["image_id"].is_string()) {
      throw DataError("sidecar row " + std::to_string(row + 1) +
                      " lacks string image_id");
    }
    m.add_row(j["image_id"].get<std::string>(),
              std::span<const float>(values.data() + row * dim, dim));
    ++row;
  }
  if (row != n) {
    throw DataError("id sidecar has " + std::to_string(row) +
                    " rows, file declares " + std::to_string(n));
  }
  return m;
}

void EmbeddingMatrix::save(const std::filesystem::path& file) const {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw DataError("cannot write " + file.string());
  }
  out.write(kMagic, 8);
  write_u32_le(out, static_cast<std::uint32_t>(rows()));
  write_u32_le(out, static_cast<std::uint32_t>(dim_));
  if (!values_.empty()) {
    out.write(reinterpret_cast<const char*>(values_.data()),
              static_cast<std::streamsize>(values_.size() * sizeof(float)));
  }
  std::ofstream ids(sidecar_path(file), std::ios::trunc);
  for (const auto& id : row_ids_) {
    nlohmann::ordered_json j;
    j["image_id"] = id;
    ids << j.dump() << '\n';
  }
}

double cosine_similarity(std::span<const float> a, std::span<const float> b) {
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = a[i];
    const double y = b[i];
    dot += x * y;
    na += x * x;
    nb += y * y;
  }
  if (na == 0.0 || nb == 0.0) {
    throw NumericError("cosine of zero-norm vector");
  }
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace dive
