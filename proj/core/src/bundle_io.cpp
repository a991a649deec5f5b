#include "rpft/bundle_io.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <string>
#include <vector>

#include "rpft/error.hpp"

namespace rpft {
namespace fs = std::filesystem;
namespace {

static_assert(std::endian::native == std::endian::little,
              "bundle I/O assumes a little-endian host");

std::vector<char> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::IoFailure, "cannot open " + path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) raise(ErrorCode::IoFailure, "cannot read " + path.string());
  return bytes;
}

void write_file(const fs::path& path, const void* data, std::size_t size) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(ErrorCode::IoFailure, "cannot create " + path.string());
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
  if (!out) raise(ErrorCode::IoFailure, "cannot write " + path.string());
}

std::uint32_t crc32_of(const std::vector<char>& bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size()));
  return static_cast<std::uint32_t>(crc);
}

template <typename T>
T field(const nlohmann::json& meta, const char* key) {
  if (!meta.contains(key)) raise(ErrorCode::ShapeMismatch, std::string("meta.json lacks '") + key + "'");
  try {
    return meta.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    raise(ErrorCode::ShapeMismatch, std::string("meta.json field '") + key + "' has the wrong type");
  }
}

}  // namespace

LoadedBundle load_bundle_with_checksums(const fs::path& dir) {
  const auto meta_bytes = read_file(dir / "meta.json");
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(meta_bytes.begin(), meta_bytes.end());
  } catch (const nlohmann::json::parse_error& e) {
    raise(ErrorCode::BadMagic, "meta.json is not valid JSON: " + std::string(e.what()));
  }
  if (!meta.is_object() || !meta.contains("format") || meta["format"] != "rpft") {
    raise(ErrorCode::BadMagic, "meta.json format is not 'rpft'");
  }
  if (!meta.contains("version") || meta["version"] != kBundleFormatVersion) {
    raise(ErrorCode::BadVersion, "unsupported bundle version");
  }
  if (field<std::string>(meta, "dtype") != "f32") {
    raise(ErrorCode::ShapeMismatch, "only dtype f32 is supported");
  }
  const auto kind_name = field<std::string>(meta, "kind");
  if (kind_name != "image" && kind_name != "text") {
    raise(ErrorCode::ShapeMismatch, "kind must be 'image' or 'text'");
  }
  const auto n = field<std::int64_t>(meta, "n");
  const auto d = field<std::int64_t>(meta, "d");
  if (n < 0 || d <= 0) raise(ErrorCode::ShapeMismatch, "invalid n or d");
  const bool has_labels = field<bool>(meta, "has_labels");

  BundleParts parts;
  parts.kind = kind_name == "text" ? FeatureKind::Text : FeatureKind::Image;
  parts.class_count = field<int>(meta, "class_count");
  parts.l2_normalized = field<bool>(meta, "l2_normalized");
  if (meta.contains("class_names")) {
    parts.class_names = field<std::vector<std::string>>(meta, "class_names");
  }

  LoadedBundle out;
  const auto features = read_file(dir / "features.bin");
  const auto expected = static_cast<std::uint64_t>(n) * static_cast<std::uint64_t>(d) * 4u;
  if (features.size() != expected) {
    raise(ErrorCode::ShapeMismatch, "features.bin has " + std::to_string(features.size()) +
                                        " bytes, meta.json implies " + std::to_string(expected));
  }
  out.features_crc32 = crc32_of(features);
  std::vector<float> values(static_cast<std::size_t>(n * d));
  std::memcpy(values.data(), features.data(), features.size());
  parts.data = Eigen::Map<const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
                   values.data(), n, d)
                   .cast<double>();

  if (has_labels) {
    const auto label_bytes = read_file(dir / "labels.bin");
    if (label_bytes.size() != static_cast<std::size_t>(n) * 4u) {
      raise(ErrorCode::CorruptLabels, "labels.bin has " + std::to_string(label_bytes.size()) +
                                          " bytes for " + std::to_string(n) + " rows");
    }
    out.labels_crc32 = crc32_of(label_bytes);
    std::vector<std::int32_t> labels(static_cast<std::size_t>(n));
    std::memcpy(labels.data(), label_bytes.data(), label_bytes.size());
    for (auto y : labels) {
      if (y < 0 || y >= parts.class_count) {
        raise(ErrorCode::CorruptLabels, "label " + std::to_string(y) + " outside [0, class_count)");
      }
    }
    parts.labels = std::vector<int>(labels.begin(), labels.end());
  }
  try {
    out.bundle = FeatureBundle(std::move(parts));
  } catch (const Error& e) {
    raise(ErrorCode::ShapeMismatch, e.what());
  }
  return out;
}

FeatureBundle load_bundle(const fs::path& dir) { return load_bundle_with_checksums(dir).bundle; }

void save_bundle(const FeatureBundle& bundle, const fs::path& dir, bool force) {
  if (bundle.empty()) raise(ErrorCode::EmptyBundle, "refusing to save a bundle with no rows");
  std::error_code ec;
  if (fs::exists(dir / "meta.json", ec) && !force) {
    raise(ErrorCode::AlreadyExists, dir.string() + " already holds a bundle");
  }
  fs::create_directories(dir, ec);
  if (ec) raise(ErrorCode::IoFailure, "cannot create " + dir.string() + ": " + ec.message());

  nlohmann::ordered_json meta;
  meta["format"] = "rpft";
  meta["version"] = kBundleFormatVersion;
  meta["kind"] = std::string(to_string(bundle.kind()));
  meta["n"] = bundle.rows();
  meta["d"] = bundle.dim();
  meta["dtype"] = "f32";
  meta["l2_normalized"] = bundle.l2_normalized();
  meta["class_count"] = bundle.class_count();
  if (!bundle.class_names().empty()) meta["class_names"] = bundle.class_names();
  meta["has_labels"] = bundle.has_labels();
  const std::string text = meta.dump(2) + "\n";
  write_file(dir / "meta.json", text.data(), text.size());

  const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> values =
      bundle.data().cast<float>();
  write_file(dir / "features.bin", values.data(), static_cast<std::size_t>(values.size()) * 4u);

  if (bundle.has_labels()) {
    const auto& labels = bundle.labels();
    const std::vector<std::int32_t> raw(labels.begin(), labels.end());
    write_file(dir / "labels.bin", raw.data(), raw.size() * 4u);
  } else if (fs::exists(dir / "labels.bin", ec)) {
    fs::remove(dir / "labels.bin", ec);
  }
}

}  // namespace rpft
