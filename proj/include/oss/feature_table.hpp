#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "oss/errors.hpp"

namespace oss {

struct FeatureRow {
  std::uint32_t class_id = 0;
  std::string image_id;
  std::vector<double> values;  // ordered per feature_schema
};

struct FeatureTable {
  std::string set_id;
  std::vector<std::string> feature_schema;
  std::vector<std::string> class_catalog;
  std::vector<FeatureRow> rows;

  std::size_t dim() const { return feature_schema.size(); }

  // Row counts per class, catalog-ordered.
  std::vector<std::size_t> class_counts() const {
    std::vector<std::size_t> counts(class_catalog.size(), 0);
    for (const auto& row : rows)
      if (row.class_id < counts.size()) ++counts[row.class_id];
    return counts;
  }

  bool operator==(const FeatureTable& other) const {
    if (set_id != other.set_id || feature_schema != other.feature_schema ||
        class_catalog != other.class_catalog || rows.size() != other.rows.size())
      return false;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].class_id != other.rows[i].class_id ||
          rows[i].image_id != other.rows[i].image_id || rows[i].values != other.rows[i].values)
        return false;
    }
    return true;
  }
};

namespace detail {

// Container format: "OSSFT" magic, u16 version, then length-prefixed strings
// and little-endian scalars, closed by a 64-bit FNV-1a checksum of everything
// before it. Byte-stable: the same table always serializes identically.
constexpr char kTableMagic[5] = {'O', 'S', 'S', 'F', 'T'};
constexpr std::uint16_t kTableVersion = 1;

inline void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>(v >> 8));
}

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_f64(std::string& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(out, bits);
}

inline void put_str(std::string& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.append(s);
}

struct TableReader {
  const std::uint8_t* data;
  std::size_t size;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (pos + n > size) throw parse_error("feature table: truncated record");
  }
  std::uint16_t u16() {
    need(2);
    std::uint16_t v = static_cast<std::uint16_t>(data[pos] | (data[pos + 1] << 8));
    pos += 2;
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data[pos + i]) << (8 * i);
    pos += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(data[pos + i]) << (8 * i);
    pos += 8;
    return v;
  }
  double f64() {
    const std::uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  std::string str() {
    const std::uint32_t len = u32();
    need(len);
    std::string s(reinterpret_cast<const char*>(data + pos), len);
    pos += len;
    return s;
  }
};

inline std::uint64_t fnv1a_64(const void* data, std::size_t size) {
  const auto* bytes = static_cast<const std::uint8_t*>(data);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace detail

inline void save_feature_table(const FeatureTable& table, const std::string& path) {
  std::string buf;
  buf.reserve(64 + table.rows.size() * (24 + table.dim() * 8));
  buf.append(detail::kTableMagic, sizeof(detail::kTableMagic));
  detail::put_u16(buf, detail::kTableVersion);
  detail::put_str(buf, table.set_id);
  detail::put_u32(buf, static_cast<std::uint32_t>(table.feature_schema.size()));
  for (const auto& name : table.feature_schema) detail::put_str(buf, name);
  detail::put_u32(buf, static_cast<std::uint32_t>(table.class_catalog.size()));
  for (const auto& name : table.class_catalog) detail::put_str(buf, name);
  detail::put_u64(buf, table.rows.size());
  for (const auto& row : table.rows) {
    if (row.values.size() != table.dim())
      throw domain_error("save_feature_table: row dimension does not match schema");
    detail::put_u32(buf, row.class_id);
    detail::put_str(buf, row.image_id);
    for (double v : row.values) detail::put_f64(buf, v);
  }
  detail::put_u64(buf, detail::fnv1a_64(buf.data(), buf.size()));

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("cannot create " + path);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw io_error("short write to " + path);
}

inline FeatureTable load_feature_table(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open " + path);
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (buf.size() < sizeof(detail::kTableMagic) + 2 + 8)
    throw parse_error(path + ": feature table file too short");
  if (std::memcmp(buf.data(), detail::kTableMagic, sizeof(detail::kTableMagic)) != 0)
    throw parse_error(path + ": not a feature table file");

  detail::TableReader tail{reinterpret_cast<const std::uint8_t*>(buf.data()), buf.size(),
                           buf.size() - 8};
  const std::uint64_t stored = tail.u64();
  const std::uint64_t computed = detail::fnv1a_64(buf.data(), buf.size() - 8);
  if (stored != computed)
    throw parse_error(path + ": integrity check failed (checksum mismatch)");

  detail::TableReader r{reinterpret_cast<const std::uint8_t*>(buf.data()), buf.size() - 8,
                        sizeof(detail::kTableMagic)};
  const std::uint16_t version = r.u16();
  if (version != detail::kTableVersion)
    throw parse_error(path + ": incompatible feature table version " + std::to_string(version) +
                      " (expected " + std::to_string(detail::kTableVersion) + ")");

  FeatureTable table;
  table.set_id = r.str();
  const std::uint32_t schema_len = r.u32();
  table.feature_schema.reserve(schema_len);
  for (std::uint32_t i = 0; i < schema_len; ++i) table.feature_schema.push_back(r.str());
  const std::uint32_t catalog_len = r.u32();
  table.class_catalog.reserve(catalog_len);
  for (std::uint32_t i = 0; i < catalog_len; ++i) table.class_catalog.push_back(r.str());
  const std::uint64_t row_count = r.u64();
  table.rows.reserve(row_count);
  for (std::uint64_t i = 0; i < row_count; ++i) {
    FeatureRow row;
    row.class_id = r.u32();
    row.image_id = r.str();
    row.values.resize(schema_len);
    for (auto& v : row.values) v = r.f64();
    table.rows.push_back(std::move(row));
  }
  if (r.pos != r.size) throw parse_error(path + ": trailing bytes after last row");
  return table;
}

}  // namespace oss
