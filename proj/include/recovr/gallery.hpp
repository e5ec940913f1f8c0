#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

#include "recovr/types.hpp"

namespace recovr {

/// Item collection plus the schema and seed its features were derived from.
class Gallery {
 public:
  Gallery(std::vector<std::string> schema, std::uint64_t seed, int block_size = 8);

  /// Derives the feature from `attributes`; rejects duplicate ids, missing
  /// "category" and dimensions outside the schema.
  const Item& add(std::string id, AttributeMap attributes,
                  std::optional<std::string> thumbnail = std::nullopt);

  const std::vector<std::string>& schema() const { return schema_; }
  std::uint64_t seed() const { return seed_; }
  int block_size() const { return block_size_; }
  const std::vector<Item>& items() const { return items_; }
  std::size_t size() const { return items_.size(); }

  const Item* find(std::string_view id) const;
  const Item& at(std::string_view id) const;

  std::vector<double> feature_of(const AttributeMap& attributes) const;

  /// Values observed per dimension, in sorted order.
  std::map<std::string, std::set<std::string>> vocabulary() const;

  /// Hash of the canonical JSONL serialization.
  std::uint64_t content_hash() const;

  void write_jsonl(std::ostream& out) const;
  static Gallery read_jsonl(std::istream& in);

  void save(const std::filesystem::path& path) const;
  static Gallery load(const std::filesystem::path& path);

 private:
  std::vector<std::string> schema_;
  std::uint64_t seed_;
  int block_size_;
  std::vector<Item> items_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace recovr
