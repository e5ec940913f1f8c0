#include "recovr/gallery.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace recovr {

using nlohmann::json;

Gallery::Gallery(std::vector<std::string> schema, std::uint64_t seed, int block_size)
    : schema_(std::move(schema)), seed_(seed), block_size_(block_size) {
  if (schema_.empty()) throw SchemaError("gallery schema is empty");
  if (std::find(schema_.begin(), schema_.end(), "category") == schema_.end())
    throw SchemaError("gallery schema must contain the dimension 'category'");
  std::set<std::string> seen;
  for (const auto& d : schema_)
    if (!seen.insert(d).second) throw SchemaError("duplicate schema dimension '" + d + "'");
}

const Item& Gallery::add(std::string id, AttributeMap attributes,
                         std::optional<std::string> thumbnail) {
  if (index_.contains(id)) throw SchemaError("duplicate item id '" + id + "'");
  if (!attributes.contains("category"))
    throw SchemaError("item '" + id + "' lacks the mandatory dimension 'category'");
  Item item{std::move(id), std::move(attributes), {}, std::move(thumbnail)};
  item.feature = item_feature(item.attributes, schema_, seed_, block_size_);
  index_.emplace(item.id, items_.size());
  items_.push_back(std::move(item));
  return items_.back();
}

const Item* Gallery::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  return it == index_.end() ? nullptr : &items_[it->second];
}

const Item& Gallery::at(std::string_view id) const {
  const Item* item = find(id);
  if (!item) throw InputError("item '" + std::string(id) + "' is not in the gallery");
  return *item;
}

std::vector<double> Gallery::feature_of(const AttributeMap& attributes) const {
  return item_feature(attributes, schema_, seed_, block_size_);
}

std::map<std::string, std::set<std::string>> Gallery::vocabulary() const {
  std::map<std::string, std::set<std::string>> vocab;
  for (const auto& d : schema_) vocab[d];
  for (const auto& item : items_)
    for (const auto& [d, v] : item.attributes) vocab[d].insert(v);
  return vocab;
}

std::uint64_t Gallery::content_hash() const {
  std::ostringstream out;
  write_jsonl(out);
  return fnv1a64(out.str());
}

void Gallery::write_jsonl(std::ostream& out) const {
  json header = {{"schema", schema_}, {"seed", seed_}};
  if (block_size_ != 8) header["block_size"] = block_size_;
  out << header.dump() << '\n';
  for (const auto& item : items_) {
    json j = {{"id", item.id}, {"attributes", item.attributes}};
    if (item.thumbnail) j["thumbnail"] = *item.thumbnail;
    out << j.dump() << '\n';
  }
}

Gallery Gallery::read_jsonl(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  std::optional<Gallery> gallery;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw InputError("gallery line " + std::to_string(lineno) + ": " + e.what());
    }
    try {
      if (!gallery) {
        if (!j.contains("schema"))
          throw InputError("gallery line " + std::to_string(lineno) + ": missing schema header");
        gallery.emplace(j.at("schema").get<std::vector<std::string>>(),
                        j.at("seed").get<std::uint64_t>(), j.value("block_size", 8));
        continue;
      }
      std::optional<std::string> thumb;
      if (j.contains("thumbnail")) thumb = j.at("thumbnail").get<std::string>();
      gallery->add(j.at("id").get<std::string>(), j.at("attributes").get<AttributeMap>(),
                   std::move(thumb));
    } catch (const json::exception& e) {
      throw InputError("gallery line " + std::to_string(lineno) + ": " + e.what());
    } catch (const SchemaError& e) {
      throw SchemaError("gallery line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (!gallery) throw InputError("gallery file has no schema header");
  return std::move(*gallery);
}

void Gallery::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write gallery file " + path.string());
  write_jsonl(out);
  if (!out) throw InputError("failed writing gallery file " + path.string());
}

Gallery Gallery::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open gallery file " + path.string());
  try {
    return read_jsonl(in);
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

}  // namespace recovr
