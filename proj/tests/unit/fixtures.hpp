#pragma once

#include <memory>
#include <random>
#include <string>
#include <vector>

#include "recovr/gallery.hpp"
#include "recovr/memory.hpp"

namespace fixtures {

inline const std::vector<std::string> kDims = {"category", "color", "scene", "action"};

inline const std::vector<std::vector<std::string>> kValues = {
    {"dog", "cat", "car", "bird"},
    {"red", "blue", "green"},
    {"indoor", "beach", "forest"},
    {"running", "sitting", "jumping"}};

// `n` items with random (possibly repeated) descriptors over kDims.
inline std::shared_ptr<recovr::Gallery> random_gallery(int n, std::uint64_t seed) {
  auto g = std::make_shared<recovr::Gallery>(kDims, seed);
  std::mt19937_64 rng(seed);
  for (int i = 0; i < n; ++i) {
    recovr::AttributeMap attrs;
    for (std::size_t d = 0; d < kDims.size(); ++d)
      attrs[kDims[d]] = kValues[d][rng() % kValues[d].size()];
    char id[16];
    std::snprintf(id, sizeof id, "i%03d", i);
    g->add(id, attrs);
  }
  return g;
}

// Every descriptor of kDims exactly once (4*3*3*3 = 108 items).
inline std::shared_ptr<recovr::Gallery> full_gallery(std::uint64_t seed = 1) {
  auto g = std::make_shared<recovr::Gallery>(kDims, seed);
  int i = 0;
  for (const auto& c : kValues[0])
    for (const auto& co : kValues[1])
      for (const auto& s : kValues[2])
        for (const auto& a : kValues[3]) {
          char id[16];
          std::snprintf(id, sizeof id, "g%03d", i++);
          g->add(id, {{"category", c}, {"color", co}, {"scene", s}, {"action", a}});
        }
  return g;
}

inline std::shared_ptr<const recovr::ProgressMemoryLong> cache_for(const recovr::Gallery& g) {
  return std::make_shared<const recovr::ProgressMemoryLong>(recovr::ProgressMemoryLong::build(g));
}

}  // namespace fixtures
