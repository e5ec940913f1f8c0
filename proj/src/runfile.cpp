#include "recovr/runfile.hpp"

#include <algorithm>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <tuple>

namespace recovr {

std::map<std::string, ResultMemory> read_run(std::istream& in, int cutoff) {
  using Key = std::tuple<std::string, int, Channel>;
  std::map<Key, std::vector<RankedEntry>> lists;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream row(line);
    std::string qid, channel, item;
    int turn = 0, rank = 0;
    double score = 0;
    if (!(row >> qid >> channel >> turn >> item >> rank >> score))
      throw InputError("run file line " + std::to_string(lineno) +
                       ": expected 'qid channel turn item rank score'");
    Channel ch;
    try {
      ch = parse_channel(channel);
    } catch (const InputError& e) {
      throw InputError("run file line " + std::to_string(lineno) + ": " + e.what());
    }
    if (ch == Channel::fused)
      throw InputError("run file line " + std::to_string(lineno) + ": FUSED rows are outputs");
    if (turn < 0 || rank < 1)
      throw InputError("run file line " + std::to_string(lineno) + ": turn >= 0 and rank >= 1");
    lists[{qid, turn, ch}].push_back({item, rank, score});
  }

  std::map<std::string, ResultMemory> out;
  for (auto& [key, entries] : lists) {
    const auto& [qid, turn, ch] = key;
    std::sort(entries.begin(), entries.end(),
              [](const RankedEntry& a, const RankedEntry& b) { return a.rank < b.rank; });
    for (std::size_t i = 0; i < entries.size(); ++i)
      if (entries[i].rank != static_cast<int>(i) + 1)
        throw InputError("run file: ranks of " + qid + " turn " + std::to_string(turn) + " " +
                         std::string(to_string(ch)) + " are not 1..n");
    if (static_cast<int>(entries.size()) > cutoff) entries.resize(static_cast<std::size_t>(cutoff));
    RankedList list{ch, turn, std::move(entries), cutoff};
    out[qid].append(turn, ch, std::move(list));
  }
  return out;
}

void write_run_rows(std::ostream& out, const std::string& qid, const RankedList& list) {
  char buf[64];
  for (const auto& e : list.entries) {
    std::snprintf(buf, sizeof buf, "%.12g", e.score);
    out << qid << ' ' << to_string(list.channel) << ' ' << list.turn << ' ' << e.item_id << ' '
        << e.rank << ' ' << buf << '\n';
  }
}

void fuse_run(std::istream& in, std::ostream& out, const FusionConfig& config, int turn) {
  auto memories = read_run(in, config.cutoff);
  for (const auto& [qid, rm] : memories) {
    int t = turn;
    if (t < 0) {
      t = 0;
      for (const auto& r : rm.records()) t = std::max(t, r.turn);
    }
    write_run_rows(out, qid, fuse(rm, config, t));
  }
}

}  // namespace recovr
