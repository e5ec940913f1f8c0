#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "recovr/fusion.hpp"
#include "recovr/memory.hpp"

namespace recovr {

/// Per-query result memories read from a whitespace-separated run file with
/// rows `qid channel turn item rank score`. Rows of one (qid, turn, channel)
/// list may appear in any order; ranks must form 1..n within each list.
/// Lines starting with '#' are comments.
std::map<std::string, ResultMemory> read_run(std::istream& in, int cutoff = 100);

/// Writes one row per fused entry: `qid FUSED turn item rank score`.
void write_run_rows(std::ostream& out, const std::string& qid, const RankedList& list);

/// Fuses every query at `turn` (or its last recorded turn when `turn` < 0)
/// and writes the fused rows in query order.
void fuse_run(std::istream& in, std::ostream& out, const FusionConfig& config, int turn = -1);

}  // namespace recovr
