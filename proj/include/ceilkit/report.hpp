#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include <json.hpp>

#include "ceilkit/pipeline.hpp"

namespace ceilkit {

/// "doc_id<TAB>cluster" per line, no header.
void write_assignments(std::ostream& out, std::span<const int> assignments);
/// Inverse of write_assignments. Ids may come in any order but must cover
/// 0..N-1 exactly once.
std::vector<int> read_assignments(std::istream& in);

/// One {"iteration", "epoch", "contrast", "cluster", "category"} object per line.
void write_history(std::ostream& out, std::span<const EpochLoss> history, int iteration = 0);
void write_history(std::ostream& out, std::span<const IterationRecord> records);

/// One summary object per iteration (cluster counts and keywords).
void write_iterations(std::ostream& out, std::span<const IterationRecord> records);

nlohmann::ordered_json keywords_json(const IterationRecord& record);

/// {acc, nmi, n, k_pred, k_gold} of the final iteration, plus a per-iteration list.
nlohmann::ordered_json metrics_json(const CeilRun& run);

nlohmann::ordered_json to_json(const IterationRecord& record);
IterationRecord record_from_json(const nlohmann::json& j);

}  // namespace ceilkit
