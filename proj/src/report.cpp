#include "ceilkit/report.hpp"

#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "ceilkit/error.hpp"

namespace ceilkit {

using ojson = nlohmann::ordered_json;

void write_assignments(std::ostream& out, std::span<const int> assignments) {
  for (std::size_t i = 0; i < assignments.size(); ++i) out << i << '\t' << assignments[i] << '\n';
}

std::vector<int> read_assignments(std::istream& in) {
  std::vector<std::pair<long long, int>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream fields(line);
    long long id = 0;
    int cluster = 0;
    std::string extra;
    if (!(fields >> id >> cluster) || (fields >> extra)) {
      throw DataError("assignments line " + std::to_string(line_no) + ": expected \"doc_id<TAB>cluster\"");
    }
    rows.emplace_back(id, cluster);
  }
  std::vector<int> out(rows.size(), 0);
  std::vector<char> seen(rows.size(), 0);
  for (const auto& [id, cluster] : rows) {
    if (id < 0 || static_cast<std::size_t>(id) >= rows.size() || seen[static_cast<std::size_t>(id)]) {
      throw DataError("assignments: document ids must cover 0..N-1 exactly once (bad id " + std::to_string(id) + ")");
    }
    seen[static_cast<std::size_t>(id)] = 1;
    out[static_cast<std::size_t>(id)] = cluster;
  }
  return out;
}

void write_history(std::ostream& out, std::span<const EpochLoss> history, int iteration) {
  for (const auto& e : history) {
    ojson line;
    line["iteration"] = iteration;
    line["epoch"] = e.epoch;
    line["contrast"] = e.contrast;
    line["cluster"] = e.cluster;
    line["category"] = e.category;
    out << line.dump() << '\n';
  }
}

void write_history(std::ostream& out, std::span<const IterationRecord> records) {
  for (const auto& r : records) write_history(out, r.loss_history, r.iteration);
}

void write_iterations(std::ostream& out, std::span<const IterationRecord> records) {
  for (const auto& r : records) {
    ojson line;
    line["iteration"] = r.iteration;
    line["mode"] = std::string(to_string(r.mode));
    line["clusters_raw"] = r.clusters_raw;
    line["clusters_filtered"] = r.clusters_filtered;
    line["clusters_aggregated"] = r.clusters_aggregated;
    line["documents_supervised"] = r.documents_supervised;
    line["keywords"] = keywords_json(r);
    out << line.dump() << '\n';
  }
}

ojson keywords_json(const IterationRecord& record) {
  ojson out = ojson::object();
  for (std::size_t c = 0; c < record.keywords.size(); ++c) {
    ojson list = ojson::array();
    for (const auto& [token, score] : record.keywords[c]) list.push_back({token, score});
    out[std::to_string(c)] = std::move(list);
  }
  return out;
}

ojson metrics_json(const CeilRun& run) {
  ojson out;
  if (run.metrics.empty()) return out;
  out = to_json(run.metrics.back());
  ojson per_iteration = ojson::array();
  for (std::size_t i = 0; i < run.metrics.size(); ++i) {
    ojson m;
    m["iteration"] = run.records[i].iteration;
    m["acc"] = run.metrics[i].acc;
    m["nmi"] = run.metrics[i].nmi;
    m["k_pred"] = run.metrics[i].k_pred;
    per_iteration.push_back(std::move(m));
  }
  out["iterations"] = std::move(per_iteration);
  return out;
}

ojson to_json(const IterationRecord& r) {
  ojson j;
  j["iteration"] = r.iteration;
  j["mode"] = std::string(to_string(r.mode));
  j["clusters_raw"] = r.clusters_raw;
  j["clusters_filtered"] = r.clusters_filtered;
  j["clusters_aggregated"] = r.clusters_aggregated;
  j["documents_supervised"] = r.documents_supervised;
  j["assignments"] = r.assignments;
  ojson history = ojson::array();
  for (const auto& e : r.loss_history) history.push_back({e.epoch, e.contrast, e.cluster, e.category});
  j["loss_history"] = std::move(history);
  j["keywords"] = r.keywords;
  return j;
}

IterationRecord record_from_json(const nlohmann::json& j) {
  try {
    IterationRecord r;
    r.iteration = j.at("iteration").get<int>();
    const auto mode = j.at("mode").get<std::string>();
    if (mode == to_string(EncoderMode::MeanPool)) {
      r.mode = EncoderMode::MeanPool;
    } else if (mode == to_string(EncoderMode::MaskSlot)) {
      r.mode = EncoderMode::MaskSlot;
    } else {
      throw DataError("unknown encoder mode \"" + mode + "\"");
    }
    r.clusters_raw = j.at("clusters_raw").get<std::size_t>();
    r.clusters_filtered = j.at("clusters_filtered").get<std::size_t>();
    r.clusters_aggregated = j.at("clusters_aggregated").get<std::size_t>();
    r.documents_supervised = j.at("documents_supervised").get<std::size_t>();
    r.assignments = j.at("assignments").get<std::vector<int>>();
    for (const auto& e : j.at("loss_history")) {
      r.loss_history.push_back({e.at(0).get<int>(), e.at(1).get<double>(), e.at(2).get<double>(), e.at(3).get<double>()});
    }
    r.keywords = j.at("keywords").get<std::vector<std::vector<std::pair<std::string, double>>>>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed iteration record: ") + e.what());
  }
}

}  // namespace ceilkit
