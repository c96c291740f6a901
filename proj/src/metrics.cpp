#include "gpk/metrics.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace gpk {

PrCurve pr_curve(const std::vector<double>& scores,
                 const std::vector<int>& labels) {
  if (scores.size() != labels.size())
    throw ConfigError("scores and labels differ in length");
  if (scores.empty()) throw ConfigError("empty score list");
  int total_pos = 0;
  for (int l : labels) {
    if (l != 0 && l != 1) throw ConfigError("labels must be 0 or 1");
    total_pos += l;
  }
  if (total_pos == 0) throw Error("cannot build a curve without positives");

  std::vector<int> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return scores[a] > scores[b]; });

  PrCurve curve;
  int tp = 0, fp = 0;
  for (size_t i = 0; i < order.size(); ++i) {
    (labels[order[i]] ? tp : fp) += 1;
    const bool last_of_value = i + 1 == order.size() ||
                               scores[order[i + 1]] < scores[order[i]];
    if (!last_of_value) continue;
    PrPoint p;
    p.threshold = scores[order[i]];
    p.precision = static_cast<double>(tp) / (tp + fp);
    p.recall = static_cast<double>(tp) / total_pos;
    curve.points.push_back(p);
  }
  return curve;
}

double recall_at_precision(const PrCurve& curve, double min_precision) {
  double best = 0.0;
  for (const PrPoint& p : curve.points)
    if (p.precision >= min_precision) best = std::max(best, p.recall);
  return best;
}

double choose_operating_threshold(const PrCurve& curve, double min_precision,
                                  double fallback) {
  double best_recall = -1.0;
  double threshold = fallback;
  for (const PrPoint& p : curve.points) {
    if (p.precision >= min_precision && p.recall > best_recall) {
      best_recall = p.recall;
      threshold = p.threshold;
    }
  }
  return threshold;
}

namespace {

struct GroupKey {
  std::string object;
  std::vector<int> view_ids;
  bool operator<(const GroupKey& o) const {
    if (object != o.object) return object < o.object;
    return view_ids < o.view_ids;
  }
};

}  // namespace

SplitSpec split_by_view(const Dataset& dataset, double test_fraction,
                        std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw ConfigError("test_fraction must lie strictly between 0 and 1");

  std::map<GroupKey, std::vector<int>> groups;
  std::vector<GroupKey> group_order;
  std::vector<std::string> object_order;
  for (size_t i = 0; i < dataset.records.size(); ++i) {
    const DatasetRecord& r = dataset.records[i];
    GroupKey key{r.object, r.view_ids};
    auto [it, inserted] = groups.try_emplace(key);
    if (inserted) {
      group_order.push_back(key);
      if (std::find(object_order.begin(), object_order.end(), r.object) ==
          object_order.end())
        object_order.push_back(r.object);
    }
    it->second.push_back(static_cast<int>(i));
  }
  if (groups.size() < 2)
    throw ConfigError("need at least two (object, view-pair) groups to split");

  auto pick_test_count = [&](size_t n) {
    auto want = static_cast<long long>(std::llround(test_fraction * n));
    return static_cast<size_t>(
        std::clamp<long long>(want, 1, static_cast<long long>(n) - 1));
  };

  std::vector<GroupKey> test_groups;
  for (size_t oi = 0; oi < object_order.size(); ++oi) {
    std::vector<GroupKey> mine;
    for (const GroupKey& g : group_order)
      if (g.object == object_order[oi]) mine.push_back(g);
    if (mine.size() < 2) continue;
    Rng rng = Rng::substream(seed, 0x5711ull + oi);
    rng.shuffle(mine);
    mine.resize(pick_test_count(mine.size()));
    test_groups.insert(test_groups.end(), mine.begin(), mine.end());
  }
  if (test_groups.empty()) {
    std::vector<GroupKey> all = group_order;
    Rng rng = Rng::substream(seed, 0x5711ull);
    rng.shuffle(all);
    all.resize(pick_test_count(all.size()));
    test_groups = all;
  }

  std::map<GroupKey, bool> in_test;
  for (const GroupKey& g : test_groups) in_test[g] = true;

  SplitSpec split;
  for (const GroupKey& g : group_order) {
    auto& side = in_test.count(g) ? split.test_indices : split.train_indices;
    const auto& members = groups.at(g);
    side.insert(side.end(), members.begin(), members.end());
  }
  std::sort(split.train_indices.begin(), split.train_indices.end());
  std::sort(split.test_indices.begin(), split.test_indices.end());
  return split;
}

SplitSpec split_leave_one_object_out(const Dataset& dataset,
                                     const std::string& object) {
  SplitSpec split;
  for (size_t i = 0; i < dataset.records.size(); ++i) {
    auto& side = dataset.records[i].object == object ? split.test_indices
                                                     : split.train_indices;
    side.push_back(static_cast<int>(i));
  }
  if (split.test_indices.empty())
    throw ConfigError("no records for object: " + object);
  if (split.train_indices.empty())
    throw ConfigError("dataset contains only object: " + object);
  return split;
}

EvalReport evaluate_model(const CnnModel& model, const Dataset& dataset,
                          const SplitSpec& split) {
  if (split.test_indices.empty()) throw ConfigError("empty test side");
  const std::vector<double> scores =
      predict_scores(model, dataset, split.test_indices);
  std::vector<int> labels;
  labels.reserve(split.test_indices.size());
  for (int i : split.test_indices) labels.push_back(dataset.records[i].label);

  EvalReport report;
  int correct = 0;
  for (size_t i = 0; i < scores.size(); ++i)
    if ((scores[i] > 0.5 ? 1 : 0) == labels[i]) ++correct;
  report.accuracy = static_cast<double>(correct) / scores.size();
  report.curve = pr_curve(scores, labels);
  report.rahp = recall_at_precision(report.curve, report.min_precision);
  return report;
}

void save_eval_report(const EvalReport& report, const std::string& path) {
  nlohmann::ordered_json j;
  j["accuracy"] = report.accuracy;
  j["rahp"] = report.rahp;
  j["min_precision"] = report.min_precision;
  j["curve"] = nlohmann::ordered_json::array();
  for (const PrPoint& p : report.curve.points) {
    nlohmann::ordered_json jp;
    jp["threshold"] = p.threshold;
    jp["precision"] = p.precision;
    jp["recall"] = p.recall;
    j["curve"].push_back(jp);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << j.dump(2) << "\n";
  if (!out) throw IoError("write failed: " + path);
}

void save_pr_curve_csv(const PrCurve& curve, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "threshold,precision,recall\n";
  for (const PrPoint& p : curve.points) {
    std::ostringstream line;
    line.precision(17);
    line << p.threshold << "," << p.precision << "," << p.recall;
    out << line.str() << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace gpk
