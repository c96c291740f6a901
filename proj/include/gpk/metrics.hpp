#pragma once

#include <string>
#include <vector>

#include "gpk/cnn.hpp"
#include "gpk/dataset.hpp"

namespace gpk {

struct PrPoint {
  double threshold = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

// Points are threshold-descending; recall is non-decreasing down the list.
struct PrCurve {
  std::vector<PrPoint> points;
};

// Sweeps a threshold over the distinct score values. A sample counts as a
// positive prediction when score >= threshold. Throws if labels contain no
// positive.
PrCurve pr_curve(const std::vector<double>& scores,
                 const std::vector<int>& labels);

// Largest recall among points with precision >= min_precision, 0 if none
// qualifies.
double recall_at_precision(const PrCurve& curve, double min_precision = 0.99);

// Threshold of the point attaining recall_at_precision(curve, min_precision),
// or fallback when no point qualifies.
double choose_operating_threshold(const PrCurve& curve,
                                  double min_precision = 0.99,
                                  double fallback = 0.5);

// Partitions (object, view-pair) groups, never individual records, so no
// view pair contributes to both sides. Objects with at least two view pairs
// are split independently; single-pair objects stay in train. Falls back to
// a global group split if that leaves the test side empty.
SplitSpec split_by_view(const Dataset& dataset, double test_fraction,
                        std::uint64_t seed);

// Test side = every record of the named object, train side = the rest.
SplitSpec split_leave_one_object_out(const Dataset& dataset,
                                     const std::string& object);

struct EvalReport {
  double accuracy = 0.0;
  double rahp = 0.0;
  double min_precision = 0.99;
  PrCurve curve;
};

EvalReport evaluate_model(const CnnModel& model, const Dataset& dataset,
                          const SplitSpec& split);

void save_eval_report(const EvalReport& report, const std::string& path);
void save_pr_curve_csv(const PrCurve& curve, const std::string& path);

}  // namespace gpk
