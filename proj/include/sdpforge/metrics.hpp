#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sdpforge {

// Which classes enter the unweighted Macro-F1 mean. Every label stays a
// valid prediction class regardless of the choice.
enum class MacroAverage {
  kExcludeNoRelation,  // all labels except "no-relation" (default)
  kAllLabels,
  kGoldPresent,  // labels occurring in the gold data, minus "no-relation"
};

MacroAverage parse_macro_average(std::string_view name);
std::string_view to_string(MacroAverage m);

struct ClassScores {
  std::string label;
  std::int64_t true_positives = 0;
  std::int64_t predicted = 0;
  std::int64_t support = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool averaged = false;
};

struct EvalReport {
  double macro_f1 = 0.0;
  std::vector<ClassScores> per_class;
};

// Precision, recall and F1 are 0 when undefined. `gold` and `predicted` hold
// indices into `labels`.
EvalReport score_predictions(std::span<const int> gold,
                             std::span<const int> predicted,
                             std::span<const std::string> labels,
                             MacroAverage averaging = MacroAverage::kExcludeNoRelation);

}  // namespace sdpforge
