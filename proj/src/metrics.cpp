#include "sdpforge/metrics.hpp"

#include "sdpforge/corpus.hpp"
#include "sdpforge/error.hpp"

namespace sdpforge {

MacroAverage parse_macro_average(std::string_view name) {
  if (name == "exclude-no-relation") return MacroAverage::kExcludeNoRelation;
  if (name == "all") return MacroAverage::kAllLabels;
  if (name == "gold-present") return MacroAverage::kGoldPresent;
  throw Error(Errc::kInvalidConfig, "unknown macro average '" + std::string(name) + "'");
}

std::string_view to_string(MacroAverage m) {
  switch (m) {
    case MacroAverage::kExcludeNoRelation: return "exclude-no-relation";
    case MacroAverage::kAllLabels: return "all";
    case MacroAverage::kGoldPresent: return "gold-present";
  }
  return "";
}

EvalReport score_predictions(std::span<const int> gold,
                             std::span<const int> predicted,
                             std::span<const std::string> labels,
                             MacroAverage averaging) {
  if (gold.size() != predicted.size()) {
    throw Error(Errc::kLengthMismatch, std::to_string(gold.size()) + " gold vs " +
                                           std::to_string(predicted.size()) +
                                           " predictions");
  }
  const int k = static_cast<int>(labels.size());
  EvalReport report;
  report.per_class.resize(labels.size());
  for (int c = 0; c < k; ++c) report.per_class[c].label = labels[c];
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i] < 0 || gold[i] >= k || predicted[i] < 0 || predicted[i] >= k) {
      throw Error(Errc::kLabelOutOfRange, "label index outside [0, " + std::to_string(k) + ")");
    }
    report.per_class[gold[i]].support += 1;
    report.per_class[predicted[i]].predicted += 1;
    if (gold[i] == predicted[i]) report.per_class[gold[i]].true_positives += 1;
  }
  double sum = 0.0;
  int averaged = 0;
  for (auto& c : report.per_class) {
    if (c.predicted > 0) c.precision = static_cast<double>(c.true_positives) / c.predicted;
    if (c.support > 0) c.recall = static_cast<double>(c.true_positives) / c.support;
    if (c.precision + c.recall > 0) {
      c.f1 = 2.0 * c.precision * c.recall / (c.precision + c.recall);
    }
    const bool no_rel = c.label == kNoRelation;
    switch (averaging) {
      case MacroAverage::kExcludeNoRelation: c.averaged = !no_rel; break;
      case MacroAverage::kAllLabels: c.averaged = true; break;
      case MacroAverage::kGoldPresent: c.averaged = !no_rel && c.support > 0; break;
    }
    if (c.averaged) {
      sum += c.f1;
      ++averaged;
    }
  }
  report.macro_f1 = averaged > 0 ? sum / averaged : 0.0;
  return report;
}

}  // namespace sdpforge
