#include "scdn/importance.hpp"

#include <algorithm>
#include <cmath>

#include "scdn/errors.hpp"

namespace scdn {

std::vector<double> exclusion_losses(const TrainingState& state, const EmbeddingSet& emb, const std::vector<int>& ids) {
  std::vector<double> out;
  out.reserve(ids.size());
  for (int id : ids) {
    auto it = emb.find(id);
    if (it == emb.end()) throw Error(ErrorCode::MissingEmbedding, "no embedding for device " + std::to_string(id));
    EmbeddingSet masked = emb;
    masked[id].setZero();
    out.push_back(global_loss(state, masked));
  }
  return out;
}

std::vector<double> scale_importance(const std::vector<double>& losses, double gamma_min, double gamma_max,
                                     ImportanceScaling mode) {
  if (!(gamma_min >= 1.0) || !(gamma_max >= gamma_min))
    throw Error(ErrorCode::ConfigError, "importance range needs 1 <= gamma_min <= gamma_max");
  for (double l : losses)
    if (!std::isfinite(l)) throw Error(ErrorCode::DomainError, "exclusion loss is not finite");
  std::vector<double> out(losses.size(), gamma_min);
  if (losses.empty()) return out;
  const auto [lo_it, hi_it] = std::minmax_element(losses.begin(), losses.end());
  const double lo = *lo_it, hi = *hi_it;
  if (hi == lo) return out;
  const double span = gamma_max - gamma_min;
  if (mode == ImportanceScaling::Value) {
    for (size_t i = 0; i < losses.size(); ++i) out[i] = gamma_min + span * (losses[i] - lo) / (hi - lo);
    return out;
  }
  std::vector<double> levels = losses;
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  const double steps = static_cast<double>(levels.size() - 1);
  for (size_t i = 0; i < losses.size(); ++i) {
    const auto r = std::lower_bound(levels.begin(), levels.end(), losses[i]) - levels.begin();
    out[i] = gamma_min + span * static_cast<double>(r) / steps;
  }
  return out;
}

}  // namespace scdn
