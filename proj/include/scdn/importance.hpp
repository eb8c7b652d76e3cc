#pragma once
// Relative device importance from per-device embedding exclusion.

#include <vector>

#include "scdn/vfl_engine.hpp"

namespace scdn {

enum class ImportanceScaling { Value, Rank };

// Global training loss with the embedding block of each listed device
// zeroed in turn, every other block left intact.
std::vector<double> exclusion_losses(const TrainingState& state, const EmbeddingSet& emb, const std::vector<int>& ids);

// Maps exclusion losses onto [gamma_min, gamma_max]; larger loss gives larger
// weight. Value scaling interpolates min-max on the losses, rank scaling
// spaces distinct loss levels evenly. Equal losses all get gamma_min.
std::vector<double> scale_importance(const std::vector<double>& losses, double gamma_min = 1.0,
                                     double gamma_max = 2.0, ImportanceScaling mode = ImportanceScaling::Value);

}  // namespace scdn
