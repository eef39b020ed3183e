#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "synergy/prediction_store.hpp"

namespace synergy {

// Indices of samples on which at least one member's top-1 prediction
// differs from the label, ascending.
std::vector<std::size_t> mistake_filter(std::span<const PredictionSet* const> members,
                                        const LabelSet& labels);

// Product-moment correlation. nullopt when either input has zero variance.
// Throws ShapeError on length mismatch or fewer than 2 entries.
std::optional<double> pearson(std::span<const double> a, std::span<const double> b);

// Multiple correlation of Z on {X, Y} from the three pairwise coefficients.
// Throws DegenerateError when |r_xy| = 1 and DomainError for triples that
// cannot come from one correlation matrix.
double multiple_correlation(double r_xz, double r_yz, double r_xy);

// Square root of the small-sample adjusted R^2, negative values clamped to 0.
// Throws InsufficientSamplesError when n <= k_ind + 1.
double adjusted_correlation(double r_multiple, std::size_t n, std::size_t k_ind);

struct CorrelationReport {
  std::size_t n_filtered = 0;
  std::optional<double> r_xy, r_xz, r_yz;
  // Indexed by which member plays the dependent role.
  std::array<std::optional<double>, 3> r_multiple;
  std::array<std::optional<double>, 3> r_adjusted_each;
  std::optional<double> r_adjusted;  // mean of r_adjusted_each
  std::string undefined_reason;      // set when r_adjusted is nullopt
};

// Full pipeline on binary correctness vectors (1 = correct) of three models.
CorrelationReport correlate_correctness(std::span<const std::uint8_t> x,
                                        std::span<const std::uint8_t> y,
                                        std::span<const std::uint8_t> z);

// Mistake filter, correctness encoding, pairwise coefficients, multiple
// correlation for each dependent choice, adjustment, mean.
CorrelationReport triple_partial_correlation(std::span<const PredictionSet* const> members,
                                             const LabelSet& labels);

}  // namespace synergy
