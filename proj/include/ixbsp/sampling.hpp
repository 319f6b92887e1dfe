#pragma once

#include "ixbsp/belief.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace ixbsp {

using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);
// Seed for the stream owned by a tree node, derived from its path of child slots.
std::uint64_t stream_seed(std::uint64_t base, const std::vector<int>& path);

struct StateSample {
  VectorXd chi;
  std::vector<VariableId> index;
  Label source;
};

enum class DistKind { Nominal, Reused };

struct DistributionTag {
  int k = 0;      // planning time of the generating session
  int node = -1;  // generating propagated node in that session's tree
  DistKind kind = DistKind::Nominal;
};

struct MeasurementSample {
  MeasurementSet z;
  DataAssociation da;
  StateSample state;
  DistributionTag dist;
};

StateSample sample_state(const GaussianBelief& b, Rng& rng, bool sample_landmarks = true);

DataAssociation predicted_da(const StateSample& chi, const MeasModel& model);

// Noisy measurements of the landmarks in `da` as seen from chi.
MeasurementSet sample_measurement(const StateSample& chi, const DataAssociation& da, const MeasModel& model, Rng& rng);

std::vector<MeasurementSample> sample_future_measurements(const PropagatedBelief& prop, const MeasModel& model,
                                                          int n_x, int n_z, Rng& rng, bool sample_landmarks = true);

// Log density of z under the (linearised) measurement pushforward of prop.
double measurement_likelihood_density(const MeasurementSet& z, const GaussianBelief& prop, const MeasModel& model,
                                      const DataAssociation& da);

MeasurementSample most_likely_measurement(const PropagatedBelief& prop, const MeasModel& model);

}  // namespace ixbsp
