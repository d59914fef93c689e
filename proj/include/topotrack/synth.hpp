#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "topotrack/market_data.hpp"

// Seeded synthetic market generator: n assets with heterogeneous volatility,
// index = fixed sparse combination of k of them plus Gaussian noise. Stands
// in for proprietary index data in tests and demos.

namespace topotrack::synth {

struct SynthParams {
  std::size_t assets = 50;       // n
  std::size_t true_assets = 5;   // k, nonzero ground-truth weights
  std::size_t days = 1500;       // return observations (prices have one more row)
  double noise_level = 1e-3;     // stdev of the index noise term
  double min_vol = 0.008;        // daily return stdev range across assets
  double max_vol = 0.03;
  std::uint64_t seed = 42;

  void validate() const;
};

struct SynthResult {
  market_data::PricePanel prices;    // index first, then the n assets
  market_data::ReturnPanel returns;  // index_returns = combo + noise, exactly
  std::vector<double> true_weights;  // length n, exactly k nonzero, sums to 1
  std::string index_ticker;
};

SynthResult generate(const SynthParams& params);

}  // namespace topotrack::synth
