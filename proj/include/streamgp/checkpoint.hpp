#pragma once

#include <memory>
#include <string>
#include <vector>

#include "streamgp/ensemble.hpp"
#include "streamgp/lvm.hpp"
#include "streamgp/metrics.hpp"

namespace streamgp {

// Binary snapshots of a run in progress.  Feature maps are stored as
// (spec, n_rf, seed) and resampled on load, which reproduces them exactly;
// the neighbor graph is rebuilt by replaying the stored insertion sequence.
// The format is little-endian IEEE doubles (no cross-endian support).

void save_ensemble_checkpoint(const std::string& path,
                              const Ensemble& ensemble, long next_index,
                              const RegressionTracker& reg_tracker,
                              const ClassificationTracker& cls_tracker);

struct LoadedEnsemble {
  std::unique_ptr<Ensemble> ensemble;
  long next_index = 0;
  RegressionTracker reg_tracker;
  ClassificationTracker cls_tracker;
};
LoadedEnsemble load_ensemble_checkpoint(const std::string& path);

void save_lvm_checkpoint(const std::string& path, const LvmEnsemble& ensemble,
                         long next_index, const std::vector<int>& labels);

struct LoadedLvm {
  std::unique_ptr<LvmEnsemble> ensemble;
  long next_index = 0;
  std::vector<int> labels;
};
LoadedLvm load_lvm_checkpoint(const std::string& path);

}  // namespace streamgp
