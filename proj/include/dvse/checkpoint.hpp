#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dvse/featkit.hpp"
#include "dvse/models.hpp"

namespace dvse {

inline constexpr const char* kCheckpointVersion = "dvse-ckpt/1";
inline constexpr const char* kGruVariantId = "update-gate-scales-candidate";
inline constexpr const char* kFeatureLayoutId =
    "axis-major:std,max,min,rms,skew,kurt:v1";

struct CheckpointMeta {
  std::uint64_t seed = 0;
  int epochs = 0;
  double final_val_loss = 0.0;
  std::vector<std::string> test_trajectories;  // dirs of the held-out split
};

/// Human-readable JSON checkpoint: architecture hyperparameters, fixed
/// conventions, normalizer statistics, parameters (nested decimal arrays in
/// lexicographic key order), and training metadata. Doubles round-trip
/// exactly.
void checkpoint_save(const DvseModel& model, const Normalizer& normalizer,
                     const CheckpointMeta& meta,
                     const std::filesystem::path& path);

struct LoadedCheckpoint {
  DvseConfig config;
  Normalizer normalizer;
  CheckpointMeta meta;
  /// Builds the model and installs the stored parameters. Rejects version,
  /// layout, or per-tensor shape mismatches with a diagnostic naming the
  /// tensor.
  DvseModel instantiate() const;

  std::map<std::string, std::pair<std::vector<int>, std::vector<double>>> params;
};

LoadedCheckpoint checkpoint_load(const std::filesystem::path& path);

}  // namespace dvse
