// SPDX-License-Identifier: Apache-2.0

#ifndef FGRN_CHECKPOINT_HPP
#define FGRN_CHECKPOINT_HPP

#include <cstdint>
#include <string>

#include "fgrn/training.hpp"

namespace fgrn {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Binary checkpoint: magic "FGRN", u32 version (LE), u64 config-blob length
/// plus UTF-8 config text, u64 tensor count, then per tensor: u32 name
/// length + name, u8 dtype (0 = 32-bit float), u8 ndim, u64 dims, raw
/// little-endian values. Model parameters are written first; optimizer
/// moments, when a state is given, follow under "opt." names.
void checkpoint_save(const RescaleModelT<float>& model, const TrainStateT<float>* state,
                     const TrainConfig& cfg, const std::string& path);

/// Rebuilds the model from the embedded config and fills its parameters.
/// Optionally restores the training config and optimizer state.
RescaleModelT<float> checkpoint_load(const std::string& path, TrainConfig* cfg_out = nullptr,
                                     TrainStateT<float>* state_out = nullptr);

} // namespace fgrn

#endif // FGRN_CHECKPOINT_HPP
