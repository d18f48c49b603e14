#pragma once

namespace fedfair {

inline constexpr const char* kVersion = "0.1.0";

// Version of the master-seed -> stage-seed derivation scheme (see docs/determinism.md).
inline constexpr const char* kSeedSchemeVersion = "seed-derivation-v1";

}  // namespace fedfair
