#pragma once

namespace toda {

inline constexpr const char* kCodeVersion = "toda-entanglement 1.0.0";

// Bumped whenever the Gaussian sampler's draw sequence changes; seeds only
// reproduce within one sampler version.
inline constexpr int kSamplerVersion = 1;

// Binary layout version of the spectral cache files.
inline constexpr int kSpectralCacheVersion = 1;

}  // namespace toda
