#pragma once

// On-disk cache of spectral decompositions.
//
// One file per (ModelParams, BasisSpec), named by the SHA-256 of a canonical
// key string that includes the format version. Layout, all little-endian:
//
//   offset  size     field
//   0       8        magic "TODASPEC"
//   8       4        u32 format version
//   12      4        u32 reserved (0)
//   16      5 x 8    f64 hbar, omega, m1, m2, energy
//   56      2 x 8    i64 n_max, n_sum_max (-1: no sum rule)
//   72      8        u64 dimension D
//   80      8 D      f64 eigenvalues, ascending
//   ...     8 D^2    f64 eigenvector matrix, column-major (column j = eigenvector j)
//   ...     32       SHA-256 of every preceding byte

#include <filesystem>
#include <string>
#include <vector>

#include "toda/quantum.hpp"

namespace toda {

std::string spectral_cache_key(const ModelParams& params, const BasisSpec& basis);

std::filesystem::path spectral_cache_path(const std::filesystem::path& cache_dir, const ModelParams& params,
                                          const BasisSpec& basis);

void write_spectral_file(const std::filesystem::path& path, const SpectralDecomposition& spectrum);

/// Throws ConfigError for a missing, truncated or corrupted file.
SpectralDecomposition read_spectral_file(const std::filesystem::path& path);

struct CacheLookup {
  SpectralDecomposition spectrum;
  bool hit = false;
  std::vector<std::string> warnings;
};

/// Loads the decomposition for (params, basis) or builds and stores it.
/// A corrupt entry is rebuilt with a warning; a loaded entry that fails the
/// orthogonality check is a hard EigenError. Concurrent builders of the same
/// key are serialised by an advisory file lock.
CacheLookup cache_get_or_build(const ModelParams& params, const BasisSpec& basis,
                               const std::filesystem::path& cache_dir);

struct CacheEntry {
  std::filesystem::path path;
  std::uintmax_t bytes = 0;
  double hbar = 0.0;
  double omega = 0.0;
  double m1 = 0.0;
  double m2 = 0.0;
  double energy = 0.0;
  long long n_max = 0;
  long long n_sum_max = -1;
  unsigned long long dimension = 0;
  bool readable = false;
};

/// Header summaries of every cache file in the directory.
std::vector<CacheEntry> list_cache(const std::filesystem::path& cache_dir);

/// Removes cache and lock files; returns the number of files removed.
std::size_t purge_cache(const std::filesystem::path& cache_dir);

}  // namespace toda
