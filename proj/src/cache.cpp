#include "toda/cache.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <thread>

#include "toda/curve.hpp"
#include "toda/error.hpp"
#include "toda/hash.hpp"
#include "toda/version.hpp"

namespace toda {

namespace fs = std::filesystem;

namespace {

constexpr char kMagic[8] = {'T', 'O', 'D', 'A', 'S', 'P', 'E', 'C'};
constexpr std::size_t kHeaderBytes = 80;
constexpr std::size_t kDigestBytes = 32;

template <typename T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  }
}

// Writes little-endian values to a stream while hashing them.
class Writer {
 public:
  explicit Writer(std::ostream& os) : os_(os) {}

  void raw(const void* data, std::size_t n) {
    os_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
    hash_.update(data, n);
  }
  template <typename T>
  void value(T v) {
    const T le = to_little(v);
    raw(&le, sizeof(T));
  }
  void doubles(const double* data, std::size_t n) {
    if constexpr (std::endian::native == std::endian::little) {
      raw(data, n * sizeof(double));
    } else {
      for (std::size_t i = 0; i < n; ++i) value(data[i]);
    }
  }
  std::array<unsigned char, 32> digest() { return hash_.digest(); }

 private:
  std::ostream& os_;
  Sha256 hash_;
};

class Reader {
 public:
  explicit Reader(std::istream& is, const fs::path& path) : is_(is), path_(path) {}

  void raw(void* data, std::size_t n) {
    is_.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(is_.gcount()) != n) throw ConfigError("spectral cache '" + path_.string() + "' is truncated");
    hash_.update(data, n);
  }
  template <typename T>
  T value() {
    T v{};
    raw(&v, sizeof(T));
    return to_little(v);
  }
  void doubles(double* data, std::size_t n) {
    raw(data, n * sizeof(double));
    if constexpr (std::endian::native != std::endian::little) {
      for (std::size_t i = 0; i < n; ++i) data[i] = to_little(data[i]);
    }
  }
  std::array<unsigned char, 32> digest() { return hash_.digest(); }

 private:
  std::istream& is_;
  const fs::path& path_;
  Sha256 hash_;
};

struct Header {
  std::uint32_t version = 0;
  double hbar = 0, omega = 0, m1 = 0, m2 = 0, energy = 0;
  std::int64_t n_max = 0, n_sum_max = -1;
  std::uint64_t dimension = 0;
};

Header read_header(Reader& r, const fs::path& path) {
  char magic[8];
  r.raw(magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) throw ConfigError("'" + path.string() + "' is not a spectral cache file");
  Header h;
  h.version = r.value<std::uint32_t>();
  (void)r.value<std::uint32_t>();
  h.hbar = r.value<double>();
  h.omega = r.value<double>();
  h.m1 = r.value<double>();
  h.m2 = r.value<double>();
  h.energy = r.value<double>();
  h.n_max = r.value<std::int64_t>();
  h.n_sum_max = r.value<std::int64_t>();
  h.dimension = r.value<std::uint64_t>();
  if (h.version != static_cast<std::uint32_t>(kSpectralCacheVersion)) {
    throw ConfigError("spectral cache '" + path.string() + "' has format version " + std::to_string(h.version));
  }
  return h;
}

// Exclusive advisory lock held for the object's lifetime.
class FileLock {
 public:
  explicit FileLock(const fs::path& path) {
    fd_ = ::open(path.c_str(), O_CREAT | O_RDWR, 0644);
    if (fd_ < 0) throw ConfigError("cannot open lock file '" + path.string() + "'");
    if (::flock(fd_, LOCK_EX) != 0) {
      ::close(fd_);
      throw ConfigError("cannot lock '" + path.string() + "'");
    }
  }
  ~FileLock() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
  FileLock(const FileLock&) = delete;
  FileLock& operator=(const FileLock&) = delete;

 private:
  int fd_ = -1;
};

std::string unique_suffix() {
  std::ostringstream os;
  os << ".tmp." << ::getpid() << '.' << std::hash<std::thread::id>{}(std::this_thread::get_id());
  return os.str();
}

}  // namespace

std::string spectral_cache_key(const ModelParams& params, const BasisSpec& basis) {
  std::ostringstream os;
  os << "format=" << kSpectralCacheVersion << ";hbar=" << format_double(basis.hbar())
     << ";omega=" << format_double(basis.omega()) << ";n_max=" << basis.n_max()
     << ";n_sum_max=" << (basis.n_sum_max() ? std::to_string(*basis.n_sum_max()) : "none")
     << ";m1=" << format_double(params.m1) << ";m2=" << format_double(params.m2)
     << ";energy=" << format_double(params.energy);
  return sha256_hex(os.str());
}

fs::path spectral_cache_path(const fs::path& cache_dir, const ModelParams& params, const BasisSpec& basis) {
  return cache_dir / (spectral_cache_key(params, basis).substr(0, 32) + ".spectrum");
}

void write_spectral_file(const fs::path& path, const SpectralDecomposition& spectrum) {
  const fs::path tmp = path.string() + unique_suffix();
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write spectral cache '" + tmp.string() + "'");
    Writer w(out);
    w.raw(kMagic, sizeof(kMagic));
    w.value<std::uint32_t>(static_cast<std::uint32_t>(kSpectralCacheVersion));
    w.value<std::uint32_t>(0);
    w.value(spectrum.basis.hbar());
    w.value(spectrum.basis.omega());
    w.value(spectrum.model.m1);
    w.value(spectrum.model.m2);
    w.value(spectrum.model.energy);
    w.value<std::int64_t>(spectrum.basis.n_max());
    w.value<std::int64_t>(spectrum.basis.n_sum_max().value_or(-1));
    const auto d = static_cast<std::uint64_t>(spectrum.eigenvalues.size());
    w.value<std::uint64_t>(d);
    w.doubles(spectrum.eigenvalues.data(), d);
    w.doubles(spectrum.eigenvectors.data(), d * d);
    const auto digest = w.digest();
    out.write(reinterpret_cast<const char*>(digest.data()), digest.size());
    if (!out) throw ConfigError("failed writing spectral cache '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

SpectralDecomposition read_spectral_file(const fs::path& path) {
  std::error_code ec;
  const auto bytes = fs::file_size(path, ec);
  if (ec) throw ConfigError("cannot stat spectral cache '" + path.string() + "'");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open spectral cache '" + path.string() + "'");
  Reader r(in, path);
  const Header h = read_header(r, path);
  const std::uint64_t d = h.dimension;
  if (d > (1u << 20) || bytes != kHeaderBytes + 8 * d + 8 * d * d + kDigestBytes) {
    throw ConfigError("spectral cache '" + path.string() + "' has the wrong size for dimension " + std::to_string(d));
  }
  const std::optional<int> n_sum = h.n_sum_max < 0 ? std::nullopt : std::optional<int>(static_cast<int>(h.n_sum_max));
  BasisSpec basis(h.hbar, h.omega, static_cast<int>(h.n_max), n_sum);
  if (basis.dimension() != d) throw ConfigError("spectral cache '" + path.string() + "' dimension disagrees with its basis");
  SpectralDecomposition out{basis, ModelParams{h.m1, h.m2, h.energy}, Eigen::VectorXd(static_cast<Eigen::Index>(d)),
                            Eigen::MatrixXd(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d))};
  r.doubles(out.eigenvalues.data(), d);
  r.doubles(out.eigenvectors.data(), d * d);
  const auto expected = r.digest();
  std::array<unsigned char, 32> stored{};
  in.read(reinterpret_cast<char*>(stored.data()), stored.size());
  if (static_cast<std::size_t>(in.gcount()) != stored.size() || stored != expected) {
    throw ConfigError("spectral cache '" + path.string() + "' failed its checksum");
  }
  return out;
}

CacheLookup cache_get_or_build(const ModelParams& params, const BasisSpec& basis, const fs::path& cache_dir) {
  fs::create_directories(cache_dir);
  const fs::path path = spectral_cache_path(cache_dir, params, basis);
  FileLock lock(path.string() + ".lock");

  CacheLookup out{SpectralDecomposition{basis, params, {}, {}}, false, {}};
  if (fs::exists(path)) {
    try {
      SpectralDecomposition loaded = read_spectral_file(path);
      if (!(loaded.basis == basis) || !(loaded.model == params)) {
        out.warnings.push_back("cache entry " + path.filename().string() + " belongs to other parameters; rebuilding");
      } else {
        loaded.check_invariants();
        out.spectrum = std::move(loaded);
        out.hit = true;
        return out;
      }
    } catch (const ConfigError& e) {
      out.warnings.push_back(std::string("corrupt cache entry rebuilt: ") + e.what());
    }
  }
  out.spectrum = spectral_decompose(build_hamiltonian(params, basis), basis, params);
  write_spectral_file(path, out.spectrum);
  return out;
}

std::vector<CacheEntry> list_cache(const fs::path& cache_dir) {
  std::vector<CacheEntry> out;
  if (!fs::exists(cache_dir)) return out;
  for (const auto& item : fs::directory_iterator(cache_dir)) {
    if (item.path().extension() != ".spectrum") continue;
    CacheEntry e;
    e.path = item.path();
    e.bytes = item.file_size();
    try {
      std::ifstream in(item.path(), std::ios::binary);
      Reader r(in, item.path());
      const Header h = read_header(r, item.path());
      e.hbar = h.hbar;
      e.omega = h.omega;
      e.m1 = h.m1;
      e.m2 = h.m2;
      e.energy = h.energy;
      e.n_max = h.n_max;
      e.n_sum_max = h.n_sum_max;
      e.dimension = h.dimension;
      e.readable = true;
    } catch (const Error&) {
      e.readable = false;
    }
    out.push_back(e);
  }
  std::sort(out.begin(), out.end(), [](const CacheEntry& a, const CacheEntry& b) { return a.path < b.path; });
  return out;
}

std::size_t purge_cache(const fs::path& cache_dir) {
  std::size_t removed = 0;
  if (!fs::exists(cache_dir)) return removed;
  std::vector<fs::path> doomed;
  for (const auto& item : fs::directory_iterator(cache_dir)) {
    const std::string name = item.path().filename().string();
    if (name.ends_with(".spectrum") || name.ends_with(".lock") || name.find(".spectrum.tmp.") != std::string::npos) {
      doomed.push_back(item.path());
    }
  }
  for (const fs::path& p : doomed) removed += fs::remove(p) ? 1 : 0;
  return removed;
}

}  // namespace toda
