#include "biaslens/common.hpp"

#include <openssl/evp.h>

#include <array>
#include <charconv>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>
#include <vector>

namespace biaslens {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonPositiveTruth: return "NonPositiveTruth";
    case ErrorCode::EmptyGroup: return "EmptyGroup";
    case ErrorCode::OrderViolation: return "OrderViolation";
    case ErrorCode::NonPositiveBaseline: return "NonPositiveBaseline";
    case ErrorCode::DegenerateData: return "DegenerateData";
    case ErrorCode::InsufficientRows: return "InsufficientRows";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::SingularComponent: return "SingularComponent";
    case ErrorCode::SingleCluster: return "SingleCluster";
    case ErrorCode::UnknownFactor: return "UnknownFactor";
    case ErrorCode::UnknownModel: return "UnknownModel";
    case ErrorCode::UnknownSlice: return "UnknownSlice";
    case ErrorCode::UnknownBin: return "UnknownBin";
    case ErrorCode::BinningMismatch: return "BinningMismatch";
    case ErrorCode::TooFewValues: return "TooFewValues";
    case ErrorCode::EmptySample: return "EmptySample";
    case ErrorCode::InsufficientSupport: return "InsufficientSupport";
    case ErrorCode::TooFewStrata: return "TooFewStrata";
    case ErrorCode::NoEmbeddings: return "NoEmbeddings";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::GaOutOfRange: return "GaOutOfRange";
    case ErrorCode::GaOrderViolation: return "GaOrderViolation";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::MismatchedProvenance: return "MismatchedProvenance";
    case ErrorCode::EmptyAxes: return "EmptyAxes";
    case ErrorCode::EmptyGrid: return "EmptyGrid";
    case ErrorCode::IoError: return "IoError";
  }
  return "Error";
}

uint64_t splitmix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

int thread_cap() {
  if (const char* env = std::getenv("BIASLENS_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

void parallel_for(size_t n, const std::function<void(size_t)>& fn) {
  if (n == 0) return;
  const size_t workers = std::min<size_t>(static_cast<size_t>(thread_cap()), n);
  if (workers <= 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::mutex mu;
  std::exception_ptr first_error;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (size_t i = w; i < n; i += workers) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
    fail(ErrorCode::IoError, "sha256 digest failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xF]);
  }
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) fail(ErrorCode::IoError, "short write to " + path);
}

std::string format_double(double value) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc()) fail(ErrorCode::IoError, "double formatting failed");
  return std::string(buf.data(), ptr);
}

}  // namespace biaslens
