#pragma once

// Binary snapshot of a torus:
//   "QPHS" | u32 version (1) | u32 header length | UTF-8 JSON header |
//   n1*n2 coefficient pairs (re, im), little-endian f64, DFT slot order,
//   row-major with k1 slow.
// The header carries grid, omega, alpha, model, eps, lambda and residual_sup.

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "qpfk/solver.hpp"

namespace qpfk {

class SnapshotError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::uint32_t kSnapshotVersion = 1;

std::vector<std::uint8_t> encode_snapshot(const TorusState& state);

struct LoadedSnapshot {
  TorusState state;
  /// residual_sup as stored in the header; state.residual_sup is recomputed.
  double header_residual_sup = 0.0;
  std::vector<std::string> warnings;
};

/// Decodes and recomputes the residual from the model named in the header.
/// A warning is attached when it drifts from the stored value by more than
/// 1e-10. Throws SnapshotError on a bad magic, unsupported version, malformed
/// header or truncated payload.
LoadedSnapshot decode_snapshot(const std::vector<std::uint8_t>& bytes);

void save_snapshot(const TorusState& state, const std::filesystem::path& path);
LoadedSnapshot load_snapshot(const std::filesystem::path& path);

}  // namespace qpfk
