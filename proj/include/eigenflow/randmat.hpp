// Matrix-valued Brownian increments for each ensemble, driven by
// counter-based per-path streams.
#pragma once

#include "eigenflow/matcore.hpp"

#include <cstdint>

namespace eigenflow {

enum class IncrementKind { GOE, GUE, GSE, Ginibre, SkewSymmetric, DiagonalBM };

Field increment_field(IncrementKind kind);

// Deterministic value-type stream. Draw k of stream (seed, index) is
// avalanche(base + k * golden) with base = avalanche(seed ^ golden * index),
// where avalanche is the splitmix64 finalizer (a 64-bit bijection), so
// distinct path indices give distinct streams.
struct RngStream {
  std::uint64_t master_seed = 0;
  std::uint64_t stream_index = 0;
  std::uint64_t base = 0;
  std::uint64_t counter = 0;
  double cached_normal = 0.0;
  bool has_cached = false;

  std::uint64_t next_u64();
  double next_uniform();  // [0, 1), 53-bit
  double next_normal();   // standard normal, Marsaglia polar
};

RngStream derive_stream(std::uint64_t master_seed, std::uint64_t path_index);

// One ensemble increment with covariance scaled by h. Construction is
// fill-then-scale: a draw at step h equals sqrt(h) times the draw at step 1
// from the same stream state.
//
//   GOE/GUE/GSE   Hermitian over R/C/H; diagonal variance h, each real
//                 component of an off-diagonal entry variance h/2.
//   Ginibre       iid N(0, h) entries.
//   SkewSymmetric independent N(0, h) above the diagonal, antisymmetrised.
//   DiagonalBM    iid N(0, h) on the diagonal.
FieldMatrix sample_matrix_increment(IncrementKind kind, int n, double h, RngStream& stream);

}  // namespace eigenflow
