#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "a2dmrg/mpo.hpp"
#include "a2dmrg/tensor.hpp"

namespace a2dmrg {

enum class ModelKind { tfim, heisenberg, random_symmetric, from_file };

struct ModelSpec {
  ModelKind kind = ModelKind::tfim;
  std::size_t d = 10;
  double J = 1.0;
  double h = 1.0;
  std::size_t n = 2;        // random-symmetric only; spin chains use 2
  std::size_t R = 2;        // random-symmetric bond dimension of B
  std::uint64_t seed = 1;   // random-symmetric only
  std::string path;         // from-file only
};

std::string model_kind_name(ModelKind kind);
ModelKind parse_model_kind(const std::string& name);

/// -J sum Z_i Z_{i+1} - h sum X_i with open boundaries (op rank 3).
MpOperator build_tfim(std::size_t d, double J, double h);
/// J sum (X X + Y Y + Z Z) / 4 with open boundaries (op rank 5), using
/// Y Y = -(iY)(iY) so every core is real.
MpOperator build_heisenberg(std::size_t d, double J);
/// (B + B^T) / 2 for a Gaussian MPO B with entries of variance 1/(n R).
MpOperator build_random_symmetric(std::size_t d, std::size_t n, std::size_t R, std::uint64_t seed);

MpOperator build_model(const ModelSpec& spec);

struct GroundState {
  double energy = 0.0;
  Tensor state;  // unit vector reshaped to (n_1, ..., n_d)
};

/// Lowest eigenpair of the full operator. Dense diagonalization up to
/// dimension 1024, matrix-free Lanczos with a 1e-12 residual target above.
GroundState dense_ground_state(const MpOperator& op, std::size_t cap = default_oracle_cap());

}  // namespace a2dmrg
