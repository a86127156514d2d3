#pragma once

#include <string>

#include "a2dmrg/mpo.hpp"
#include "a2dmrg/tensor_train.hpp"

namespace a2dmrg {

// Binary container for tensor trains and MPOs; the byte layout is described
// in docs/file_format.md. All integers and floats are little-endian.
void save_tt(const TensorTrain& tt, const std::string& path);
TensorTrain load_tt(const std::string& path);

void save_mpo(const MpOperator& op, const std::string& path);
MpOperator load_mpo(const std::string& path);

}  // namespace a2dmrg
