// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "fdsh/kernels.hpp"

namespace fdsh::kernels::detail {

// Defined in the per-ISA translation units; return null when not compiled in.
const KernelTable* compiled_avx2_table() noexcept;
const KernelTable* compiled_neon_table() noexcept;

}  // namespace fdsh::kernels::detail
