#pragma once

/// \file taskchol.hpp
/// \brief Umbrella header for the taskchol library.

#include "taskchol/block_layout.hpp"
#include "taskchol/csr_matrix.hpp"
#include "taskchol/factorize.hpp"
#include "taskchol/kernels.hpp"
#include "taskchol/matrix_market.hpp"
#include "taskchol/ordering.hpp"
#include "taskchol/pipeline.hpp"
#include "taskchol/scheduler.hpp"
#include "taskchol/symbolic.hpp"
