#pragma once

// Umbrella header.

#include "ccl/config.hpp"
#include "ccl/consistency.hpp"
#include "ccl/dataset.hpp"
#include "ccl/experiment.hpp"
#include "ccl/losses.hpp"
#include "ccl/masks.hpp"
#include "ccl/mlp.hpp"
#include "ccl/optimizer.hpp"
#include "ccl/rng.hpp"
#include "ccl/schedules.hpp"
#include "ccl/tensor.hpp"
#include "ccl/trainer.hpp"
#include "ccl/uncertainty.hpp"
#include "ccl/verify.hpp"
