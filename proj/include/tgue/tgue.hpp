#pragma once

#include "tgue/config.hpp"
#include "tgue/errors.hpp"
#include "tgue/experiments.hpp"
#include "tgue/free_probability.hpp"
#include "tgue/gue_ensemble.hpp"
#include "tgue/matrix.hpp"
#include "tgue/model.hpp"
#include "tgue/parallel.hpp"
#include "tgue/rng.hpp"
#include "tgue/selftest.hpp"
#include "tgue/spectral.hpp"
#include "tgue/tensor_core.hpp"
