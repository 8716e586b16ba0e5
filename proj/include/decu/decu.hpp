#pragma once

#include "decu/branching.hpp"
#include "decu/checkpoint.hpp"
#include "decu/codec.hpp"
#include "decu/config.hpp"
#include "decu/dataset.hpp"
#include "decu/denoiser.hpp"
#include "decu/ensemble.hpp"
#include "decu/experiments.hpp"
#include "decu/gaussian.hpp"
#include "decu/image.hpp"
#include "decu/io.hpp"
#include "decu/paide.hpp"
#include "decu/parallel.hpp"
#include "decu/rng.hpp"
#include "decu/schedule.hpp"
#include "decu/ssim.hpp"
#include "decu/training.hpp"
