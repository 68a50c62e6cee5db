#pragma once

// Umbrella header for the positional-query outpainting library.

#include "outpaint/checkpoint.hpp"
#include "outpaint/codec.hpp"
#include "outpaint/common.hpp"
#include "outpaint/dataset.hpp"
#include "outpaint/diffusion.hpp"
#include "outpaint/geometry.hpp"
#include "outpaint/image.hpp"
#include "outpaint/imageio.hpp"
#include "outpaint/mat.hpp"
#include "outpaint/metrics.hpp"
#include "outpaint/model.hpp"
#include "outpaint/nn.hpp"
#include "outpaint/rng.hpp"
#include "outpaint/rpe.hpp"
#include "outpaint/sampler.hpp"
#include "outpaint/schedule.hpp"
#include "outpaint/trainer.hpp"
