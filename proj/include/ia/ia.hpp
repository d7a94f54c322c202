#pragma once

// Umbrella header for the ia library: sub-pixel resampling and backward
// warping, interpolator frequency analysis, sinusoidal positional encoding,
// implicit resampling-based alignment with window cross-attention, manual
// gradients and Adam training, synthetic scenes with exact ground truth,
// and the benchmark study driver.

#include "ia/align.hpp"
#include "ia/config.hpp"
#include "ia/encoding.hpp"
#include "ia/flo.hpp"
#include "ia/grid.hpp"
#include "ia/metrics.hpp"
#include "ia/pnm.hpp"
#include "ia/resample.hpp"
#include "ia/rng.hpp"
#include "ia/spectral.hpp"
#include "ia/study.hpp"
#include "ia/synth.hpp"
#include "ia/train.hpp"
