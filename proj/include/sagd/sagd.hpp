#pragma once

// Umbrella header.

#include "sagd/checkpoint.hpp"
#include "sagd/csv.hpp"
#include "sagd/datasets.hpp"
#include "sagd/denoiser.hpp"
#include "sagd/diagnostics.hpp"
#include "sagd/diffusion.hpp"
#include "sagd/errors.hpp"
#include "sagd/fft.hpp"
#include "sagd/flow.hpp"
#include "sagd/gaussian_mixture.hpp"
#include "sagd/omission.hpp"
#include "sagd/pgm.hpp"
#include "sagd/presets.hpp"
#include "sagd/rng.hpp"
#include "sagd/run_config.hpp"
#include "sagd/schedule.hpp"
#include "sagd/spectral.hpp"
#include "sagd/svg.hpp"
#include "sagd/tensor_field.hpp"
#include "sagd/tensor_file.hpp"
