#pragma once

#include "amplab/config.hpp"
#include "amplab/diagnostics.hpp"
#include "amplab/errors.hpp"
#include "amplab/extremes.hpp"
#include "amplab/feynman_kac.hpp"
#include "amplab/field_synthesis.hpp"
#include "amplab/heat_solver.hpp"
#include "amplab/io.hpp"
#include "amplab/parallel.hpp"
#include "amplab/path_spectrum.hpp"
#include "amplab/quadrature.hpp"
#include "amplab/rng.hpp"
#include "amplab/spectral_model.hpp"
