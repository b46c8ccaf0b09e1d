#pragma once

#include "cavlab/analytic.hpp"
#include "cavlab/config.hpp"
#include "cavlab/core.hpp"
#include "cavlab/density_matrix.hpp"
#include "cavlab/error.hpp"
#include "cavlab/inversion.hpp"
#include "cavlab/lindblad.hpp"
#include "cavlab/nnls.hpp"
#include "cavlab/optimize.hpp"
#include "cavlab/pipeline.hpp"
#include "cavlab/trace_io.hpp"
