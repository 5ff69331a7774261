#pragma once

#include "durascale/conditional.hpp"
#include "durascale/densities.hpp"
#include "durascale/errors.hpp"
#include "durascale/fitters.hpp"
#include "durascale/format.hpp"
#include "durascale/io.hpp"
#include "durascale/mittag_leffler.hpp"
#include "durascale/models.hpp"
#include "durascale/optimize.hpp"
#include "durascale/parallel.hpp"
#include "durascale/quadrature.hpp"
#include "durascale/report.hpp"
#include "durascale/synth.hpp"
#include "durascale/tape.hpp"
