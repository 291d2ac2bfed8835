#pragma once

#include "anich/errors.hpp"
#include "anich/potentials.hpp"
#include "anich/anisotropy.hpp"
#include "anich/grid.hpp"
#include "anich/gradient_energy.hpp"
#include "anich/hminus.hpp"
#include "anich/diagnostics.hpp"
#include "anich/stepper.hpp"
#include "anich/contraction.hpp"
#include "anich/elliptic.hpp"
#include "anich/initial_data.hpp"
#include "anich/config.hpp"
#include "anich/io.hpp"
#include "anich/scenario.hpp"
#include "anich/suites.hpp"
