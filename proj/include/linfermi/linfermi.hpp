#pragma once

#include "linfermi/errors.hpp"
#include "linfermi/fock.hpp"
#include "linfermi/quadratic_model.hpp"
#include "linfermi/antisym_canonical.hpp"
#include "linfermi/mps.hpp"
#include "linfermi/first_space.hpp"
#include "linfermi/thermo_state.hpp"
#include "linfermi/liouvillian.hpp"
#include "linfermi/stationary.hpp"
#include "linfermi/experiment.hpp"
