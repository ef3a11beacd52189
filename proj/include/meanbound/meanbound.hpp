// meanbound.hpp: umbrella header for the library (everything except the CLI).
#pragma once

#include "classical.hpp"
#include "core.hpp"
#include "envelopes.hpp"
#include "newbound.hpp"
#include "ordering.hpp"
#include "parallel.hpp"
#include "random.hpp"
#include "simharness.hpp"
#include "special.hpp"
