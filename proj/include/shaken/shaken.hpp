#pragma once

#include "shaken/critical.hpp"
#include "shaken/dynamics.hpp"
#include "shaken/errors.hpp"
#include "shaken/estimators.hpp"
#include "shaken/exact.hpp"
#include "shaken/format.hpp"
#include "shaken/io.hpp"
#include "shaken/lattice.hpp"
#include "shaken/measures.hpp"
#include "shaken/parallel.hpp"
#include "shaken/rcm.hpp"
#include "shaken/rng.hpp"
#include "shaken/union_find.hpp"
