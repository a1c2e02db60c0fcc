#pragma once

// Umbrella header.

#include "isocheck/axioms.hpp"
#include "isocheck/checker.hpp"
#include "isocheck/json_io.hpp"
#include "isocheck/model.hpp"
#include "isocheck/opsem.hpp"
#include "isocheck/oracle.hpp"
#include "isocheck/relation.hpp"
#include "isocheck/saturation.hpp"
