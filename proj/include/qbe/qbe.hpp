#pragma once

// Everything except the command layer (qbe/cli.hpp), which also needs the vendored JSON header.

#include "qbe/collision.hpp"
#include "qbe/config.hpp"
#include "qbe/diagnostics.hpp"
#include "qbe/dispersion.hpp"
#include "qbe/errors.hpp"
#include "qbe/grid.hpp"
#include "qbe/integrator.hpp"
#include "qbe/oracle.hpp"
#include "qbe/surfaces.hpp"
