#ifndef DWAVE_DWAVE_HPP
#define DWAVE_DWAVE_HPP

#include "errors.hpp"
#include "grid.hpp"
#include "elliptic.hpp"
#include "model.hpp"
#include "semiflow.hpp"
#include "tangent.hpp"
#include "spectral.hpp"
#include "bounds.hpp"
#include "io.hpp"
#include "config.hpp"
#include "runner.hpp"

#endif
