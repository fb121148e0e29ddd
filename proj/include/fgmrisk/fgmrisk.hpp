#pragma once

// Library umbrella. The command layer (cli.hpp) is separate because it pulls
// in the vendored CLI11 and nlohmann/json headers.

#include "closedform.hpp"
#include "config.hpp"
#include "copula.hpp"
#include "error.hpp"
#include "expsum.hpp"
#include "ide.hpp"
#include "linalg.hpp"
#include "model.hpp"
#include "published.hpp"
#include "rng.hpp"
#include "simulate.hpp"
