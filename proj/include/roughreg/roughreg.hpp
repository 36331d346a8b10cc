#pragma once

#include "mat.hpp"
#include "grid.hpp"
#include "random.hpp"
#include "generators.hpp"
#include "holder.hpp"
#include "regcalc.hpp"
#include "enhance.hpp"
#include "controlled.hpp"
#include "roughint.hpp"
#include "stats.hpp"
#include "io.hpp"
#include "harness.hpp"
