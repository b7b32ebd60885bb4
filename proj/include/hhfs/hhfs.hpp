#pragma once

#define HHFS_VERSION "0.1.0"

#include "hhfs/config.hpp"
#include "hhfs/discrimination.hpp"
#include "hhfs/final_size.hpp"
#include "hhfs/fitting.hpp"
#include "hhfs/ids_model.hpp"
#include "hhfs/kl.hpp"
#include "hhfs/mt_model.hpp"
#include "hhfs/population.hpp"
#include "hhfs/simulator.hpp"
