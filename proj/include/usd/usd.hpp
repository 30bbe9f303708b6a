#pragma once

#include "usd/core.hpp"
#include "usd/gossip.hpp"
#include "usd/harness.hpp"
#include "usd/oracle.hpp"
#include "usd/population.hpp"
#include "usd/uniform.hpp"
