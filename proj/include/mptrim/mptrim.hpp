#pragma once

#include "mptrim/bench.hpp"
#include "mptrim/closeness.hpp"
#include "mptrim/error.hpp"
#include "mptrim/generators.hpp"
#include "mptrim/json_io.hpp"
#include "mptrim/lipschitz.hpp"
#include "mptrim/mpc.hpp"
#include "mptrim/mpqp.hpp"
#include "mptrim/numkit.hpp"
#include "mptrim/oracles.hpp"
#include "mptrim/scenarios.hpp"
#include "mptrim/trim.hpp"
#include "mptrim/verify.hpp"
