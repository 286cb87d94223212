#pragma once

#include "cabinet/delay_model.hpp"
#include "cabinet/error.hpp"
#include "cabinet/harness.hpp"
#include "cabinet/node.hpp"
#include "cabinet/rng.hpp"
#include "cabinet/simulator.hpp"
#include "cabinet/trace.hpp"
#include "cabinet/verifier.hpp"
#include "cabinet/weight_scheme.hpp"
#include "cabinet/workload.hpp"
