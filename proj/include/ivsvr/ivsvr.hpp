#pragma once

#include "ivsvr/bounded_queue.hpp"
#include "ivsvr/error.hpp"
#include "ivsvr/experiments.hpp"
#include "ivsvr/fvs_state.hpp"
#include "ivsvr/ivs.hpp"
#include "ivsvr/kernel.hpp"
#include "ivsvr/metrics.hpp"
#include "ivsvr/model_io.hpp"
#include "ivsvr/parallel.hpp"
#include "ivsvr/pricing.hpp"
#include "ivsvr/results_io.hpp"
#include "ivsvr/scenario_io.hpp"
#include "ivsvr/schedule.hpp"
#include "ivsvr/svr.hpp"
#include "ivsvr/synth.hpp"
#include "ivsvr/tick_io.hpp"
