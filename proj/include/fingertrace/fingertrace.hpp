#pragma once

#include "fingertrace/error.hpp"
#include "fingertrace/fingerprint.hpp"
#include "fingertrace/ingest.hpp"
#include "fingertrace/metrics.hpp"
#include "fingertrace/movement.hpp"
#include "fingertrace/pipeline.hpp"
#include "fingertrace/presets.hpp"
#include "fingertrace/sim.hpp"
#include "fingertrace/socialgraph.hpp"
#include "fingertrace/union_find.hpp"
#include "fingertrace/windowing.hpp"
