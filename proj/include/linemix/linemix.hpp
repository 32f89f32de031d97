#pragma once

#include "linemix/model.hpp"
#include "linemix/em.hpp"
#include "linemix/order_selection.hpp"
#include "linemix/evaluation.hpp"
#include "linemix/scenario.hpp"
#include "linemix/baselines.hpp"
#include "linemix/io.hpp"
#include "linemix/bench.hpp"
