#pragma once

#include "tvnet/bootstrap.hpp"
#include "tvnet/config.hpp"
#include "tvnet/diffest.hpp"
#include "tvnet/errors.hpp"
#include "tvnet/io.hpp"
#include "tvnet/kernels.hpp"
#include "tvnet/lrv.hpp"
#include "tvnet/multiplier.hpp"
#include "tvnet/network.hpp"
#include "tvnet/panel.hpp"
#include "tvnet/parallel.hpp"
#include "tvnet/pipeline.hpp"
#include "tvnet/plugin.hpp"
#include "tvnet/report.hpp"
#include "tvnet/simgen.hpp"
#include "tvnet/smoother.hpp"
#include "tvnet/tuning.hpp"
