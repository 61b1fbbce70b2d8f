#pragma once

#include "metroq/config.hpp"
#include "metroq/linalg.hpp"
#include "metroq/optim.hpp"
#include "metroq/parallel.hpp"
#include "metroq/qcore.hpp"
#include "metroq/fisher.hpp"
#include "metroq/readout.hpp"
#include "metroq/global_control.hpp"
#include "metroq/ce_bounds.hpp"
#include "metroq/covariance.hpp"
#include "metroq/collective.hpp"
#include "metroq/photonics.hpp"
