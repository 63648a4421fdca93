#pragma once

#include "qrm/errors.hpp"
#include "qrm/model.hpp"
#include "qrm/ed_solver.hpp"
#include "qrm/gaussian.hpp"
#include "qrm/polaron.hpp"
#include "qrm/qfi.hpp"
#include "qrm/critical.hpp"
#include "qrm/observables.hpp"
#include "qrm/sweep_store.hpp"
