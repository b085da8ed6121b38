#pragma once

#include <netcalc/error.hpp>
#include <netcalc/linalg.hpp>
#include <netcalc/netcore.hpp>
#include <netcalc/expression.hpp>
#include <netcalc/sequence.hpp>
#include <netcalc/operator.hpp>
#include <netcalc/filtration.hpp>
#include <netcalc/opcalc.hpp>
#include <netcalc/lcspace.hpp>
#include <netcalc/measure.hpp>
#include <netcalc/bochner.hpp>
#include <netcalc/config.hpp>
#include <netcalc/experiment.hpp>
