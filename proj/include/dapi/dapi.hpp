#pragma once

#include "dapi/analysis.hpp"
#include "dapi/control.hpp"
#include "dapi/errors.hpp"
#include "dapi/graph.hpp"
#include "dapi/numerics.hpp"
#include "dapi/scenario.hpp"
#include "dapi/sysmodel.hpp"
#include "dapi/textfile.hpp"
#include "dapi/types.hpp"
