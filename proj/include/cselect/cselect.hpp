#pragma once

#include "cselect/audit.hpp"
#include "cselect/domain.hpp"
#include "cselect/error.hpp"
#include "cselect/expr.hpp"
#include "cselect/fields.hpp"
#include "cselect/geometry.hpp"
#include "cselect/grid.hpp"
#include "cselect/maps.hpp"
#include "cselect/michael.hpp"
#include "cselect/point.hpp"
#include "cselect/random.hpp"
#include "cselect/sandwich.hpp"
#include "cselect/spec_io.hpp"
#include "cselect/urysohn.hpp"
