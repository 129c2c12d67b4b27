#pragma once

#include "fieldreg/analytic.hpp"
#include "fieldreg/conditional.hpp"
#include "fieldreg/density.hpp"
#include "fieldreg/error.hpp"
#include "fieldreg/field_solver.hpp"
#include "fieldreg/grid.hpp"
#include "fieldreg/io.hpp"
#include "fieldreg/manufactured.hpp"
#include "fieldreg/pipeline.hpp"
#include "fieldreg/risk.hpp"
