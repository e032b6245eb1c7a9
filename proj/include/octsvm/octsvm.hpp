#pragma once

#include "octsvm/core.hpp"
#include "octsvm/model.hpp"
#include "octsvm/feasibility.hpp"
#include "octsvm/formulation.hpp"
#include "octsvm/socp.hpp"
#include "octsvm/relaxation.hpp"
#include "octsvm/solve_result.hpp"
#include "octsvm/branch_and_bound.hpp"
#include "octsvm/brute_force.hpp"
#include "octsvm/cart.hpp"
#include "octsvm/harness.hpp"
