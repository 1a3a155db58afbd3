#pragma once

#include "vkplate/error.hpp"
#include "vkplate/quadrature.hpp"
#include "vkplate/geometry.hpp"
#include "vkplate/mesh.hpp"
#include "vkplate/femspace.hpp"
#include "vkplate/assembly.hpp"
#include "vkplate/solver.hpp"
#include "vkplate/analysis.hpp"
#include "vkplate/problems.hpp"
#include "vkplate/estimate.hpp"
#include "vkplate/experiment.hpp"
