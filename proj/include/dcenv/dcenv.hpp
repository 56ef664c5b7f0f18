#pragma once

#include "dcenv/core.hpp"
#include "dcenv/prox.hpp"
#include "dcenv/smooth.hpp"
#include "dcenv/atoms.hpp"
#include "dcenv/envelope.hpp"
#include "dcenv/report.hpp"
#include "dcenv/two_prox.hpp"
#include "dcenv/three_prox.hpp"
#include "dcenv/lbfgs.hpp"
#include "dcenv/baselines.hpp"
#include "dcenv/problems.hpp"
