#pragma once

#include "palm/core_al.hpp"
#include "palm/inner.hpp"
#include "palm/io.hpp"
#include "palm/lbfgs.hpp"
#include "palm/oracles.hpp"
#include "palm/outer.hpp"
#include "palm/problem.hpp"
#include "palm/problems.hpp"
#include "palm/rng.hpp"
#include "palm/sets.hpp"
#include "palm/types.hpp"
