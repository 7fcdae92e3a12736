#pragma once

#include "paraprod/atom.hpp"
#include "paraprod/dyadic.hpp"
#include "paraprod/experiments.hpp"
#include "paraprod/fourier.hpp"
#include "paraprod/norms.hpp"
#include "paraprod/operators.hpp"
#include "paraprod/opnorm.hpp"
#include "paraprod/rng.hpp"
#include "paraprod/serialize.hpp"
#include "paraprod/sparse.hpp"
