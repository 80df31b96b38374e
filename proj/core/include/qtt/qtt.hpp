#pragma once

#include "qtt/arithmetic.hpp"
#include "qtt/constructors.hpp"
#include "qtt/cross.hpp"
#include "qtt/decomp.hpp"
#include "qtt/errors.hpp"
#include "qtt/io.hpp"
#include "qtt/quantics.hpp"
#include "qtt/solvers.hpp"
#include "qtt/tensortrain.hpp"
#include "qtt/trainshape.hpp"
