#pragma once

#include "ndspec/driver.hpp"
#include "ndspec/errors.hpp"
#include "ndspec/fft.hpp"
#include "ndspec/granger.hpp"
#include "ndspec/grid.hpp"
#include "ndspec/halfplane.hpp"
#include "ndspec/harmonic.hpp"
#include "ndspec/io.hpp"
#include "ndspec/jl_step.hpp"
#include "ndspec/laurent.hpp"
#include "ndspec/matrix_function.hpp"
#include "ndspec/parallel.hpp"
#include "ndspec/scalar.hpp"
#include "ndspec/version.hpp"
