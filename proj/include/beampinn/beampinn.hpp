#pragma once

#include "beampinn/beam.hpp"
#include "beampinn/diagnostics.hpp"
#include "beampinn/fem.hpp"
#include "beampinn/harness.hpp"
#include "beampinn/io.hpp"
#include "beampinn/jets.hpp"
#include "beampinn/losses.hpp"
#include "beampinn/network.hpp"
#include "beampinn/optimizers.hpp"
#include "beampinn/quadrature.hpp"
#include "beampinn/tape.hpp"
