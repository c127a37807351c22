#pragma once

#include "kmag/constants.hpp"
#include "kmag/device.hpp"
#include "kmag/fock.hpp"
#include "kmag/hamiltonians.hpp"
#include "kmag/dynamics.hpp"
#include "kmag/fidelity.hpp"
#include "kmag/io.hpp"
#include "kmag/config.hpp"
#include "kmag/scenarios.hpp"
#include "kmag/cli.hpp"
