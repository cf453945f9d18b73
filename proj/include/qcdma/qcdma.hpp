#pragma once
// Umbrella header.

#include "qcdma/errors.hpp"
#include "qcdma/flags.hpp"
#include "qcdma/model.hpp"
#include "qcdma/gaussian.hpp"
#include "qcdma/asymptotic.hpp"
#include "qcdma/finite_size.hpp"
#include "qcdma/oracle.hpp"
#include "qcdma/serialize.hpp"
#include "qcdma/sweep.hpp"
