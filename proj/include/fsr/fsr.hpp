#ifndef FSR_FSR_HPP
#define FSR_FSR_HPP

#include "fsr/core_types.hpp"
#include "fsr/coverage.hpp"
#include "fsr/linreg.hpp"
#include "fsr/oe_model.hpp"
#include "fsr/perturbation.hpp"
#include "fsr/region_explorer.hpp"
#include "fsr/serialization.hpp"

#endif  // FSR_FSR_HPP
