#ifndef KAM_KAM_HPP_
#define KAM_KAM_HPP_

#include "kam/compose.hpp"
#include "kam/diophantine.hpp"
#include "kam/errors.hpp"
#include "kam/fourier_series.hpp"
#include "kam/grid.hpp"
#include "kam/jacobian.hpp"
#include "kam/multi_index.hpp"
#include "kam/multiply.hpp"
#include "kam/norms.hpp"
#include "kam/scheme.hpp"
#include "kam/small_divisor.hpp"
#include "kam/step.hpp"
#include "kam/torus_field.hpp"
#include "kam/verify.hpp"

#endif
