#pragma once

#include "infgen/config.hpp"
#include "infgen/coords.hpp"
#include "infgen/fields.hpp"
#include "infgen/fusion.hpp"
#include "infgen/image_io.hpp"
#include "infgen/kernels.hpp"
#include "infgen/objectives.hpp"
#include "infgen/planner.hpp"
#include "infgen/runtime.hpp"
#include "infgen/structure.hpp"
#include "infgen/styles.hpp"
#include "infgen/tensor.hpp"
#include "infgen/texture.hpp"
#include "infgen/verify.hpp"
#include "infgen/weights.hpp"
