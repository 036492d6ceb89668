#pragma once

#include "bdlab/estimators/boundary_process.hpp"
#include "bdlab/estimators/common.hpp"
#include "bdlab/estimators/interior.hpp"
