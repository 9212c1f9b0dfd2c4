#pragma once

#include "spinlab/bounds.hpp"
#include "spinlab/classical.hpp"
#include "spinlab/common.hpp"
#include "spinlab/decomposition.hpp"
#include "spinlab/harness.hpp"
#include "spinlab/ising.hpp"
#include "spinlab/model.hpp"
#include "spinlab/quantum.hpp"
