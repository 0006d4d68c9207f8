#pragma once

#include "hkm/core.hpp"
#include "hkm/datasets.hpp"
#include "hkm/error.hpp"
#include "hkm/hierarchy.hpp"
#include "hkm/linkage.hpp"
#include "hkm/parallel.hpp"
#include "hkm/rhst.hpp"
#include "hkm/rng.hpp"
#include "hkm/sensitivity.hpp"
