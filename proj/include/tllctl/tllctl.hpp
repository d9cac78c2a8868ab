#pragma once

#include "tllctl/core.hpp"
#include "tllctl/sizing.hpp"
#include "tllctl/cpwa.hpp"
#include "tllctl/tll.hpp"
#include "tllctl/dynamics.hpp"
#include "tllctl/simrel.hpp"
#include "tllctl/io.hpp"
