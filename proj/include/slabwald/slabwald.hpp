#pragma once

// Everything in one include.

#include "core.hpp"
#include "errors.hpp"
#include "ewald2d.hpp"
#include "ewald3d.hpp"
#include "system_io.hpp"
#include "tuner.hpp"
