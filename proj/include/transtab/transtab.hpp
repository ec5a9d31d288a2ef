#pragma once

#include "transtab/error.hpp"
#include "transtab/network.hpp"
#include "transtab/pll.hpp"
#include "transtab/power_angle.hpp"
#include "transtab/equilibrium.hpp"
#include "transtab/dynamics.hpp"
#include "transtab/stability.hpp"
#include "transtab/csv.hpp"
#include "transtab/config.hpp"
#include "transtab/studies.hpp"
