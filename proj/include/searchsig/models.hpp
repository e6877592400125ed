#pragma once

#include "searchsig/models/idw.hpp"
#include "searchsig/models/median.hpp"
#include "searchsig/models/ridge.hpp"
