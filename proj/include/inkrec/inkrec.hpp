#pragma once

#include "inkrec/atdr.hpp"
#include "inkrec/dtw.hpp"
#include "inkrec/error.hpp"
#include "inkrec/eval.hpp"
#include "inkrec/features.hpp"
#include "inkrec/ink.hpp"
#include "inkrec/msvq.hpp"
#include "inkrec/protocol.hpp"
#include "inkrec/som.hpp"
#include "inkrec/stats.hpp"
#include "inkrec/synth.hpp"
