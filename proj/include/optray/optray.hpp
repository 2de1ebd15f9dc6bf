#pragma once

#include "optray/analysis.hpp"
#include "optray/dataset.hpp"
#include "optray/decompose.hpp"
#include "optray/error.hpp"
#include "optray/gd.hpp"
#include "optray/json_io.hpp"
#include "optray/linalg.hpp"
#include "optray/loss.hpp"
#include "optray/margin.hpp"
#include "optray/scvx.hpp"
#include "optray/simplex_lp.hpp"
#include "optray/verify.hpp"
