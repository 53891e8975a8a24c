#pragma once

#include "certsmooth/certify.hpp"
#include "certsmooth/diagnostics.hpp"
#include "certsmooth/io.hpp"
#include "certsmooth/model.hpp"
#include "certsmooth/qcrs.hpp"
#include "certsmooth/rng.hpp"
#include "certsmooth/runner.hpp"
#include "certsmooth/sampling.hpp"
#include "certsmooth/stats.hpp"
#include "certsmooth/types.hpp"
