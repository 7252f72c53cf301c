// Copyright 2026 The kpsca Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "kpsca/attack.hpp"
#include "kpsca/kmeans.hpp"
#include "kpsca/matrix.hpp"
#include "kpsca/obsmatrix.hpp"
#include "kpsca/pca.hpp"
#include "kpsca/plot.hpp"
#include "kpsca/report.hpp"
#include "kpsca/rng.hpp"
#include "kpsca/simulate.hpp"
#include "kpsca/trace_io.hpp"
#include "kpsca/trace_model.hpp"
