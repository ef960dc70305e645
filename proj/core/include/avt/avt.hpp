#pragma once

#include "avt/alignment_process.hpp"
#include "avt/barrier.hpp"
#include "avt/emission.hpp"
#include "avt/errors.hpp"
#include "avt/histogram.hpp"
#include "avt/io.hpp"
#include "avt/logspace.hpp"
#include "avt/model.hpp"
#include "avt/nodes.hpp"
#include "avt/rng.hpp"
#include "avt/simulate.hpp"
#include "avt/training.hpp"
#include "avt/trellis.hpp"
#include "avt/version.hpp"
#include "avt/voronoi.hpp"
