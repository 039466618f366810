#pragma once

#include "leafroi/core.hpp"
#include "leafroi/datagen.hpp"
#include "leafroi/detection.hpp"
#include "leafroi/harness/config.hpp"
#include "leafroi/harness/dataset.hpp"
#include "leafroi/harness/evaluate.hpp"
#include "leafroi/harness/report.hpp"
#include "leafroi/harness/synthetic.hpp"
#include "leafroi/imaging.hpp"
#include "leafroi/metrics.hpp"
#include "leafroi/netpbm.hpp"
#include "leafroi/raster.hpp"
#include "leafroi/rng.hpp"
#include "leafroi/saliency.hpp"
