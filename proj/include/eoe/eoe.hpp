#pragma once

#include "eoe/annotation.hpp"
#include "eoe/biomarkers.hpp"
#include "eoe/bitmap.hpp"
#include "eoe/classify/evaluation.hpp"
#include "eoe/classify/models.hpp"
#include "eoe/classify/records.hpp"
#include "eoe/components.hpp"
#include "eoe/config.hpp"
#include "eoe/error.hpp"
#include "eoe/geometry.hpp"
#include "eoe/io.hpp"
#include "eoe/rng.hpp"
#include "eoe/scan.hpp"
#include "eoe/seg_metrics.hpp"
#include "eoe/segmentation.hpp"
#include "eoe/stats.hpp"
#include "eoe/synth.hpp"
