#pragma once

// Convenience include for the whole library.

#include "lesionseg/canny.hpp"
#include "lesionseg/chan_vese.hpp"
#include "lesionseg/classify.hpp"
#include "lesionseg/config.hpp"
#include "lesionseg/csv.hpp"
#include "lesionseg/dataset.hpp"
#include "lesionseg/eval.hpp"
#include "lesionseg/features.hpp"
#include "lesionseg/hair_removal.hpp"
#include "lesionseg/image_io.hpp"
#include "lesionseg/morphology.hpp"
#include "lesionseg/pipeline.hpp"
#include "lesionseg/psm.hpp"
#include "lesionseg/raster.hpp"
#include "lesionseg/segment.hpp"
