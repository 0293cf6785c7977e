#pragma once

#include "fluidlab/annotation.hpp"
#include "fluidlab/core.hpp"
#include "fluidlab/dataio.hpp"
#include "fluidlab/evaluation.hpp"
#include "fluidlab/experiment.hpp"
#include "fluidlab/features.hpp"
#include "fluidlab/hpo.hpp"
#include "fluidlab/linear.hpp"
#include "fluidlab/pipeline.hpp"
#include "fluidlab/records.hpp"
#include "fluidlab/report.hpp"
#include "fluidlab/run_record.hpp"
#include "fluidlab/segmentation.hpp"
#include "fluidlab/ssl.hpp"
#include "fluidlab/synthgen.hpp"
#include "fluidlab/wav.hpp"
