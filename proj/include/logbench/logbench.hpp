#pragma once

#include "logbench/baseline_drain.hpp"
#include "logbench/core_model.hpp"
#include "logbench/dataset_io.hpp"
#include "logbench/drain_config.hpp"
#include "logbench/error.hpp"
#include "logbench/experiment.hpp"
#include "logbench/llm_client.hpp"
#include "logbench/metrics.hpp"
#include "logbench/prompt_engine.hpp"
#include "logbench/template_extractor.hpp"
