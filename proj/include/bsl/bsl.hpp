#pragma once

// Umbrella header: the whole library in one include.

#include "core/errors.hpp"
#include "core/image.hpp"
#include "core/rng.hpp"
#include "core/tensor.hpp"

#include "shuffle/block_grid.hpp"
#include "shuffle/coords.hpp"
#include "shuffle/shuffle.hpp"

#include "nn/backbone.hpp"
#include "nn/heads.hpp"
#include "nn/layer.hpp"
#include "nn/layers.hpp"
#include "nn/model.hpp"
#include "nn/optimizer.hpp"

#include "loss/objectives.hpp"

#include "data/dataset.hpp"
#include "data/degrade.hpp"
#include "data/image_io.hpp"
#include "data/manifest.hpp"
#include "data/synth.hpp"

#include "eval/ablate.hpp"
#include "eval/evaluate.hpp"
#include "eval/metrics.hpp"

#include "train/checkpoint.hpp"
#include "train/run_config.hpp"
#include "train/trainer.hpp"
