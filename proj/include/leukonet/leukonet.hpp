#pragma once

// Umbrella header for the whole pipeline: image I/O and dataset handling,
// preprocessing, augmentation, the tensor/autodiff engine, the three
// architectures, training, checkpoints, and evaluation.

#include "leukonet/errors.hpp"
#include "leukonet/rng.hpp"
#include "leukonet/parallel.hpp"

#include "leukonet/image.hpp"
#include "leukonet/image_codec.hpp"
#include "leukonet/pixel_hash.hpp"
#include "leukonet/dataset.hpp"

#include "leukonet/preprocess.hpp"
#include "leukonet/augment.hpp"

#include "leukonet/tensor.hpp"
#include "leukonet/matmul.hpp"
#include "leukonet/ops.hpp"
#include "leukonet/loss.hpp"
#include "leukonet/model.hpp"
#include "leukonet/optimizer.hpp"
#include "leukonet/gradcheck.hpp"
#include "leukonet/models.hpp"

#include "leukonet/history.hpp"
#include "leukonet/split.hpp"
#include "leukonet/train.hpp"
#include "leukonet/checkpoint.hpp"

#include "leukonet/metrics.hpp"
