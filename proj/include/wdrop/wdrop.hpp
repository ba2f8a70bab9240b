#pragma once

#include "wdrop/adam.hpp"
#include "wdrop/config.hpp"
#include "wdrop/csv.hpp"
#include "wdrop/curves.hpp"
#include "wdrop/dataset.hpp"
#include "wdrop/experiment.hpp"
#include "wdrop/generators.hpp"
#include "wdrop/losses.hpp"
#include "wdrop/method.hpp"
#include "wdrop/metrics.hpp"
#include "wdrop/mlp.hpp"
#include "wdrop/normal.hpp"
#include "wdrop/predict.hpp"
#include "wdrop/report.hpp"
#include "wdrop/rng.hpp"
#include "wdrop/serialize.hpp"
#include "wdrop/splits.hpp"
#include "wdrop/train.hpp"
