#pragma once

#include "topk/algorithms.hpp"
#include "topk/confidence.hpp"
#include "topk/core.hpp"
#include "topk/instances.hpp"
#include "topk/oracles.hpp"
