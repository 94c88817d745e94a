#pragma once

// Shapley-value edge attribution for two-layer GCN node classification:
// prune the target's computational graph, sample coalitions of its edges,
// batch-evaluate the masked model, and solve a weighted least squares fit
// whose coefficients are the per-edge attributions.

#include "edgeshap/bitmatrix.hpp"
#include "edgeshap/common.hpp"
#include "edgeshap/comp_graph.hpp"
#include "edgeshap/explain.hpp"
#include "edgeshap/gcn.hpp"
#include "edgeshap/graph.hpp"
#include "edgeshap/io.hpp"
#include "edgeshap/metrics.hpp"
#include "edgeshap/rng.hpp"
#include "edgeshap/sampler.hpp"
#include "edgeshap/solver.hpp"
#include "edgeshap/synth.hpp"
#include "edgeshap/tensor_archive.hpp"
