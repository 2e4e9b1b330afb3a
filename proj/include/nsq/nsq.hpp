#pragma once

// Umbrella header for the nsq library: projected scalar quantization,
// VQ/RVQ baselines, the STFT frontend with its training losses,
// constant-bitrate framing and the analysis toolbox.

#include "nsq/analysis.hpp"
#include "nsq/archcalc.hpp"
#include "nsq/bitstream.hpp"
#include "nsq/fft.hpp"
#include "nsq/io.hpp"
#include "nsq/losses.hpp"
#include "nsq/mlp.hpp"
#include "nsq/pca.hpp"
#include "nsq/quantizer.hpp"
#include "nsq/rng.hpp"
#include "nsq/stft.hpp"
#include "nsq/toytrain.hpp"
#include "nsq/vq.hpp"
#include "nsq/wav.hpp"
