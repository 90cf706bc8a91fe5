#pragma once

#include "vidshield/defense.hpp"
#include "vidshield/detection.hpp"
#include "vidshield/error.hpp"
#include "vidshield/external_denoiser.hpp"
#include "vidshield/frame.hpp"
#include "vidshield/harness.hpp"
#include "vidshield/json_io.hpp"
#include "vidshield/motion.hpp"
#include "vidshield/pipeline.hpp"
#include "vidshield/png_io.hpp"
#include "vidshield/synthetic_corpus.hpp"
#include "vidshield/transform.hpp"
