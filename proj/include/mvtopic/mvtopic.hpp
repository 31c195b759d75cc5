// Copyright (C) 2026 The mvtopic Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mvtopic/config.hpp"
#include "mvtopic/corpus.hpp"
#include "mvtopic/ctfidf.hpp"
#include "mvtopic/diagnostics.hpp"
#include "mvtopic/encoder_client.hpp"
#include "mvtopic/error.hpp"
#include "mvtopic/frameselect.hpp"
#include "mvtopic/fusion.hpp"
#include "mvtopic/hdbscan.hpp"
#include "mvtopic/image_io.hpp"
#include "mvtopic/metrics.hpp"
#include "mvtopic/pipeline.hpp"
#include "mvtopic/reduce.hpp"
#include "mvtopic/refine.hpp"
#include "mvtopic/synthetic.hpp"
#include "mvtopic/text.hpp"
#include "mvtopic/topics.hpp"
#include "mvtopic/wordvec.hpp"
