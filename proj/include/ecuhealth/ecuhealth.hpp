#pragma once

#include "ecuhealth/artifact.hpp"
#include "ecuhealth/autoencoder.hpp"
#include "ecuhealth/benchmark.hpp"
#include "ecuhealth/domain.hpp"
#include "ecuhealth/error.hpp"
#include "ecuhealth/forest.hpp"
#include "ecuhealth/io.hpp"
#include "ecuhealth/matrix.hpp"
#include "ecuhealth/metrics.hpp"
#include "ecuhealth/monitor.hpp"
#include "ecuhealth/pipeline.hpp"
#include "ecuhealth/preprocessing.hpp"
#include "ecuhealth/random.hpp"
#include "ecuhealth/residual.hpp"
#include "ecuhealth/synthetic.hpp"
#include "ecuhealth/text.hpp"
