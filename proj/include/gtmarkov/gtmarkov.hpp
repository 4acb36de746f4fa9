#pragma once

#include "gtmarkov/bounds.hpp"
#include "gtmarkov/chain.hpp"
#include "gtmarkov/decomposition.hpp"
#include "gtmarkov/distribution.hpp"
#include "gtmarkov/error.hpp"
#include "gtmarkov/exact_bias.hpp"
#include "gtmarkov/oracles.hpp"
#include "gtmarkov/parallel.hpp"
#include "gtmarkov/rate_fit.hpp"
#include "gtmarkov/simulate.hpp"
#include "gtmarkov/spectral_params.hpp"
#include "gtmarkov/two_by_two.hpp"
#include "gtmarkov/chain_io.hpp"
#include "gtmarkov/experiment.hpp"
