#pragma once

#include "pamlr/core.hpp"
#include "pamlr/random.hpp"
#include "pamlr/belief.hpp"
#include "pamlr/explorer.hpp"
#include "pamlr/env.hpp"
#include "pamlr/engine.hpp"
#include "pamlr/eval.hpp"
#include "pamlr/config.hpp"
#include "pamlr/cli.hpp"
