#pragma once
// Umbrella header.

#include "mechgen/types.hpp"
#include "mechgen/json_io.hpp"
#include "mechgen/domain_io.hpp"
#include "mechgen/validate.hpp"
#include "mechgen/canonical.hpp"
#include "mechgen/engine.hpp"
#include "mechgen/planner.hpp"
#include "mechgen/requirements.hpp"
#include "mechgen/generator.hpp"
#include "mechgen/play.hpp"
#include "mechgen/store.hpp"
#include "mechgen/service.hpp"
#include "mechgen/cli.hpp"
