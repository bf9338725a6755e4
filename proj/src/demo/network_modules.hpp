#pragma once

#include "argtree/state_io.hpp"

namespace argtree::demo {

/// Constructors for the network cell/layer modules used by state export and finalization.
void add_network_builders(ModuleFactory& factory);

}  // namespace argtree::demo
