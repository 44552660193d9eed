#pragma once

#include "mmskit/engine.hpp"
#include "mmskit/mms.hpp"

namespace mmskit {

/// Built-in kernel for a paradigm: agent_based -> abm::AbmKernel,
/// stock_flow -> sdm::SdmKernel.
SubmodelFactory builtin_factory(Paradigm paradigm);

/// Registers the built-in kernel of every sub-model's paradigm.
Registry builtin_registry(const Mms& mms);

} // namespace mmskit
