#include "mmskit/paradigms.hpp"

#include "mmskit/abm.hpp"
#include "mmskit/sdm.hpp"

namespace mmskit {

SubmodelFactory builtin_factory(Paradigm paradigm) {
    if (paradigm == Paradigm::agent_based) return [] { return std::make_unique<abm::AbmKernel>(); };
    return [] { return std::make_unique<sdm::SdmKernel>(); };
}

Registry builtin_registry(const Mms& mms) {
    Registry r;
    for (const auto& s : mms.submodels) r[s.id] = builtin_factory(s.paradigm);
    return r;
}

} // namespace mmskit
