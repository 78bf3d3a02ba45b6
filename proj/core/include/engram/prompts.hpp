#pragma once
#include <map>
#include <string>
#include <string_view>

namespace engram {

// All chat-call templates in one place so they are auditable and can be
// overridden from a JSON catalog file ({"extraction": "...", ...}; any
// subset of keys). Slot markers use {name} and are replaced verbatim.
struct PromptCatalog {
    std::string extraction;
    std::string consolidation;
    std::string entity_extraction;
    std::string judge;
    std::string simplifier;
    std::string planner;
    std::string missing_info;
    std::string reasoner;
    std::string synthesizer;

    static const PromptCatalog& builtin();
    // Builtin templates with any keys present in the JSON file replaced.
    static PromptCatalog load_with_overrides(const std::string& path);
};

// Replaces each "{key}" occurrence with its value. Unknown braces (JSON in
// the templates) are left alone.
std::string substitute_slots(std::string_view tmpl, const std::map<std::string, std::string>& slots);

}  // namespace engram
