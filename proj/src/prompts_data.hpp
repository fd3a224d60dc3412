#pragma once

#include <cstddef>
#include <string_view>

namespace cadmetrics::detail {

struct EmbeddedTemplate {
  std::string_view name;
  std::string_view text;
};

// Generated at configure time from resources/prompts/*.txt.
extern const EmbeddedTemplate kEmbeddedTemplates[];
extern const std::size_t kEmbeddedTemplateCount;

}  // namespace cadmetrics::detail
