#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace sf {

inline constexpr std::string_view kApparatusPrompt = "A gigantic diffuse white (spray-painted) sphere (ball)";
inline constexpr std::string_view kDarkSuffix = "in a dark environment";

// Object: direct diffusion prompt ("<object>[ in <scene>]" plus suffixes).
// SceneConditioned / Editing: LLM user messages asking for an appearance
// description or for editing instructions, with both slots filled.
// Apparatus: the fixed white-sphere prompt.
enum class PromptKind { Object, SceneConditioned, Apparatus, Editing };
PromptKind parse_prompt_kind(std::string_view text);

enum class ViewToken { Front, Side, Back };
// Front for |azimuth| < 45 deg, back beyond 135 deg, side in between.
ViewToken view_token(double azimuth_deg);
std::string_view to_string(ViewToken v);

struct PromptRequest {
    PromptKind kind = PromptKind::Object;
    std::string object_text;
    std::string scene_text;
    std::optional<double> azimuth_deg; // adds a view suffix to direct prompts
    bool dark = false;
    std::string color_suffix; // free-form lighting note, appended verbatim
};

std::string build_prompt(const PromptRequest &request);

bool dark_predicate(double background_mean, double light_region_mean);

} // namespace sf
