#include "sf/guidance/prompt.h"

#include "sf/core/error.h"

#include <cmath>

namespace sf {

namespace {

constexpr std::string_view kPlacementLine =
    "Now, imagine a picture where [the object] is placed into [the scene]. First, detailedly discuss the "
    "environmental impacts of [the scene] imposes on the appearance of [the object]. Focus on the physical impacts "
    "instead of lighting impacts.";

constexpr std::string_view kDescribeLine =
    "Then provide a succinct, purely descriptive, short, and mechanistic description of the appearance of [the "
    "object] inside [the scene] concatenated with \",\". Aim the description to be approximately 25 to 35 words in "
    "length. Use simple language. Include all words provided in [the object].";

constexpr std::string_view kInstructLine =
    "Then provide a succinct instructions on how to change the appearance [the object] such that it looks realistic "
    "when placed in [the environment]. Start with each instruction with a verb and concatenate them with \",\". Aim "
    "the description to be approximately 20 to 30 words in length. Use simple language. Include all words provided "
    "in [the object].";

std::string llm_message(const PromptRequest &r, std::string_view second) {
    require(!r.scene_text.empty(), "scene text required for LLM prompt templates");
    std::string s;
    s += "[the scene]: " + r.scene_text + "\n";
    s += "[the object]: " + r.object_text + "\n";
    s += kPlacementLine;
    s += "\n";
    s += second;
    return s;
}

std::string with_light(std::string s, const PromptRequest &r) {
    if (!r.color_suffix.empty())
        s += ", " + r.color_suffix;
    if (r.dark) {
        s += " ";
        s += kDarkSuffix;
    }
    return s;
}

} // namespace

PromptKind parse_prompt_kind(std::string_view text) {
    if (text == "object")
        return PromptKind::Object;
    if (text == "scene" || text == "scene-conditioned")
        return PromptKind::SceneConditioned;
    if (text == "apparatus")
        return PromptKind::Apparatus;
    if (text == "editing")
        return PromptKind::Editing;
    fail(ErrorKind::InvalidInput, "unknown prompt kind: " + std::string(text));
}

ViewToken view_token(double azimuth_deg) {
    double a = std::fmod(azimuth_deg, 360.0);
    if (a > 180)
        a -= 360;
    if (a <= -180)
        a += 360;
    const double m = std::abs(a);
    if (m < 45)
        return ViewToken::Front;
    if (m > 135)
        return ViewToken::Back;
    return ViewToken::Side;
}

std::string_view to_string(ViewToken v) {
    switch (v) {
    case ViewToken::Front:
        return "front view";
    case ViewToken::Side:
        return "side view";
    case ViewToken::Back:
        return "back view";
    }
    return "";
}

std::string build_prompt(const PromptRequest &r) {
    switch (r.kind) {
    case PromptKind::Apparatus:
        return with_light(std::string(kApparatusPrompt), r);
    case PromptKind::SceneConditioned:
        require(!r.object_text.empty(), "object text required");
        return llm_message(r, kDescribeLine);
    case PromptKind::Editing:
        require(!r.object_text.empty(), "object text required");
        return llm_message(r, kInstructLine);
    case PromptKind::Object:
        break;
    }
    require(!r.object_text.empty(), "object text required");
    std::string s = r.object_text;
    if (!r.scene_text.empty())
        s += " in " + r.scene_text;
    if (r.azimuth_deg)
        s += ", " + std::string(to_string(view_token(*r.azimuth_deg)));
    return with_light(s, r);
}

bool dark_predicate(double background_mean, double light_region_mean) {
    return background_mean < 0.2 && light_region_mean < 50.0;
}

} // namespace sf
