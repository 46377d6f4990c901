#include <string>

#include "bh3d/core/error.hpp"
#include "bh3d/fusion/fusion.hpp"

namespace bh3d::fusion {

std::string_view to_string(MergeRule rule) {
    switch (rule) {
        case MergeRule::PreferVnirBelow875: return "prefer-vnir-below-875";
        case MergeRule::PreferSwirAbove890: return "prefer-swir-above-890";
        case MergeRule::Blend: return "blend";
    }
    return "unknown";
}

MergeRule merge_rule_from_string(std::string_view name) {
    if (name == "prefer-vnir-below-875") return MergeRule::PreferVnirBelow875;
    if (name == "prefer-swir-above-890") return MergeRule::PreferSwirAbove890;
    if (name == "blend") return MergeRule::Blend;
    throw ConfigError("unknown merge rule '" + std::string(name) +
                      "' (expected prefer-vnir-below-875, prefer-swir-above-890 or blend)");
}

void FusionConfig::validate() const {
    BH3D_REQUIRE(ghost_threshold_m > 0.0, ConfigError, "ghost threshold must be positive");
    BH3D_REQUIRE(guided_radius >= 1, ConfigError, "guided-filter radius must be at least 1");
    BH3D_REQUIRE(guided_eps >= 0.0, ConfigError, "guided-filter edge parameter must be non-negative");
    BH3D_REQUIRE(vnir_guide.lo <= vnir_guide.hi && swir_guide.lo <= swir_guide.hi, ConfigError,
                 "guide ranges must have lo <= hi");
}

const GuideRange& FusionConfig::guide_for(CameraTag source) const {
    BH3D_REQUIRE(source != CameraTag::FUSED, ContractError, "guide set is defined per physical camera");
    return source == CameraTag::VNIR ? vnir_guide : swir_guide;
}

namespace {

nlohmann::json range_json(const GuideRange& r) { return nlohmann::json::array({r.lo, r.hi}); }

GuideRange range_from(const nlohmann::json& j) {
    const auto v = j.get<std::vector<double>>();
    if (v.size() != 2) throw ConfigError("guide range must be [lo, hi]");
    return {v[0], v[1]};
}

}  // namespace

nlohmann::json FusionConfig::to_json() const {
    return {{"ghost_threshold_m", ghost_threshold_m},
            {"merge_rule", std::string(to_string(merge_rule))},
            {"guided_radius", guided_radius},
            {"guided_eps", guided_eps},
            {"vnir_guide_nm", range_json(vnir_guide)},
            {"swir_guide_nm", range_json(swir_guide)}};
}

FusionConfig FusionConfig::from_json(const nlohmann::json& j) {
    FusionConfig c;
    try {
        c.ghost_threshold_m = j.value("ghost_threshold_m", c.ghost_threshold_m);
        if (j.contains("merge_rule")) c.merge_rule = merge_rule_from_string(j["merge_rule"].get<std::string>());
        c.guided_radius = j.value("guided_radius", c.guided_radius);
        c.guided_eps = j.value("guided_eps", c.guided_eps);
        if (j.contains("vnir_guide_nm")) c.vnir_guide = range_from(j["vnir_guide_nm"]);
        if (j.contains("swir_guide_nm")) c.swir_guide = range_from(j["swir_guide_nm"]);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed fusion config: ") + e.what());
    }
    c.validate();
    return c;
}

}  // namespace bh3d::fusion
