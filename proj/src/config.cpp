// SPDX-License-Identifier: Apache-2.0
#include "framepick/config.hpp"

#include <cmath>

#include "framepick/fsio.hpp"

using nlohmann::json;

namespace framepick {

json to_json(const EngineConfig& c) {
    json aspects = json::array();
    for (const auto& a : c.aspects) aspects.push_back(a.name);
    const auto& ds = c.downsample;
    const auto& fc = c.faces.cluster;
    const auto& w = c.weights;
    return {
        {"workers", c.workers},
        {"aspects", aspects},
        {"downsample",
         {{"working_edge", ds.working_edge},
          {"quality",
           {{"min_luminance", ds.quality.min_luminance},
            {"min_sharpness", ds.quality.min_sharpness},
            {"max_uniformity", ds.quality.max_uniformity},
            {"uniformity_top_fraction", ds.uniformity_top_fraction}}},
          {"shots",
           {{"k_sigma", ds.shots.k_sigma},
            {"window", ds.shots.window},
            {"min_distance", ds.shots.min_distance},
            {"min_shot_len", ds.shots.min_shot_len},
            {"transition_radius", ds.shots.transition_radius}}},
          {"subshots",
           {{"target_len", ds.subshots.target_len},
            {"max_iterations", ds.subshots.max_iterations},
            {"seed", ds.subshots.seed}}}}},
        {"letterbox",
         {{"sample_size", c.letterbox.sample_size},
          {"nonblack_fraction", c.letterbox.nonblack_fraction},
          {"black_level", c.letterbox.black_level},
          {"seed", c.letterbox.seed}}},
        {"group", {{"variance_target", c.group.variance_target}, {"eps", c.group.eps}, {"min_pts", c.group.min_pts}}},
        {"crop",
         {{"grid", c.crop.grid.grid},
          {"min_area_ratio", c.crop.grid.min_area_ratio},
          {"small_face_ratio", c.crop.filter.small_face_ratio},
          {"single_face_band", c.crop.filter.single_face_band},
          {"centered_band", c.crop.filter.centered_band},
          {"border_fraction", c.crop.border_fraction},
          {"border_penalty", c.crop.border_penalty}}},
        {"faces",
         {{"expand_factor", c.faces.expand_factor},
          {"ear_threshold", c.faces.ear_threshold},
          {"cluster",
           {{"variance_target", fc.variance_target},
            {"eps", fc.eps},
            {"min_pts", fc.min_pts},
            {"min_area", fc.min_area},
            {"grid_halfwidth", fc.grid_halfwidth},
            {"base_k_override", fc.base_k_override ? json(*fc.base_k_override) : json(nullptr)},
            {"score_space", fc.score_in_projected_space ? "projected" : "original"}}}}},
        {"scoring",
         {{"temperature", c.scoring.temperature},
          {"logo_grid_max", c.scoring.logo_grid_max},
          {"face_position",
           {{"column_lo", c.scoring.face_position.column_lo},
            {"column_hi", c.scoring.face_position.column_hi},
            {"rows", c.scoring.face_position.rows},
            {"side", c.scoring.face_position.side}}}}},
        {"weights",
         {{"aesthetic", w.aesthetic},
          {"semantic", w.semantic},
          {"logo", w.logo},
          {"face_position", w.face_position},
          {"on_face_focus", w.on_face_focus},
          {"face_aggregation", scoring::to_string(w.face_aggregation)}}},
        {"presets",
         {{"per_section", c.presets.per_section}, {"main_cluster_coverage", c.presets.main_cluster_coverage}}},
        {"reference", {{"exact", c.reference.exact}, {"similar", c.reference.similar}}},
        {"keywords",
         {{"endpoint", c.keywords.endpoint},
          {"max_keywords", c.keywords.max_keywords},
          {"max_tokens", c.keywords.max_tokens},
          {"retries", c.keywords.retries},
          {"timeout_s", c.keywords.timeout_s}}},
        {"service",
         {{"host", c.service.host},
          {"port", c.service.port},
          {"embedding_endpoint", c.service.embedding_endpoint},
          {"histogram_bins", c.service.histogram_bins}}},
    };
}

namespace {

void reject_unknown(const json& given, const json& defaults, const std::string& prefix) {
    if (!given.is_object()) throw ConfigError("config key '" + prefix + "' must be an object");
    for (const auto& [key, value] : given.items()) {
        const std::string path = prefix.empty() ? key : prefix + "." + key;
        if (!defaults.contains(key)) throw ConfigError("unknown config key '" + path + "'");
        if (defaults.at(key).is_object()) reject_unknown(value, defaults.at(key), path);
    }
}

template <typename T>
T get(const json& root, const std::string& dotted) {
    const json* node = &root;
    std::size_t start = 0;
    while (true) {
        const auto dot = dotted.find('.', start);
        node = &node->at(dotted.substr(start, dot - start));
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    try {
        return node->get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config key '" + dotted + "' has the wrong type");
    }
}

void require(bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
}

}  // namespace

EngineConfig config_from_json(const json& given) {
    const json defaults = to_json(EngineConfig{});
    reject_unknown(given, defaults, "");
    json m = defaults;
    m.merge_patch(given);

    EngineConfig c;
    c.workers = get<int>(m, "workers");
    c.aspects.clear();
    for (const auto& a : get<std::vector<std::string>>(m, "aspects")) c.aspects.push_back(parse_aspect(a));

    auto& ds = c.downsample;
    ds.working_edge = get<int>(m, "downsample.working_edge");
    ds.quality.min_luminance = get<double>(m, "downsample.quality.min_luminance");
    ds.quality.min_sharpness = get<double>(m, "downsample.quality.min_sharpness");
    ds.quality.max_uniformity = get<double>(m, "downsample.quality.max_uniformity");
    ds.uniformity_top_fraction = get<double>(m, "downsample.quality.uniformity_top_fraction");
    ds.shots.k_sigma = get<double>(m, "downsample.shots.k_sigma");
    ds.shots.window = get<int>(m, "downsample.shots.window");
    ds.shots.min_distance = get<double>(m, "downsample.shots.min_distance");
    ds.shots.min_shot_len = get<int>(m, "downsample.shots.min_shot_len");
    ds.shots.transition_radius = get<int>(m, "downsample.shots.transition_radius");
    ds.subshots.target_len = get<int>(m, "downsample.subshots.target_len");
    ds.subshots.max_iterations = get<int>(m, "downsample.subshots.max_iterations");
    ds.subshots.seed = get<std::uint64_t>(m, "downsample.subshots.seed");

    c.letterbox.sample_size = get<int>(m, "letterbox.sample_size");
    c.letterbox.nonblack_fraction = get<double>(m, "letterbox.nonblack_fraction");
    c.letterbox.black_level = get<int>(m, "letterbox.black_level");
    c.letterbox.seed = get<std::uint64_t>(m, "letterbox.seed");

    c.group.variance_target = get<double>(m, "group.variance_target");
    c.group.eps = get<double>(m, "group.eps");
    c.group.min_pts = get<int>(m, "group.min_pts");

    c.crop.grid.grid = get<int>(m, "crop.grid");
    c.crop.grid.min_area_ratio = get<double>(m, "crop.min_area_ratio");
    c.crop.filter.small_face_ratio = get<double>(m, "crop.small_face_ratio");
    c.crop.filter.single_face_band = get<double>(m, "crop.single_face_band");
    c.crop.filter.centered_band = get<double>(m, "crop.centered_band");
    c.crop.border_fraction = get<double>(m, "crop.border_fraction");
    c.crop.border_penalty = get<double>(m, "crop.border_penalty");

    c.faces.expand_factor = get<double>(m, "faces.expand_factor");
    c.faces.ear_threshold = get<double>(m, "faces.ear_threshold");
    auto& fc = c.faces.cluster;
    fc.variance_target = get<double>(m, "faces.cluster.variance_target");
    fc.eps = get<double>(m, "faces.cluster.eps");
    fc.min_pts = get<int>(m, "faces.cluster.min_pts");
    fc.min_area = get<double>(m, "faces.cluster.min_area");
    fc.grid_halfwidth = get<int>(m, "faces.cluster.grid_halfwidth");
    // merge_patch drops null members, so an absent key means "no override".
    if (const auto& cl = m.at("faces").at("cluster"); cl.contains("base_k_override") && !cl.at("base_k_override").is_null())
        fc.base_k_override = get<int>(m, "faces.cluster.base_k_override");
    const auto space = get<std::string>(m, "faces.cluster.score_space");
    require(space == "original" || space == "projected", "faces.cluster.score_space must be original|projected");
    fc.score_in_projected_space = space == "projected";

    c.scoring.temperature = get<double>(m, "scoring.temperature");
    c.scoring.logo_grid_max = get<int>(m, "scoring.logo_grid_max");
    c.scoring.face_position.column_lo = get<double>(m, "scoring.face_position.column_lo");
    c.scoring.face_position.column_hi = get<double>(m, "scoring.face_position.column_hi");
    const auto rows = get<std::vector<double>>(m, "scoring.face_position.rows");
    require(rows.size() == 6, "scoring.face_position.rows must have 6 entries");
    std::copy(rows.begin(), rows.end(), c.scoring.face_position.rows.begin());
    c.scoring.face_position.side = get<double>(m, "scoring.face_position.side");

    c.weights.aesthetic = get<double>(m, "weights.aesthetic");
    c.weights.semantic = get<double>(m, "weights.semantic");
    c.weights.logo = get<double>(m, "weights.logo");
    c.weights.face_position = get<double>(m, "weights.face_position");
    c.weights.on_face_focus = get<double>(m, "weights.on_face_focus");
    try {
        c.weights.face_aggregation = scoring::parse_face_aggregation(get<std::string>(m, "weights.face_aggregation"));
    } catch (const ParseError& e) {
        throw ConfigError(e.what());
    }

    c.presets.per_section = get<int>(m, "presets.per_section");
    c.presets.main_cluster_coverage = get<double>(m, "presets.main_cluster_coverage");
    c.presets.weights = c.weights;
    c.reference.exact = get<double>(m, "reference.exact");
    c.reference.similar = get<double>(m, "reference.similar");

    c.keywords.endpoint = get<std::string>(m, "keywords.endpoint");
    c.keywords.max_keywords = get<int>(m, "keywords.max_keywords");
    c.keywords.max_tokens = get<int>(m, "keywords.max_tokens");
    c.keywords.retries = get<int>(m, "keywords.retries");
    c.keywords.timeout_s = get<double>(m, "keywords.timeout_s");

    c.service.host = get<std::string>(m, "service.host");
    c.service.port = get<int>(m, "service.port");
    c.service.embedding_endpoint = get<std::string>(m, "service.embedding_endpoint");
    c.service.histogram_bins = get<int>(m, "service.histogram_bins");

    c.validate();
    return c;
}

void EngineConfig::validate() const {
    require(workers >= 1, "workers must be >= 1");
    require(!aspects.empty(), "aspects must not be empty");
    require(downsample.working_edge >= 16, "downsample.working_edge must be >= 16");
    downsample.quality.validate();
    require(downsample.uniformity_top_fraction > 0.0 && downsample.uniformity_top_fraction <= 1.0,
            "downsample.quality.uniformity_top_fraction must lie in (0, 1]");
    require(downsample.shots.window >= 1, "downsample.shots.window must be >= 1");
    require(downsample.shots.min_shot_len >= 1, "downsample.shots.min_shot_len must be >= 1");
    require(downsample.shots.transition_radius >= 0, "downsample.shots.transition_radius must be >= 0");
    require(downsample.subshots.target_len >= 1, "downsample.subshots.target_len must be >= 1");
    require(downsample.subshots.max_iterations >= 1, "downsample.subshots.max_iterations must be >= 1");
    require(letterbox.sample_size >= 1, "letterbox.sample_size must be >= 1");
    require(group.variance_target > 0.0 && group.variance_target <= 1.0, "group.variance_target must lie in (0, 1]");
    require(group.eps > 0.0, "group.eps must be > 0");
    require(group.min_pts >= 1, "group.min_pts must be >= 1");
    require(crop.grid.grid >= 1, "crop.grid must be >= 1");
    require(crop.grid.min_area_ratio >= 0.0 && crop.grid.min_area_ratio <= 1.0, "crop.min_area_ratio must lie in [0, 1]");
    require(crop.filter.small_face_ratio >= 1.0, "crop.small_face_ratio must be >= 1");
    require(faces.expand_factor >= 1.0, "faces.expand_factor must be >= 1");
    require(faces.ear_threshold >= 0.0, "faces.ear_threshold must be >= 0");
    require(faces.cluster.variance_target > 0.0 && faces.cluster.variance_target <= 1.0,
            "faces.cluster.variance_target must lie in (0, 1]");
    require(faces.cluster.eps > 0.0, "faces.cluster.eps must be > 0");
    require(faces.cluster.min_pts >= 1, "faces.cluster.min_pts must be >= 1");
    require(faces.cluster.grid_halfwidth >= 0, "faces.cluster.grid_halfwidth must be >= 0");
    require(std::isfinite(scoring.temperature), "scoring.temperature must be finite");
    require(scoring.logo_grid_max >= 8, "scoring.logo_grid_max must be >= 8");
    weights.validate();
    require(presets.per_section >= 1, "presets.per_section must be >= 1");
    require(reference.exact >= reference.similar, "reference.exact must be >= reference.similar");
    require(service.histogram_bins >= 1, "service.histogram_bins must be >= 1");
    require(service.port >= 0 && service.port <= 65535, "service.port out of range");
}

EngineConfig load_config(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return config_from_json(j);
}

}  // namespace framepick
