// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "framepick/dataset.hpp"
#include "framepick/scoring.hpp"

namespace framepick::selection {

struct Ranked {
    std::size_t index = 0;  // into Dataset::candidates
    scoring::ScoreVector scores;  // normalized, as used for `final`
    double final = 0.0;
};

// Descending final; ties by frame id, then candidate id.
void sort_ranked(std::vector<Ranked>& ranked, const Dataset& ds);

// Keeps the best entry of each group (input must be sorted by sort_ranked).
[[nodiscard]] std::vector<Ranked> pick_group_representatives(std::span<const Ranked> ranked, const Dataset& ds);

struct SearchFilters {
    std::optional<int> min_faces;
    std::optional<int> max_faces;
    std::vector<Emotion> emotions;    // any face matches
    bool eyes_open_only = false;      // no face has closed eyes
    std::vector<int> clusters;        // any face matches
    std::vector<ShotScale> shot_scales;
};

struct SearchQuery {
    AspectTag aspect = parse_aspect("original");
    SearchFilters filters;
    std::vector<std::string> keywords;  // empty: every dataset keyword
    scoring::WeightConfig weights;
    int page = 0;
    int page_size = 24;
    bool reverse = false;
    bool dedup_groups = true;
};

// Raw cosine per candidate (Dataset::candidates order) for keywords that are
// not part of the dataset file.
using ExtraKeywords = std::map<std::string, std::vector<double>>;

struct SearchResult {
    std::vector<Ranked> hits;  // requested page
    int total = 0;             // after filtering and dedup
    std::map<std::string, std::map<std::string, int>> facets;
};

[[nodiscard]] bool passes(const Candidate& c, const SearchFilters& f);

// Scores every candidate of the query's aspect (semantic column = mean raw
// cosine over the selected keywords, normalized over the aspect), filters,
// ranks, deduplicates by group and paginates. Throws ValidationError for an
// unknown keyword and ConfigError for invalid weights or paging.
[[nodiscard]] SearchResult search(const Dataset& ds, const SearchQuery& q, const ExtraKeywords* extra = nullptr);

// Full ranking of one aspect without filters or paging.
[[nodiscard]] std::vector<Ranked> rank_all(const Dataset& ds, const AspectTag& aspect,
                                           const scoring::WeightConfig& weights,
                                           const std::vector<std::string>& keywords = {},
                                           const ExtraKeywords* extra = nullptr);

// Sets each Group::representative to its best frame under `weights` on the
// given aspect.
void assign_representatives(Dataset& ds, const AspectTag& aspect, const scoring::WeightConfig& weights);

enum class Preset { main_characters, per_emotion, per_keyword };
std::string_view to_string(Preset p);
Preset parse_preset(std::string_view s);

struct ProposalEntry {
    std::string candidate_id;
    int group_id = 0;
    int frame_id = 0;
    Rect rect;
    double final = 0.0;
    scoring::ScoreVector scores;
};

struct ProposalSection {
    std::string key;    // cluster id / emotion / keyword
    std::string label;
    std::vector<ProposalEntry> entries;
};

struct ProposalSet {
    Preset preset = Preset::main_characters;
    AspectTag aspect;
    std::vector<ProposalSection> sections;
    std::string reason;  // set when empty
};

struct PresetConfig {
    int per_section = 4;
    double main_cluster_coverage = 0.6;
    scoring::WeightConfig weights;  // base weights; presets zero what they exclude
};

[[nodiscard]] ProposalSet preset_main_characters(const Dataset& ds, const AspectTag& aspect,
                                                 const PresetConfig& cfg = {});
[[nodiscard]] ProposalSet preset_per_emotion(const Dataset& ds, const AspectTag& aspect,
                                             const PresetConfig& cfg = {});
[[nodiscard]] ProposalSet preset_per_keyword(const Dataset& ds, const AspectTag& aspect,
                                             const PresetConfig& cfg = {});

// Clusters, largest first, whose cumulative size first reaches `coverage` of
// all clustered appearances (at least one).
[[nodiscard]] std::vector<int> main_clusters(const Dataset& ds, double coverage);

[[nodiscard]] nlohmann::json to_json(const scoring::ScoreVector& s);
[[nodiscard]] nlohmann::json to_json(const ProposalSet& p);

enum class MatchTier { exact, similar, none };
std::string_view to_string(MatchTier t);

struct MatchThresholds {
    double exact = 0.886;
    double similar = 0.799;
};

struct MatchReport {
    double best_similarity = 0.0;
    std::string candidate_id;
    MatchTier tier = MatchTier::none;
};

struct EmbeddedCandidate {
    std::string id;
    std::vector<float> embedding;
};

// Closest candidate by cosine. Throws ValidationError on an empty set.
[[nodiscard]] MatchReport evaluate_against_reference(std::span<const EmbeddedCandidate> candidates,
                                                     std::span<const float> reference,
                                                     const MatchThresholds& thresholds = {});

}  // namespace framepick::selection
