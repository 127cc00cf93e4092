// SPDX-License-Identifier: Apache-2.0
#include "framepick/validate.hpp"

#include <set>

namespace framepick {

std::string_view to_string(IssueKind k) {
    switch (k) {
        case IssueKind::missing_artifact: return "missing-artifact";
        case IssueKind::dangling_reference: return "dangling-reference";
        case IssueKind::dimension_mismatch: return "dimension-mismatch";
        case IssueKind::duplicate_id: return "duplicate-id";
        case IssueKind::invalid_value: return "invalid-value";
    }
    return "invalid-value";
}

nlohmann::json ValidationReport::to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& i : issues)
        arr.push_back({{"kind", to_string(i.kind)}, {"item", i.item}, {"detail", i.detail}});
    return {{"usable", usable()}, {"issues", arr}};
}

namespace {

// Row id prefix before '/', so "face7/2" names an extra appearance of face7.
std::string base_id(const std::string& id) {
    const auto slash = id.find('/');
    return slash == std::string::npos ? id : id.substr(0, slash);
}

}  // namespace

ValidationReport validate_dataset(const VideoManifest& manifest, const ingest::ArtifactIndex& a) {
    ValidationReport report;
    auto add = [&](IssueKind k, std::string item, std::string detail) {
        report.issues.push_back({k, std::move(item), std::move(detail)});
    };

    for (const auto& f : a.missing_files) add(IssueKind::missing_artifact, f, "required file not found");

    std::set<int> frame_ids;
    for (const auto& f : a.frames)
        if (!frame_ids.insert(f.frame_id).second)
            add(IssueKind::duplicate_id, "frame " + std::to_string(f.frame_id), "listed twice in frames index");

    for (const auto& kw : manifest.keywords) {
        if (kw.embedding.empty())
            add(IssueKind::missing_artifact, "keyword '" + kw.text + "'", "no embedding in sidecar");
        else if (manifest.embedding_dim > 0 && int(kw.embedding.size()) != manifest.embedding_dim)
            add(IssueKind::dimension_mismatch, "keyword '" + kw.text + "'",
                "dim " + std::to_string(kw.embedding.size()) + " != manifest " +
                    std::to_string(manifest.embedding_dim));
    }

    auto check_dim = [&](const std::optional<ingest::TensorFile>& t, const char* name, int expected) {
        if (t && expected > 0 && t->dim != expected)
            add(IssueKind::dimension_mismatch, name,
                "dim " + std::to_string(t->dim) + " != expected " + std::to_string(expected));
    };
    check_dim(a.frame_embeddings, "frame_embeddings", manifest.embedding_dim);
    check_dim(a.crop_embeddings, "crop_embeddings", manifest.embedding_dim);
    check_dim(a.prompt_embeddings, "prompt_embeddings", manifest.embedding_dim);
    check_dim(a.face_embeddings, "face_embeddings", manifest.face_embedding_dim);

    if (a.frame_embeddings) {
        for (const auto& id : a.frame_embeddings->row_ids) {
            int fid = 0;
            try {
                fid = std::stoi(id);
            } catch (const std::exception&) {
                add(IssueKind::invalid_value, "frame embedding '" + id + "'", "row id is not a frame id");
                continue;
            }
            if (!frame_ids.count(fid))
                add(IssueKind::dangling_reference, "frame embedding '" + id + "'", "embedding without frame");
        }
    }
    if (a.crop_embeddings) {
        for (const auto& id : a.crop_embeddings->row_ids) {
            const auto at = id.find('@');
            bool ok = at != std::string::npos;
            if (ok) {
                try {
                    ok = frame_ids.count(std::stoi(id.substr(0, at))) > 0;
                } catch (const std::exception&) {
                    ok = false;
                }
            }
            if (!ok) add(IssueKind::dangling_reference, "crop embedding '" + id + "'", "embedding without frame");
        }
    }
    if (a.prompt_embeddings) {
        for (const char* p : {"good", "bad"})
            if (!a.prompt_embeddings->find(p))
                add(IssueKind::missing_artifact, std::string("prompt '") + p + "'", "row missing in prompt_embeddings");
    }

    std::set<std::string> face_ids;
    for (const auto& f : a.faces) {
        if (!face_ids.insert(f.face_id).second)
            add(IssueKind::duplicate_id, "face " + f.face_id, "listed twice");
        if (!frame_ids.count(f.frame_id))
            add(IssueKind::dangling_reference, "face " + f.face_id,
                "references unknown frame " + std::to_string(f.frame_id));
    }
    if (a.face_embeddings) {
        for (const auto& id : a.face_embeddings->row_ids)
            if (!face_ids.count(base_id(id)))
                add(IssueKind::dangling_reference, "face embedding '" + id + "'", "embedding without face");
    }
    for (const auto& l : a.landmarks)
        if (!face_ids.count(l.face_id))
            add(IssueKind::dangling_reference, "landmarks " + l.face_id, "references unknown face");
    for (const auto& e : a.emotions)
        if (!face_ids.count(e.face_id))
            add(IssueKind::dangling_reference, "emotion " + e.face_id, "references unknown face");
    for (const auto& s : a.shot_scales)
        if (!frame_ids.count(s.frame_id))
            add(IssueKind::dangling_reference, "shot scale " + std::to_string(s.frame_id), "references unknown frame");
    for (int fid : a.saliency_frames)
        if (!frame_ids.count(fid))
            add(IssueKind::dangling_reference, "saliency " + std::to_string(fid), "references unknown frame");
    return report;
}

}  // namespace framepick
