#pragma once

// Per-clip modality pooling, fusion, standardization and PCA.

#include "fluidlab/core.hpp"
#include "fluidlab/records.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace fluidlab {

/// Dimensions of the fused layout: audio mean (audio_dim) | face AU mean and
/// std (2 * face_aus) | text (text_dim) | one presence flag per modality.
struct FusionLayout {
    std::size_t audio_dim = 128;
    std::size_t face_aus = 17;
    std::size_t text_dim = 384;

    std::size_t face_dim() const { return 2 * face_aus; }
    std::size_t width() const { return audio_dim + face_dim() + text_dim + 3; }

    std::vector<std::string> columns() const
    {
        std::vector<std::string> c;
        for (std::size_t i = 0; i < audio_dim; ++i)
            c.push_back("audio_" + std::to_string(i));
        for (std::size_t i = 0; i < face_aus; ++i)
            c.push_back("face_mean_au" + std::to_string(i));
        for (std::size_t i = 0; i < face_aus; ++i)
            c.push_back("face_std_au" + std::to_string(i));
        for (std::size_t i = 0; i < text_dim; ++i)
            c.push_back("text_" + std::to_string(i));
        c.insert(c.end(), {"has_audio", "has_face", "has_text"});
        return c;
    }
};

/// Raw embeddings of one clip. Face traces are time x action-unit matrices,
/// one per participant.
struct ClipEmbeddings {
    std::vector<std::vector<double>> audio_frames;
    std::vector<Matrix> face_participants;
    std::optional<std::vector<double>> text;
};

/// Fuses one clip into a fixed-length vector. A missing modality yields a zero
/// block and a cleared presence flag.
inline std::vector<double> pool_clip(const ClipEmbeddings& clip, const FusionLayout& layout)
{
    const bool has_audio = !clip.audio_frames.empty();
    const bool has_face = !clip.face_participants.empty();
    const bool has_text = clip.text.has_value();
    require(has_audio || has_face || has_text, "pool_clip: all modalities missing");

    std::vector<double> out(layout.width(), 0.0);
    std::size_t off = 0;
    if (has_audio) {
        for (const auto& f : clip.audio_frames) {
            require(f.size() == layout.audio_dim, "pool_clip: audio frame has " + std::to_string(f.size()) +
                                                      " dims, expected " + std::to_string(layout.audio_dim));
            for (std::size_t k = 0; k < f.size(); ++k)
                out[off + k] += f[k];
        }
        for (std::size_t k = 0; k < layout.audio_dim; ++k)
            out[off + k] /= static_cast<double>(clip.audio_frames.size());
    }
    off += layout.audio_dim;
    if (has_face) {
        for (const auto& p : clip.face_participants) {
            require(static_cast<std::size_t>(p.cols()) == layout.face_aus && p.rows() >= 1,
                    "pool_clip: face trace must be T x " + std::to_string(layout.face_aus));
            const Eigen::RowVectorXd mean = p.colwise().mean();
            const Eigen::RowVectorXd var = (p.rowwise() - mean).array().square().colwise().mean();
            for (std::size_t k = 0; k < layout.face_aus; ++k) {
                out[off + k] += mean(static_cast<Eigen::Index>(k));
                out[off + layout.face_aus + k] += std::sqrt(var(static_cast<Eigen::Index>(k)));
            }
        }
        for (std::size_t k = 0; k < layout.face_dim(); ++k)
            out[off + k] /= static_cast<double>(clip.face_participants.size());
    }
    off += layout.face_dim();
    if (has_text) {
        require(clip.text->size() == layout.text_dim, "pool_clip: text vector has " +
                                                          std::to_string(clip.text->size()) + " dims, expected " +
                                                          std::to_string(layout.text_dim));
        std::copy(clip.text->begin(), clip.text->end(), out.begin() + static_cast<std::ptrdiff_t>(off));
    }
    off += layout.text_dim;
    out[off] = has_audio;
    out[off + 1] = has_face;
    out[off + 2] = has_text;
    return out;
}

/// Groups embedding records by clip and pools every manifest clip. Audio rows
/// hold one or more concatenated frames; each face row is one participant's
/// time-major AU trace; text is a single row.
inline FeatureTable featurize(const std::vector<EmbeddingRecord>& records, const std::vector<ClipManifest>& manifest,
                              const FusionLayout& layout)
{
    std::unordered_map<std::string, ClipEmbeddings> by_clip;
    for (const auto& r : records) {
        auto& c = by_clip[r.clip_id];
        switch (r.modality) {
        case Modality::audio:
            require(r.dims() % layout.audio_dim == 0, "clip '" + r.clip_id + "': audio row of " +
                                                          std::to_string(r.dims()) + " dims is not a multiple of " +
                                                          std::to_string(layout.audio_dim));
            for (std::size_t s = 0; s < r.dims(); s += layout.audio_dim)
                c.audio_frames.emplace_back(r.vector.begin() + static_cast<std::ptrdiff_t>(s),
                                            r.vector.begin() + static_cast<std::ptrdiff_t>(s + layout.audio_dim));
            break;
        case Modality::face: {
            require(r.dims() % layout.face_aus == 0, "clip '" + r.clip_id + "': face row of " +
                                                         std::to_string(r.dims()) + " dims is not a multiple of " +
                                                         std::to_string(layout.face_aus));
            const auto t = static_cast<Eigen::Index>(r.dims() / layout.face_aus);
            c.face_participants.push_back(
                Eigen::Map<const Matrix>(r.vector.data(), t, static_cast<Eigen::Index>(layout.face_aus)));
            break;
        }
        case Modality::text:
            require(!c.text, "clip '" + r.clip_id + "': more than one text row");
            c.text = r.vector;
            break;
        }
    }
    FeatureTable t;
    t.columns = layout.columns();
    t.values = Matrix::Zero(static_cast<Eigen::Index>(manifest.size()), static_cast<Eigen::Index>(layout.width()));
    for (std::size_t i = 0; i < manifest.size(); ++i) {
        const auto& m = manifest[i];
        auto it = by_clip.find(m.clip_id);
        require(it != by_clip.end(), "clip '" + m.clip_id + "': all modalities missing");
        const auto v = pool_clip(it->second, layout);
        for (std::size_t j = 0; j < v.size(); ++j)
            t.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v[j];
        t.clip_ids.push_back(m.clip_id);
        t.session_ids.push_back(m.session_id);
        t.kinds.push_back(m.kind);
    }
    return t;
}

// ---------------------------------------------------------------- standardizer

inline constexpr double kScaleFloor = 1e-12;

struct Standardizer {
    Eigen::RowVectorXd means;
    Eigen::RowVectorXd scales;

    Matrix apply(const Matrix& x) const
    {
        require(x.cols() == means.size(), "standardizer: expected " + std::to_string(means.size()) + " columns, got " +
                                              std::to_string(x.cols()));
        return ((x.rowwise() - means).array().rowwise() / scales.array()).matrix();
    }
};

/// Population std per column; columns with std below the floor get scale 1
/// so that they map to exactly zero.
inline Standardizer fit_standardizer(const Matrix& train)
{
    require(train.rows() >= 1, "fit_standardizer: empty training set");
    require(train.allFinite(), "fit_standardizer: non-finite input");
    Standardizer s;
    s.means = train.colwise().mean();
    s.scales = ((train.rowwise() - s.means).array().square().colwise().mean()).sqrt().matrix();
    for (Eigen::Index j = 0; j < s.scales.size(); ++j)
        if (!(s.scales(j) >= kScaleFloor))
            s.scales(j) = 1.0;
    return s;
}

// ---------------------------------------------------------------- PCA

/// `std::nullopt` means PCA is off; otherwise the retained fraction in [0.2, 1].
using RetainedVariance = std::optional<double>;

struct Pca {
    Eigen::RowVectorXd mean;
    Matrix basis;                  // d x k, orthonormal columns
    Eigen::VectorXd eigenvalues;   // all components, non-increasing
    Eigen::VectorXd explained_ratio;

    std::size_t components() const { return static_cast<std::size_t>(basis.cols()); }

    Matrix project(const Matrix& x) const
    {
        require(x.cols() == basis.rows(), "pca: expected " + std::to_string(basis.rows()) + " columns, got " +
                                              std::to_string(x.cols()));
        return (x.rowwise() - mean) * basis;
    }

    Matrix reconstruct(const Matrix& scores) const
    {
        return (scores * basis.transpose()).rowwise() + mean;
    }
};

/// PCA by thin SVD of the centered matrix (covariance denominator n - 1).
/// Keeps the smallest k whose cumulative explained ratio reaches `retained`,
/// but at least `min_components` when available. Each component is signed so
/// that its largest-magnitude loading is positive.
inline Pca fit_pca(const Matrix& train, double retained, std::size_t min_components = 1)
{
    require(retained >= 0.2 - 1e-12 && retained <= 1.0 + 1e-12,
            "fit_pca: retained variance must be in [0.2, 1.0] or off");
    require(train.rows() >= 2, "fit_pca: need at least 2 rows");
    require(train.allFinite(), "fit_pca: non-finite input");

    Pca p;
    p.mean = train.colwise().mean();
    const Eigen::MatrixXd centered = train.rowwise() - p.mean;
    Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
    const Eigen::VectorXd s = svd.singularValues();
    const Eigen::Index m = s.size();
    p.eigenvalues = s.array().square() / static_cast<double>(train.rows() - 1);
    const double total = p.eigenvalues.sum();
    p.explained_ratio = total > 0 ? Eigen::VectorXd(p.eigenvalues / total) : Eigen::VectorXd::Zero(m);

    Eigen::Index k = m;
    double cum = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
        cum += p.explained_ratio(i);
        if (cum >= retained - 1e-12) {
            k = i + 1;
            break;
        }
    }
    if (total <= 0)
        k = 1;
    k = std::max<Eigen::Index>(k, std::min<Eigen::Index>(static_cast<Eigen::Index>(min_components), m));

    p.basis = svd.matrixV().leftCols(k);
    for (Eigen::Index c = 0; c < k; ++c) {
        Eigen::Index arg = 0;
        p.basis.col(c).cwiseAbs().maxCoeff(&arg);
        if (p.basis(arg, c) < 0)
            p.basis.col(c) *= -1.0;
    }
    return p;
}

/// Standardize, then optionally project onto principal components.
struct Preprocessor {
    Standardizer standardizer;
    std::optional<Pca> pca;

    std::size_t output_dim() const
    {
        return pca ? pca->components() : static_cast<std::size_t>(standardizer.means.size());
    }

    Matrix apply(const Matrix& x) const
    {
        Matrix z = standardizer.apply(x);
        return pca ? pca->project(z) : z;
    }
};

inline Preprocessor fit_preprocessor(const Matrix& train, RetainedVariance retained, std::size_t min_components = 1)
{
    Preprocessor p;
    p.standardizer = fit_standardizer(train);
    if (retained)
        p.pca = fit_pca(p.standardizer.apply(train), *retained, min_components);
    return p;
}

} // namespace fluidlab
