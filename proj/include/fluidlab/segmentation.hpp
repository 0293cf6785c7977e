#pragma once

// Turn-taking segmentation: per-speaker RMS activity, gap/overlap marks, and
// targeted / non-targeted clip extraction.

#include "fluidlab/core.hpp"
#include "fluidlab/records.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace fluidlab {

struct SegmentationConfig {
    double rms_threshold = 0.05;
    double min_gap = 0.75;
    double pre = 3.0;
    double post = 4.0;
    double edge_exclusion = 10.0;
    double frame_len = 0.05;
    double hop = 0.01;

    double clip_length() const { return pre + post; }

    void validate() const
    {
        require(rms_threshold > 0.0 && rms_threshold < 1.0, "rms_threshold must be in (0, 1)");
        require(min_gap > 0.0, "min_gap must be positive");
        require(pre >= 0.0 && post >= 0.0 && std::abs(pre + post - 7.0) < 1e-9, "pre + post must equal 7 s");
        require(hop > 0.0 && frame_len >= hop, "need frame_len >= hop > 0");
        require(edge_exclusion >= 0.0, "edge_exclusion must be non-negative");
    }
};

/// Boolean activity per speaker on a shared frame grid. Frame i covers
/// [i * hop, i * hop + frame_len). A timeline built from intervals uses
/// frame_len == hop (point samples).
struct ActivityTimeline {
    std::vector<std::vector<bool>> active;
    double hop = 0.01;
    double frame_len = 0.01;
    double duration = 0.0;

    std::size_t frames() const { return active.empty() ? 0 : active.front().size(); }
    double frame_time(std::size_t i) const { return static_cast<double>(i) * hop; }

    int active_count(std::size_t i) const
    {
        int n = 0;
        for (const auto& s : active)
            n += s[i] ? 1 : 0;
        return n;
    }
};

/// Frame i covers samples [i*hop, i*hop + frame_len).
inline std::vector<double> compute_rms(std::span<const double> track, std::size_t frame_len, std::size_t hop)
{
    require(frame_len > 0 && hop > 0, "frame_len and hop must be at least one sample");
    require(track.size() >= frame_len, "track shorter than one frame (" + std::to_string(track.size()) + " < " +
                                           std::to_string(frame_len) + " samples)");
    const std::size_t n = (track.size() - frame_len) / hop + 1;
    std::vector<double> rms(n);
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        const double* x = track.data() + i * hop;
        for (std::size_t k = 0; k < frame_len; ++k)
            acc += x[k] * x[k];
        rms[i] = std::sqrt(acc / static_cast<double>(frame_len));
    }
    return rms;
}

inline std::size_t seconds_to_samples(double seconds, int rate)
{
    return static_cast<std::size_t>(std::max(1L, std::lround(seconds * rate)));
}

inline ActivityTimeline build_timeline(const SessionAudio& session, const SegmentationConfig& cfg)
{
    cfg.validate();
    require(!session.tracks.empty(), "session has zero tracks");
    require(session.sample_rate > 0, "sample_rate must be positive");
    const std::size_t frame = seconds_to_samples(cfg.frame_len, session.sample_rate);
    const std::size_t hop = seconds_to_samples(cfg.hop, session.sample_rate);
    ActivityTimeline tl;
    tl.hop = static_cast<double>(hop) / session.sample_rate;
    tl.frame_len = static_cast<double>(frame) / session.sample_rate;
    tl.duration = session.duration();
    for (const auto& t : session.tracks) {
        const auto rms = compute_rms(t.samples, frame, hop);
        std::vector<bool> act(rms.size());
        for (std::size_t i = 0; i < rms.size(); ++i)
            act[i] = rms[i] >= cfg.rms_threshold;
        tl.active.push_back(std::move(act));
    }
    return tl;
}

/// Builds a timeline directly from per-speaker active intervals [start, end).
inline ActivityTimeline timeline_from_intervals(const std::vector<std::vector<std::pair<double, double>>>& speakers,
                                                double duration, double hop)
{
    ActivityTimeline tl;
    tl.hop = hop;
    tl.frame_len = hop;
    tl.duration = duration;
    const auto n = static_cast<std::size_t>(std::floor(duration / hop + 1e-9));
    for (const auto& intervals : speakers) {
        std::vector<bool> act(n, false);
        for (auto [s, e] : intervals) {
            const auto a = static_cast<std::size_t>(std::max(0L, std::lround(s / hop)));
            const auto b = static_cast<std::size_t>(std::max(0L, std::lround(e / hop)));
            for (std::size_t i = a; i < std::min(b, n); ++i)
                act[i] = true;
        }
        tl.active.push_back(std::move(act));
    }
    return tl;
}

namespace detail {

inline constexpr double kTimeEps = 1e-9;

/// A frame counts as active as soon as a little speech enters its tail, so
/// activity runs start about frame_len - hop early and silence runs are that
/// much shorter than the real silence.
inline double frame_spread(const ActivityTimeline& tl) { return std::max(0.0, tl.frame_len - tl.hop); }

/// Onsets of maximal runs satisfying `pred`, filtered by minimum run duration,
/// clip-window bounds and the skip-forward rule. `shift` is added to the onset
/// time and `extend` to the run duration.
template <typename Pred>
std::vector<double> detect_runs(const ActivityTimeline& tl, const SegmentationConfig& cfg, double min_duration,
                                double shift, double extend, Pred pred)
{
    std::vector<double> marks;
    double horizon = -1e300;
    const std::size_t n = tl.frames();
    std::size_t i = 0;
    while (i < n) {
        if (!pred(i)) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < n && pred(j))
            ++j;
        const double onset = tl.frame_time(i) + shift;
        const double length = static_cast<double>(j - i) * tl.hop + extend;
        const bool long_enough = length + kTimeEps >= min_duration;
        const bool in_bounds = onset - cfg.pre >= -kTimeEps && onset + cfg.post <= tl.duration + kTimeEps;
        if (long_enough && in_bounds && onset + kTimeEps >= horizon) {
            marks.push_back(onset);
            horizon = onset + cfg.clip_length();
        }
        i = j;
    }
    return marks;
}

} // namespace detail

/// Onsets of all-speaker silences lasting at least `min_gap`. A new mark is
/// only emitted once the previous mark's clip window has ended.
inline std::vector<double> detect_gaps(const ActivityTimeline& tl, const SegmentationConfig& cfg)
{
    return detail::detect_runs(tl, cfg, cfg.min_gap, 0.0, detail::frame_spread(tl),
                               [&](std::size_t i) { return tl.active_count(i) == 0; });
}

/// Onsets of runs where two or more speakers are active at once, corrected for
/// the frame spread.
inline std::vector<double> detect_overlaps(const ActivityTimeline& tl, const SegmentationConfig& cfg)
{
    const double spread = detail::frame_spread(tl);
    return detail::detect_runs(tl, cfg, 0.0, spread, -spread, [&](std::size_t i) { return tl.active_count(i) >= 2; });
}

inline std::string clip_id_for(const std::string& session_id, ClipKind kind, double t)
{
    return session_id + "_" + to_string(kind) + "_" + std::to_string(std::llround(t * 1000.0));
}

inline std::vector<ClipManifest> extract_clips(const std::vector<double>& marks, ClipKind kind,
                                               const SegmentationConfig& cfg, const std::string& session_id)
{
    std::vector<ClipManifest> out;
    out.reserve(marks.size());
    for (double m : marks)
        out.push_back({clip_id_for(session_id, kind, m), session_id, m, m - cfg.pre, m + cfg.post, kind});
    return out;
}

/// Tiles the part of [edge, duration - edge] not covered by any targeted span
/// with back-to-back 7 s windows; leftovers shorter than a clip are dropped.
inline std::vector<ClipManifest> extract_non_targeted(const std::string& session_id, double duration,
                                                      const std::vector<ClipManifest>& targeted,
                                                      const SegmentationConfig& cfg)
{
    using detail::kTimeEps;
    const double lo = cfg.edge_exclusion;
    const double hi = duration - cfg.edge_exclusion;
    std::vector<ClipManifest> out;
    if (hi - lo + kTimeEps < cfg.clip_length())
        return out;

    std::vector<std::pair<double, double>> spans;
    for (const auto& c : targeted)
        spans.emplace_back(c.start, c.end);
    std::sort(spans.begin(), spans.end());

    auto tile = [&](double a, double b) {
        for (double s = a; s + cfg.clip_length() <= b + kTimeEps; s += cfg.clip_length())
            out.push_back({clip_id_for(session_id, ClipKind::non_targeted, s), session_id, s + cfg.pre, s,
                           s + cfg.clip_length(), ClipKind::non_targeted});
    };

    double cursor = lo;
    for (auto [s, e] : spans) {
        if (e <= cursor)
            continue;
        if (s > cursor)
            tile(cursor, std::min(s, hi));
        cursor = std::max(cursor, e);
        if (cursor >= hi)
            break;
    }
    if (cursor < hi)
        tile(cursor, hi);
    return out;
}

/// True when `mark` is the onset of a qualifying run on the timeline.
inline bool verify_gap_mark(const ActivityTimeline& tl, const SegmentationConfig& cfg, double mark)
{
    const auto i = static_cast<std::size_t>(std::llround(mark / tl.hop));
    if (i >= tl.frames() || tl.active_count(i) != 0)
        return false;
    if (i > 0 && tl.active_count(i - 1) == 0)
        return false;
    std::size_t j = i;
    while (j < tl.frames() && tl.active_count(j) == 0)
        ++j;
    return static_cast<double>(j - i) * tl.hop + detail::frame_spread(tl) + detail::kTimeEps >= cfg.min_gap;
}

inline bool verify_overlap_mark(const ActivityTimeline& tl, double mark)
{
    const auto i = static_cast<std::size_t>(std::llround((mark - detail::frame_spread(tl)) / tl.hop));
    if (i >= tl.frames() || tl.active_count(i) < 2)
        return false;
    return i == 0 || tl.active_count(i - 1) < 2;
}

struct SegmentationResult {
    std::vector<ClipManifest> gaps;
    std::vector<ClipManifest> overlaps;
    std::vector<ClipManifest> non_targeted;

    std::vector<ClipManifest> all() const
    {
        std::vector<ClipManifest> v = gaps;
        v.insert(v.end(), overlaps.begin(), overlaps.end());
        v.insert(v.end(), non_targeted.begin(), non_targeted.end());
        return v;
    }
};

inline SegmentationResult segment_session(const SessionAudio& session, const SegmentationConfig& cfg)
{
    const auto tl = build_timeline(session, cfg);
    SegmentationResult r;
    r.gaps = extract_clips(detect_gaps(tl, cfg), ClipKind::targeted_gap, cfg, session.session_id);
    r.overlaps = extract_clips(detect_overlaps(tl, cfg), ClipKind::targeted_overlap, cfg, session.session_id);
    std::vector<ClipManifest> targeted = r.gaps;
    targeted.insert(targeted.end(), r.overlaps.begin(), r.overlaps.end());
    r.non_targeted = extract_non_targeted(session.session_id, session.duration(), targeted, cfg);
    return r;
}

} // namespace fluidlab
