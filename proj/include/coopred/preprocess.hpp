#pragma once

#include <map>
#include <string>
#include <vector>

#include "coopred/geom.hpp"
#include "coopred/scene.hpp"

namespace coopred {

/// Keeps every factor-th frame counted backward from the final frame, so the
/// last observation is always retained. Mask, scores, and timestamps of the
/// retained frames are kept verbatim. factor=1 is the identity.
/// Throws std::invalid_argument when factor < 1.
Track downsample(const Track& track, int factor);
FutureTrajectory downsample_future(const FutureTrajectory& future, int factor);
std::vector<SignalPhase> downsample_phases(const std::vector<SignalPhase>& phases, int factor);

/// Score-based prestitch of AV-view histories from infrastructure
/// observations. For every AV-view frame with mask 0 whose associated infra
/// track observes the frame, the full infra state is copied in and the mask
/// set to 1; where both views observe a frame the higher detection score
/// wins, ties keeping the AV view. Infra tracks are not modified.
/// `association` maps AV-view object ids to infra-view object ids; entries
/// naming unknown ids throw std::invalid_argument.
std::vector<Track> stitch_histories(const std::vector<Track>& av_tracks,
                                    const std::vector<Track>& infra_tracks,
                                    const std::map<std::string, std::string>& association);

/// Fits one degree-5 polynomial per axis through six boundary conditions:
/// position, velocity, and acceleration at t=0 taken from the last of
/// `recent_states` (acceleration estimated by finite differences over up to
/// the last 3 states) and at t=T from the end of `future_gt` (derivatives by
/// finite differences on the final points). Returns the polynomial sampled
/// at dt, 2*dt, ..., future_gt.size()*dt.
/// Throws std::invalid_argument on empty recent_states, fewer than 2 future
/// points, or dt <= 0.
std::vector<Vec2> synthesize_planning(const std::vector<ObjectState>& recent_states,
                                      const std::vector<Vec2>& future_gt, double dt);

/// Local frame of an object: position and heading at the last valid frame.
/// Throws std::invalid_argument when the track has no valid frame.
ReferenceFrame compute_reference_frame(const Track& track);

/// Local frame of a map element: centroid of its points, oriented along the
/// longest constituent segment (first occurrence wins ties).
ReferenceFrame compute_reference_frame(const MapElement& element);

/// Rigid transform taking the source frame into the destination frame.
RelativePose relative_transform(const ReferenceFrame& source, const ReferenceFrame& dest);
RelativePose inverse(const RelativePose& pose);
RelativePose compose(const RelativePose& a_to_b, const RelativePose& b_to_c);

/// Expresses a track in `frame` coordinates. Masked frames stay exactly
/// all-zero; timestamps are unchanged.
Track to_local(const Track& track, const ReferenceFrame& frame);
std::vector<Vec2> to_local(const std::vector<Vec2>& points, const ReferenceFrame& frame);

/// Full scene preprocessing at a downsampling factor: both views and all
/// future/ signal sequences are downsampled, the AV view is prestitched from
/// the infra view under the identity id association (unless stitch = false),
/// and the AV planning trajectory is synthesized from its ground-truth
/// future. Horizon and frequency fields are updated accordingly.
void preprocess_scene(Scene& scene, int downsample_factor, bool stitch = true);

}  // namespace coopred
