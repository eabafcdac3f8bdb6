#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "audionav/audio.hpp"
#include "audionav/geometry.hpp"

namespace audionav::acoustics {

struct Shoebox {
  double width = 0.0;
  double height = 0.0;
};

/// Corners in either winding order; stored counter-clockwise.
struct Polygon {
  std::vector<Vec2> corners;
};

using Geometry = std::variant<Shoebox, Polygon>;

inline constexpr int kDefaultShoeboxOrder = 10;
inline constexpr int kDefaultPolygonOrder = 3;

struct RoomOptions {
  double sample_rate = 8000.0;
  double speed_of_sound = 343.0;
  /// Defaults to kDefaultShoeboxOrder or kDefaultPolygonOrder.
  std::optional<int> max_ism_order;
};

/// Validated, immutable planar room. Wall i runs from corner i to corner
/// i + 1; a shoebox has corners (0,0), (w,0), (w,h), (0,h), so its walls are
/// south, east, north, west in that order.
class RoomSpec {
public:
  std::span<const Vec2> corners() const { return corners_; }
  std::size_t wall_count() const { return corners_.size(); }
  Segment wall(std::size_t i) const { return {corners_[i], corners_[(i + 1) % corners_.size()]}; }

  bool is_shoebox() const { return shoebox_; }
  /// Bounding-box extents (exact room size for a shoebox).
  double width() const { return extent_.x; }
  double height() const { return extent_.y; }
  Vec2 bbox_min() const { return bbox_min_; }

  double absorption(std::size_t wall) const { return absorption_[wall]; }
  /// Amplitude reflection coefficient sqrt(1 - absorption).
  double reflection(std::size_t wall) const { return reflection_[wall]; }

  double sample_rate() const { return sample_rate_; }
  double speed_of_sound() const { return speed_of_sound_; }
  int max_ism_order() const { return max_ism_order_; }

  /// Strictly inside: within the polygon and off every wall.
  bool contains(Vec2 p) const;
  /// Distance from `p` to the closest wall segment.
  double wall_clearance(Vec2 p) const;
  /// Signed distance to wall `i`'s supporting line, positive on the room side.
  double signed_wall_distance(std::size_t i, Vec2 p) const;

private:
  friend RoomSpec make_room(const Geometry&, std::span<const double>, const RoomOptions&);

  std::vector<Vec2> corners_;
  std::vector<double> absorption_;
  std::vector<double> reflection_;
  bool shoebox_ = false;
  Vec2 bbox_min_;
  Vec2 extent_;
  double sample_rate_ = 8000.0;
  double speed_of_sound_ = 343.0;
  int max_ism_order_ = kDefaultShoeboxOrder;
};

/// `absorption` holds one uniform value or one value per wall.
/// Throws GeometryError for degenerate geometry and DomainError for
/// out-of-range absorption or acoustic constants.
RoomSpec make_room(const Geometry& geometry, std::span<const double> absorption,
                   const RoomOptions& options = {});
RoomSpec make_room(const Geometry& geometry, double absorption, const RoomOptions& options = {});

struct SourceSpec {
  Vec2 position;
  std::vector<double> signal;
  double threshold_radius = 1.0;
  bool active = true;
  /// Read offset for signals longer than the render window.
  std::size_t playhead = 0;
};

inline constexpr double kEarSpacing = 0.20;

struct MicrophonePair {
  Vec2 left;
  Vec2 right;
};

/// Ears sit kEarSpacing apart on the axis perpendicular to the heading;
/// the left ear is 90 degrees counter-clockwise from the heading.
MicrophonePair microphone_pair(const AgentPose& pose);

struct ImageSource {
  Vec2 position;
  int order = 0;
  /// Product of the reflection coefficients along the path.
  double gain = 1.0;
  /// Wall that generated this image, -1 for the real source.
  int wall = -1;
  /// Index of the parent image within the returned list, -1 for the real source.
  int parent = -1;
};

/// Image sources up to `max_order`, lowest order first; entry 0 is the
/// source itself. Shoebox rooms use the reflection lattice; polygon rooms
/// return every valid mirror (source in front of the mirroring wall) with
/// repeated positions collapsed. Throws DomainError if the source is not
/// inside the room.
std::vector<ImageSource> image_sources(const RoomSpec& room, Vec2 source, int max_order);

/// Images that reach `mic` along a valid reflection path, without
/// duplicate positions. For shoebox rooms this equals image_sources().
std::vector<ImageSource> visible_image_sources(const RoomSpec& room, Vec2 source, Vec2 mic,
                                               int max_order);

inline constexpr int kKernelTaps = 64;
inline constexpr int kKernelHalfWidth = kKernelTaps / 2;

/// Hann-windowed sinc interpolator for a delay with fractional part `frac`
/// in [0, 1). Tap k lands on sample floor(delay) - (kKernelHalfWidth - 1) + k.
std::array<double, kKernelTaps> fractional_delay_kernel(double frac);

struct ImpulseResponse {
  std::vector<double> taps;
  double sample_rate = 8000.0;
};

/// Image-source RIR from `source` to `mic` with 1/d spreading and
/// fractional-delay taps. Throws DomainError when the points coincide.
ImpulseResponse compute_rir(const RoomSpec& room, Vec2 source, Vec2 mic);
ImpulseResponse compute_rir(const RoomSpec& room, Vec2 source, Vec2 mic, int max_order);

/// `length` samples of the source signal: tiled from the start when the
/// signal is no longer than `length`, otherwise read cyclically from the
/// playhead.
std::vector<double> source_window(const SourceSpec& source, std::size_t length);

std::size_t render_length(const RoomSpec& room, double duration_s);

/// Stereo (left, right) mixture of all active sources heard at the agent.
/// Throws EmptySceneError when no source is active.
AudioBuffer render_binaural(const RoomSpec& room, std::span<const SourceSpec> sources,
                            const AgentPose& pose, double duration_s);

/// Stereo render of a single source regardless of its active flag.
AudioBuffer render_source(const RoomSpec& room, const SourceSpec& source, const AgentPose& pose,
                          double duration_s);

} // namespace audionav::acoustics
