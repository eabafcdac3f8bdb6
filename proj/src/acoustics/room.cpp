#include "audionav/room.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "audionav/errors.hpp"
#include "audionav/fft.hpp"

namespace audionav::acoustics {

bool RoomSpec::contains(Vec2 p) const {
  return polygon_contains(corners_, p) && wall_clearance(p) > 1e-12;
}

double RoomSpec::wall_clearance(Vec2 p) const {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < wall_count(); ++i) best = std::min(best, point_segment_distance(p, wall(i)));
  return best;
}

double RoomSpec::signed_wall_distance(std::size_t i, Vec2 p) const {
  const Segment w = wall(i);
  return cross(w.direction(), p - w.a) / w.length();
}

RoomSpec make_room(const Geometry& geometry, std::span<const double> absorption, const RoomOptions& options) {
  RoomSpec room;
  if (const auto* box = std::get_if<Shoebox>(&geometry)) {
    if (!(box->width > 0.0) || !(box->height > 0.0) || !std::isfinite(box->width) ||
        !std::isfinite(box->height)) {
      throw GeometryError("shoebox dimensions must be positive and finite");
    }
    room.corners_ = {{0.0, 0.0}, {box->width, 0.0}, {box->width, box->height}, {0.0, box->height}};
    room.shoebox_ = true;
  } else {
    const auto& poly = std::get<Polygon>(geometry);
    if (poly.corners.size() < 3) throw GeometryError("polygon needs at least 3 corners");
    for (const Vec2& c : poly.corners) {
      if (!std::isfinite(c.x) || !std::isfinite(c.y)) throw GeometryError("non-finite polygon corner");
    }
    if (!is_simple_polygon(poly.corners)) throw GeometryError("polygon is degenerate or self-intersecting");
    room.corners_ = poly.corners;
  }

  const std::size_t n = room.corners_.size();
  if (absorption.size() != 1 && absorption.size() != n) {
    throw DomainError("absorption needs 1 or " + std::to_string(n) + " values");
  }
  std::vector<double> abs(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double a = absorption.size() == 1 ? absorption[0] : absorption[i];
    if (!(a >= 0.0 && a <= 1.0)) throw DomainError("absorption must lie in [0, 1]");
    abs[i] = a;
  }
  if (signed_area(room.corners_) < 0.0) {
    // Reversing the corners maps wall k onto original wall n - 2 - k.
    std::reverse(room.corners_.begin(), room.corners_.end());
    std::vector<double> reordered(n);
    for (std::size_t k = 0; k < n; ++k) reordered[k] = abs[(2 * n - 2 - k) % n];
    abs = std::move(reordered);
  }
  room.absorption_ = abs;
  room.reflection_.resize(n);
  for (std::size_t i = 0; i < n; ++i) room.reflection_[i] = std::sqrt(1.0 - abs[i]);

  Vec2 lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  Vec2 hi = -lo;
  for (const Vec2& c : room.corners_) {
    lo = {std::min(lo.x, c.x), std::min(lo.y, c.y)};
    hi = {std::max(hi.x, c.x), std::max(hi.y, c.y)};
  }
  room.bbox_min_ = lo;
  room.extent_ = hi - lo;

  if (!(options.sample_rate > 0.0)) throw DomainError("sample rate must be positive");
  if (!(options.speed_of_sound > 0.0)) throw DomainError("speed of sound must be positive");
  room.sample_rate_ = options.sample_rate;
  room.speed_of_sound_ = options.speed_of_sound;
  room.max_ism_order_ = options.max_ism_order.value_or(room.shoebox_ ? kDefaultShoeboxOrder : kDefaultPolygonOrder);
  if (room.max_ism_order_ < 0) throw DomainError("max_ism_order must be non-negative");
  return room;
}

RoomSpec make_room(const Geometry& geometry, double absorption, const RoomOptions& options) {
  return make_room(geometry, std::span<const double>(&absorption, 1), options);
}

MicrophonePair microphone_pair(const AgentPose& pose) {
  const double half = 0.5 * kEarSpacing;
  const Vec2 left_axis{-std::sin(pose.heading), std::cos(pose.heading)};
  return {pose.position + left_axis * half, pose.position - left_axis * half};
}

namespace {

void require_inside(const RoomSpec& room, Vec2 p, const char* what) {
  if (!room.contains(p)) throw DomainError(std::string(what) + " lies outside the room");
}

// Walls of the shoebox in corner order.
constexpr std::size_t kSouth = 0, kEast = 1, kNorth = 2, kWest = 3;

double lattice_coordinate(int index, double size, double s) {
  return index * size + ((std::abs(index) % 2 == 1) ? size - s : s);
}

// Reflections off the low wall (x = 0 or y = 0) and the high wall for a
// lattice index along one axis.
std::pair<int, int> lattice_bounces(int index) {
  const int m = std::abs(index);
  if (index > 0) return {m / 2, (m + 1) / 2};
  return {(m + 1) / 2, m / 2};
}

std::vector<ImageSource> shoebox_images(const RoomSpec& room, Vec2 source, int max_order) {
  const double w = room.width();
  const double h = room.height();
  std::vector<ImageSource> images;
  images.reserve(static_cast<std::size_t>(2 * max_order * (max_order + 1) + 1));
  for (int order = 0; order <= max_order; ++order) {
    for (int i = -order; i <= order; ++i) {
      const int rest = order - std::abs(i);
      for (int j : {-rest, rest}) {
        ImageSource img;
        img.position = {lattice_coordinate(i, w, source.x), lattice_coordinate(j, h, source.y)};
        img.order = order;
        const auto [west, east] = lattice_bounces(i);
        const auto [south, north] = lattice_bounces(j);
        img.gain = std::pow(room.reflection(kWest), west) * std::pow(room.reflection(kEast), east) *
                   std::pow(room.reflection(kSouth), south) * std::pow(room.reflection(kNorth), north);
        images.push_back(img);
        if (rest == 0) break;  // j = -0 and +0 coincide
      }
    }
  }
  return images;
}

// Breadth-first mirror tree; only mirrors across walls that face the parent.
std::vector<ImageSource> polygon_tree(const RoomSpec& room, Vec2 source, int max_order) {
  std::vector<ImageSource> nodes{{source, 0, 1.0, -1, -1}};
  std::size_t level_begin = 0;
  for (int order = 1; order <= max_order; ++order) {
    const std::size_t level_end = nodes.size();
    for (std::size_t k = level_begin; k < level_end; ++k) {
      for (std::size_t w = 0; w < room.wall_count(); ++w) {
        if (static_cast<int>(w) == nodes[k].wall) continue;
        if (room.signed_wall_distance(w, nodes[k].position) <= 1e-12) continue;
        ImageSource child;
        child.position = reflect_across(nodes[k].position, room.wall(w));
        child.order = order;
        child.gain = nodes[k].gain * room.reflection(w);
        child.wall = static_cast<int>(w);
        child.parent = static_cast<int>(k);
        nodes.push_back(child);
      }
    }
    level_begin = level_end;
  }
  return nodes;
}

bool same_position(Vec2 a, Vec2 b) { return distance(a, b) <= 1e-9 * std::max(1.0, a.norm()); }

// True when the open segment a-b crosses a wall other than the excluded ones.
bool path_blocked(const RoomSpec& room, Vec2 a, Vec2 b, int skip0, int skip1) {
  constexpr double eps = 1e-9;
  for (std::size_t w = 0; w < room.wall_count(); ++w) {
    const int wi = static_cast<int>(w);
    if (wi == skip0 || wi == skip1) continue;
    const Segment s = room.wall(w);
    if (auto hit = intersect_segments(a, b, s.a, s.b); hit && hit->t > eps && hit->t < 1.0 - eps) {
      return true;
    }
  }
  return false;
}

bool reaches(const RoomSpec& room, const std::vector<ImageSource>& tree, std::size_t k, Vec2 p, int wall_at_p) {
  const ImageSource& node = tree[k];
  if (node.parent < 0) return !path_blocked(room, p, node.position, wall_at_p, -1);
  const Segment w = room.wall(static_cast<std::size_t>(node.wall));
  const auto hit = intersect_segments(p, node.position, w.a, w.b);
  if (!hit || hit->t <= 1e-12) return false;
  const Vec2 q = p + (node.position - p) * hit->t;
  if (path_blocked(room, p, q, wall_at_p, node.wall)) return false;
  return reaches(room, tree, static_cast<std::size_t>(node.parent), q, node.wall);
}

std::vector<ImageSource> dedupe(const std::vector<ImageSource>& images) {
  std::vector<ImageSource> out;
  out.reserve(images.size());
  for (const ImageSource& img : images) {
    const bool seen = std::any_of(out.begin(), out.end(),
                                  [&](const ImageSource& o) { return same_position(o.position, img.position); });
    if (!seen) out.push_back(img);
  }
  return out;
}

} // namespace

std::vector<ImageSource> image_sources(const RoomSpec& room, Vec2 source, int max_order) {
  require_inside(room, source, "source");
  if (max_order < 0) throw DomainError("max_order must be non-negative");
  if (room.is_shoebox()) return shoebox_images(room, source, max_order);
  const auto tree = polygon_tree(room, source, max_order);
  // Collapse repeated positions and point parent links at the survivors.
  std::vector<ImageSource> images;
  std::vector<int> remap(tree.size(), -1);
  for (std::size_t k = 0; k < tree.size(); ++k) {
    for (std::size_t m = 0; m < images.size(); ++m) {
      if (same_position(images[m].position, tree[k].position)) {
        remap[k] = static_cast<int>(m);
        break;
      }
    }
    if (remap[k] >= 0) continue;
    remap[k] = static_cast<int>(images.size());
    ImageSource img = tree[k];
    img.parent = img.parent < 0 ? -1 : remap[static_cast<std::size_t>(img.parent)];
    images.push_back(img);
  }
  return images;
}

std::vector<ImageSource> visible_image_sources(const RoomSpec& room, Vec2 source, Vec2 mic, int max_order) {
  require_inside(room, source, "source");
  if (max_order < 0) throw DomainError("max_order must be non-negative");
  if (room.is_shoebox()) return shoebox_images(room, source, max_order);
  const auto tree = polygon_tree(room, source, max_order);
  std::vector<ImageSource> visible;
  for (std::size_t k = 0; k < tree.size(); ++k) {
    if (reaches(room, tree, k, mic, -1)) visible.push_back(tree[k]);
  }
  return dedupe(visible);
}

std::array<double, kKernelTaps> fractional_delay_kernel(double frac) {
  std::array<double, kKernelTaps> kernel{};
  for (int k = 0; k < kKernelTaps; ++k) {
    const double t = static_cast<double>(k - (kKernelHalfWidth - 1)) - frac;
    if (std::abs(t) >= kKernelHalfWidth) continue;
    const double window = 0.5 * (1.0 + std::cos(kPi * t / kKernelHalfWidth));
    const double sinc = t == 0.0 ? 1.0 : std::sin(kPi * t) / (kPi * t);
    kernel[static_cast<std::size_t>(k)] = window * sinc;
  }
  return kernel;
}

ImpulseResponse compute_rir(const RoomSpec& room, Vec2 source, Vec2 mic) {
  return compute_rir(room, source, mic, room.max_ism_order());
}

ImpulseResponse compute_rir(const RoomSpec& room, Vec2 source, Vec2 mic, int max_order) {
  if (distance(source, mic) < 1e-6) throw DomainError("source and microphone coincide");
  const auto images = visible_image_sources(room, source, mic, max_order);
  const double samples_per_metre = room.sample_rate() / room.speed_of_sound();

  struct Tap {
    long start;
    double frac;
    double amplitude;
  };
  std::vector<Tap> contributions;
  contributions.reserve(images.size());
  long last = 0;
  for (const ImageSource& img : images) {
    if (img.gain == 0.0) continue;
    const double d = distance(img.position, mic);
    const double delay = d * samples_per_metre;
    const double whole = std::floor(delay);
    contributions.push_back({static_cast<long>(whole) - (kKernelHalfWidth - 1), delay - whole, img.gain / d});
    last = std::max(last, contributions.back().start + kKernelTaps);
  }

  std::vector<double> taps(static_cast<std::size_t>(last + kKernelHalfWidth + 1), 0.0);
  for (const Tap& c : contributions) {
    const auto kernel = fractional_delay_kernel(c.frac);
    for (int k = 0; k < kKernelTaps; ++k) {
      const long n = c.start + k;
      if (n < 0) continue;  // causal truncation for very short paths
      taps[static_cast<std::size_t>(n)] += c.amplitude * kernel[static_cast<std::size_t>(k)];
    }
  }

  std::size_t keep = 1;
  for (std::size_t n = taps.size(); n-- > 0;) {
    if (std::abs(taps[n]) > 1e-12) {
      keep = n + 1 + kKernelHalfWidth;
      break;
    }
  }
  taps.resize(std::min(keep, taps.size()));
  if (taps.empty()) taps.push_back(0.0);
  return {std::move(taps), room.sample_rate()};
}

std::vector<double> source_window(const SourceSpec& source, std::size_t length) {
  if (source.signal.empty()) throw DomainError("source signal is empty");
  std::vector<double> out(length);
  const std::size_t n = source.signal.size();
  const std::size_t offset = n <= length ? 0 : source.playhead % n;
  for (std::size_t i = 0; i < length; ++i) out[i] = source.signal[(offset + i) % n];
  return out;
}

std::size_t render_length(const RoomSpec& room, double duration_s) {
  if (!(duration_s > 0.0)) throw DomainError("render duration must be positive");
  const auto n = static_cast<std::size_t>(std::llround(duration_s * room.sample_rate()));
  if (n == 0) throw DomainError("render duration shorter than one sample");
  return n;
}

namespace {

// Ears pressed against a wall may poke outside; pull them back toward the
// agent until they clear the boundary by 1 mm.
Vec2 ear_inside(const RoomSpec& room, Vec2 centre, Vec2 ear) {
  auto ok = [&](Vec2 p) { return room.contains(p) && room.wall_clearance(p) >= 1e-3; };
  if (ok(ear)) return ear;
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (ok(centre + (ear - centre) * mid)) lo = mid;
    else hi = mid;
  }
  return centre + (ear - centre) * lo;
}

void accumulate_source(const RoomSpec& room, const SourceSpec& source, const std::array<Vec2, 2>& ears,
                       std::size_t length, AudioBuffer& out) {
  const auto left = compute_rir(room, source.position, ears[0]);
  const auto right = compute_rir(room, source.position, ears[1]);
  const std::size_t h_len = std::min(std::max(left.taps.size(), right.taps.size()), length);
  const std::size_t n = good_fft_size(length + h_len - 1);
  RealFft& fft = cached_fft(n);

  const auto window = source_window(source, length);
  std::vector<std::complex<double>> x(fft.bins()), h(fft.bins());
  std::vector<double> y(n);
  fft.forward(window, x);
  const ImpulseResponse* rirs[2] = {&left, &right};
  for (int c = 0; c < 2; ++c) {
    const auto& taps = rirs[c]->taps;
    fft.forward(std::span<const double>(taps).first(std::min(taps.size(), length)), h);
    for (std::size_t k = 0; k < h.size(); ++k) h[k] *= x[k];
    fft.inverse(h, y);
    auto& dst = out.channels[static_cast<std::size_t>(c)];
    for (std::size_t i = 0; i < length; ++i) dst[i] += y[i];
  }
}

std::array<Vec2, 2> ears_for(const RoomSpec& room, const AgentPose& pose) {
  const auto mics = microphone_pair(pose);
  return {ear_inside(room, pose.position, mics.left), ear_inside(room, pose.position, mics.right)};
}

} // namespace

AudioBuffer render_binaural(const RoomSpec& room, std::span<const SourceSpec> sources, const AgentPose& pose,
                            double duration_s) {
  const std::size_t length = render_length(room, duration_s);
  const bool any_active = std::any_of(sources.begin(), sources.end(), [](const SourceSpec& s) { return s.active; });
  if (!any_active) throw EmptySceneError("no active source to render");
  const auto ears = ears_for(room, pose);
  AudioBuffer out = AudioBuffer::zeros(2, length, room.sample_rate());
  for (const SourceSpec& s : sources) {
    if (s.active) accumulate_source(room, s, ears, length, out);
  }
  return out;
}

AudioBuffer render_source(const RoomSpec& room, const SourceSpec& source, const AgentPose& pose, double duration_s) {
  const std::size_t length = render_length(room, duration_s);
  AudioBuffer out = AudioBuffer::zeros(2, length, room.sample_rate());
  accumulate_source(room, source, ears_for(room, pose), length, out);
  return out;
}

} // namespace audionav::acoustics
