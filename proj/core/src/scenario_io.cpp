// Copyright 2026 The bevmotion Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "bevmotion/scenario_io.hpp"

#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "bevmotion/error.hpp"
#include "bevmotion/grid_io.hpp"

namespace bevmotion
{
namespace
{

using Json = nlohmann::ordered_json;

constexpr std::array<char, 4> kPtsMagic = {'P', 'T', 'S', '1'};

std::string_view geometry_name(MapGeometry g) { return g == MapGeometry::kPolygon ? "polygon" : "polyline"; }

Json pose_array(const Waypoint & w) { return Json::array({w.cx, w.cy, w.heading}); }

// Checked accessors for scn-1 documents: every problem is an InputError with a JSON path.
const Json & member(const Json & obj, const char * key, const std::string & where)
{
  if (!obj.is_object() || !obj.contains(key)) {
    throw InputError("scn-1: missing '" + std::string(key) + "' in " + where);
  }
  return obj.at(key);
}

double number(const Json & v, const std::string & where)
{
  if (!v.is_number()) {
    throw InputError("scn-1: expected a number at " + where);
  }
  return v.get<double>();
}

std::uint64_t unsigned_number(const Json & v, const std::string & where)
{
  if (!v.is_number_unsigned()) {
    throw InputError("scn-1: expected a non-negative integer at " + where);
  }
  return v.get<std::uint64_t>();
}

Waypoint parse_pose(const Json & v, const std::string & where)
{
  if (!v.is_array() || v.size() != 3) {
    throw InputError("scn-1: expected [x, y, heading] at " + where);
  }
  return {number(v[0], where), number(v[1], where), number(v[2], where)};
}

std::vector<Waypoint> parse_poses(const Json & v, const std::string & where)
{
  if (!v.is_array()) {
    throw InputError("scn-1: expected an array at " + where);
  }
  std::vector<Waypoint> out;
  out.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.push_back(parse_pose(v[i], where + "[" + std::to_string(i) + "]"));
  }
  return out;
}

// Spec parsing: strict about unknown keys and types, reported as ConfigError.
class SpecReader
{
public:
  SpecReader(const Json & obj, std::string path) : obj_(obj), path_(std::move(path))
  {
    if (!obj_.is_object()) {
      throw ConfigError("scenario spec field '" + display() + "': expected an object");
    }
  }

  ~SpecReader() = default;
  SpecReader(const SpecReader &) = delete;
  SpecReader & operator=(const SpecReader &) = delete;

  void read(const char * key, double & out)
  {
    if (const Json * v = find(key)) {
      if (!v->is_number()) {
        fail(key, "expected a number");
      }
      out = v->get<double>();
    }
  }

  void read(const char * key, std::size_t & out)
  {
    if (const Json * v = find(key)) {
      if (!v->is_number_integer() || v->get<std::int64_t>() < 0) {
        fail(key, "expected a non-negative integer");
      }
      out = v->get<std::size_t>();
    }
  }

  void read(const char * key, std::uint64_t & out, int /*tag*/)
  {
    if (const Json * v = find(key)) {
      if (!v->is_number_unsigned()) {
        fail(key, "expected a non-negative integer");
      }
      out = v->get<std::uint64_t>();
    }
  }

  void read(const char * key, bool & out)
  {
    if (const Json * v = find(key)) {
      if (!v->is_boolean()) {
        fail(key, "expected true or false");
      }
      out = v->get<bool>();
    }
  }

  const Json * child(const char * key) { return find(key); }
  std::string field(const char * key) const { return path_.empty() ? key : path_ + "." + key; }

  /// Throws for any key that was never requested.
  void finish() const
  {
    for (const auto & item : obj_.items()) {
      if (seen_.count(item.key()) == 0) {
        throw ConfigError("scenario spec field '" + field(item.key().c_str()) + "': unknown field");
      }
    }
  }

  [[noreturn]] void fail(const char * key, const std::string & why) const
  {
    throw ConfigError("scenario spec field '" + field(key) + "': " + why);
  }

private:
  const Json * find(const char * key)
  {
    seen_.insert(key);
    const auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }
  std::string display() const { return path_.empty() ? "<root>" : path_; }

  const Json & obj_;
  std::string path_;
  std::set<std::string> seen_;
};

}  // namespace

std::string scenario_to_json(const Scenario & sc)
{
  Json doc;
  doc["version"] = std::string(kScenarioFormat);
  doc["seed"] = sc.seed;
  doc["frame_rate"] = sc.frame_rate;
  doc["history_frames"] = sc.history_frames;
  doc["future_frames"] = sc.future_frames;
  doc["duration"] = sc.duration();
  doc["sensor_height"] = sc.sensor_height;
  Json actors = Json::array();
  for (const ActorTrack & a : sc.actors) {
    Json j;
    j["id"] = a.id;
    j["class"] = std::string(actor_class_name(a.cls));
    j["length"] = a.length;
    j["width"] = a.width;
    j["height"] = a.height;
    j["maneuver"] = std::string(maneuver_name(a.maneuver));
    j["speed"] = a.speed;
    j["turn_delta"] = a.turn_delta;
    Json poses = Json::array();
    for (const Waypoint & w : a.poses) {
      poses.push_back(pose_array(w));
    }
    j["poses"] = std::move(poses);
    actors.push_back(std::move(j));
  }
  doc["actors"] = std::move(actors);
  Json map = Json::array();
  for (const MapElement & e : sc.map) {
    Json j;
    j["class"] = std::string(map_class_name(e.cls));
    j["geometry"] = std::string(geometry_name(e.geometry));
    Json pts = Json::array();
    for (const Vec2 & p : e.points) {
      pts.push_back(Json::array({p.x, p.y}));
    }
    j["points"] = std::move(pts);
    j["stroke_width"] = e.stroke_width;
    map.push_back(std::move(j));
  }
  doc["map"] = std::move(map);
  Json sdv = Json::array();
  for (const Waypoint & w : sc.sdv_track) {
    sdv.push_back(pose_array(w));
  }
  doc["sdv_track"] = std::move(sdv);
  return doc.dump(1) + "\n";
}

Scenario scenario_from_json(std::string_view text)
{
  Json doc;
  try {
    doc = Json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::exception & e) {
    throw InputError(std::string("scn-1: invalid JSON: ") + e.what());
  }
  const Json & version = member(doc, "version", "document");
  if (!version.is_string() || version.get<std::string>() != kScenarioFormat) {
    throw InputError("scn-1: unsupported version (expected \"scn-1\")");
  }
  Scenario sc;
  sc.seed = unsigned_number(member(doc, "seed", "document"), "seed");
  sc.frame_rate = number(member(doc, "frame_rate", "document"), "frame_rate");
  sc.history_frames = unsigned_number(member(doc, "history_frames", "document"), "history_frames");
  sc.future_frames = unsigned_number(member(doc, "future_frames", "document"), "future_frames");
  sc.sensor_height = number(member(doc, "sensor_height", "document"), "sensor_height");
  if (!(sc.frame_rate > 0.0) || sc.history_frames < 1) {
    throw InputError("scn-1: frame_rate must be positive and history_frames >= 1");
  }
  const double duration = number(member(doc, "duration", "document"), "duration");
  if (std::abs(duration * sc.frame_rate - static_cast<double>(sc.num_frames())) > 1e-6) {
    throw InputError("scn-1: duration x frame_rate disagrees with the frame count");
  }
  sc.sdv_track = parse_poses(member(doc, "sdv_track", "document"), "sdv_track");
  if (sc.sdv_track.size() != sc.num_frames()) {
    throw InputError("scn-1: sdv_track must hold one pose per frame");
  }
  const Json & actors = member(doc, "actors", "document");
  if (!actors.is_array()) {
    throw InputError("scn-1: 'actors' must be an array");
  }
  for (std::size_t i = 0; i < actors.size(); ++i) {
    const std::string where = "actors[" + std::to_string(i) + "]";
    const Json & j = actors[i];
    ActorTrack a;
    a.id = unsigned_number(member(j, "id", where), where + ".id");
    const Json & cls = member(j, "class", where);
    const Json & man = member(j, "maneuver", where);
    if (!cls.is_string() || !man.is_string()) {
      throw InputError("scn-1: class and maneuver must be strings at " + where);
    }
    try {
      a.cls = actor_class_from_name(cls.get<std::string>());
    } catch (const std::exception & e) {
      throw InputError("scn-1: " + where + ": " + e.what());
    }
    a.maneuver = maneuver_from_name(man.get<std::string>());
    a.length = number(member(j, "length", where), where + ".length");
    a.width = number(member(j, "width", where), where + ".width");
    a.height = number(member(j, "height", where), where + ".height");
    a.speed = number(member(j, "speed", where), where + ".speed");
    a.turn_delta = number(member(j, "turn_delta", where), where + ".turn_delta");
    a.poses = parse_poses(member(j, "poses", where), where + ".poses");
    if (a.poses.size() != sc.num_frames()) {
      throw InputError("scn-1: " + where + " must hold one pose per frame");
    }
    if (!(a.length > 0.0 && a.width > 0.0 && a.height > 0.0)) {
      throw InputError("scn-1: " + where + " has non-positive extents");
    }
    sc.actors.push_back(std::move(a));
  }
  const Json & map = member(doc, "map", "document");
  if (!map.is_array()) {
    throw InputError("scn-1: 'map' must be an array");
  }
  for (std::size_t i = 0; i < map.size(); ++i) {
    const std::string where = "map[" + std::to_string(i) + "]";
    const Json & j = map[i];
    MapElement e;
    const Json & cls = member(j, "class", where);
    const Json & geom = member(j, "geometry", where);
    if (!cls.is_string() || !geom.is_string()) {
      throw InputError("scn-1: class and geometry must be strings at " + where);
    }
    e.cls = map_class_from_name(cls.get<std::string>());
    const std::string g = geom.get<std::string>();
    if (g == "polygon") {
      e.geometry = MapGeometry::kPolygon;
    } else if (g == "polyline") {
      e.geometry = MapGeometry::kPolyline;
    } else {
      throw InputError("scn-1: unknown geometry '" + g + "' at " + where);
    }
    const Json & pts = member(j, "points", where);
    if (!pts.is_array()) {
      throw InputError("scn-1: points must be an array at " + where);
    }
    for (const Json & p : pts) {
      if (!p.is_array() || p.size() != 2) {
        throw InputError("scn-1: expected [x, y] points at " + where);
      }
      e.points.push_back({number(p[0], where), number(p[1], where)});
    }
    e.stroke_width = number(member(j, "stroke_width", where), where + ".stroke_width");
    sc.map.push_back(std::move(e));
  }
  return sc;
}

void write_scenario(const std::filesystem::path & path, const Scenario & scenario)
{
  write_text_file(path, scenario_to_json(scenario));
}

Scenario read_scenario(const std::filesystem::path & path)
{
  return scenario_from_json(read_text_file(path));
}

void write_pts(std::ostream & out, const std::vector<FrameSweep> & sweeps)
{
  std::vector<std::uint8_t> buf(kPtsMagic.begin(), kPtsMagic.end());
  put_u32(buf, kPts1Version);
  put_u32(buf, static_cast<std::uint32_t>(sweeps.size()));
  for (const FrameSweep & s : sweeps) {
    put_u64(buf, s.frame);
    put_u64(buf, s.points.size());
    for (const Point3 & p : s.points) {
      put_f32(buf, static_cast<float>(p.x));
      put_f32(buf, static_cast<float>(p.y));
      put_f32(buf, static_cast<float>(p.z));
    }
  }
  out.write(reinterpret_cast<const char *>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) {
    throw InputError("PTS1: write failed");
  }
}

void write_pts(const std::filesystem::path & path, const std::vector<FrameSweep> & sweeps)
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw InputError("cannot open '" + path.string() + "' for writing");
  }
  write_pts(out, sweeps);
}

std::vector<FrameSweep> read_pts(std::istream & in)
{
  const std::vector<std::uint8_t> buf(
    (std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::span<const std::uint8_t> view(buf);
  if (buf.size() < 12 || !std::equal(kPtsMagic.begin(), kPtsMagic.end(), buf.begin())) {
    throw InputError("PTS1: bad magic");
  }
  if (get_u32(view, 4) != kPts1Version) {
    throw InputError("PTS1: unsupported version");
  }
  const std::uint32_t count = get_u32(view, 8);
  std::size_t off = 12;
  std::vector<FrameSweep> sweeps;
  sweeps.reserve(count);
  for (std::uint32_t s = 0; s < count; ++s) {
    if (buf.size() - off < 16) {
      throw InputError("PTS1: truncated sweep header");
    }
    FrameSweep sweep;
    sweep.frame = get_u64(view, off);
    const std::uint64_t n = get_u64(view, off + 8);
    off += 16;
    if (n > (buf.size() - off) / 12) {
      throw InputError("PTS1: truncated point block");
    }
    sweep.points.reserve(n);
    for (std::uint64_t k = 0; k < n; ++k, off += 12) {
      sweep.points.push_back(
        {get_f32(view, off), get_f32(view, off + 4), get_f32(view, off + 8)});
    }
    sweeps.push_back(std::move(sweep));
  }
  if (off != buf.size()) {
    throw InputError("PTS1: trailing bytes");
  }
  return sweeps;
}

std::vector<FrameSweep> read_pts(const std::filesystem::path & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw InputError("cannot open '" + path.string() + "'");
  }
  return read_pts(in);
}

ScenarioSpec scenario_spec_from_json(std::string_view text)
{
  Json doc;
  try {
    doc = Json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::exception & e) {
    throw ConfigError(std::string("scenario spec: invalid JSON: ") + e.what());
  }
  ScenarioSpec spec;
  SpecReader r(doc, "");
  r.read("seed", spec.seed, 0);
  r.read("num_scenarios", spec.num_scenarios);
  r.read("frame_rate", spec.frame_rate);
  r.read("history_frames", spec.history_frames);
  r.read("future_frames", spec.future_frames);
  r.read("num_actors", spec.num_actors);
  r.read("turn_delta_min", spec.turn_delta_min);
  r.read("turn_delta_max", spec.turn_delta_max);
  r.read("turn_onset_frames", spec.turn_onset_frames);
  r.read("spawn_radius", spec.spawn_radius);
  r.read("sdv_speed", spec.sdv_speed);
  r.read("sensor_height", spec.sensor_height);
  r.read("include_map", spec.include_map);
  r.read("points_per_actor", spec.points_per_actor);
  r.read("clutter_points", spec.clutter_points);
  r.read("dropout", spec.dropout);
  r.read("sensor_noise", spec.sensor_noise);
  if (const Json * ratios = r.child("class_ratios")) {
    SpecReader cr(*ratios, "class_ratios");
    for (std::size_t i = 0; i < kNumActorClasses; ++i) {
      cr.read(std::string(actor_class_name(kAllActorClasses[i])).c_str(), spec.class_ratios[i]);
    }
    cr.finish();
  }
  if (const Json * mix = r.child("maneuver_mix")) {
    SpecReader mr(*mix, "maneuver_mix");
    for (std::size_t i = 0; i < kNumManeuvers; ++i) {
      mr.read(std::string(maneuver_name(static_cast<Maneuver>(i))).c_str(), spec.maneuver_mix[i]);
    }
    mr.finish();
  }
  if (const Json * classes = r.child("classes")) {
    SpecReader cr(*classes, "classes");
    for (std::size_t i = 0; i < kNumActorClasses; ++i) {
      const std::string name(actor_class_name(kAllActorClasses[i]));
      if (const Json * c = cr.child(name.c_str())) {
        SpecReader pr(*c, "classes." + name);
        ClassProfile & p = spec.classes[i];
        pr.read("speed_min", p.speed_min);
        pr.read("speed_max", p.speed_max);
        pr.read("length", p.length);
        pr.read("width", p.width);
        pr.read("height", p.height);
        pr.finish();
      }
    }
    cr.finish();
  }
  r.finish();
  spec.validate();
  return spec;
}

ScenarioSpec read_scenario_spec(const std::filesystem::path & path)
{
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const InputError & e) {
    throw ConfigError(e.what());
  }
  return scenario_spec_from_json(text);
}

std::string read_text_file(const std::filesystem::path & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw InputError("cannot open '" + path.string() + "'");
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path & path, std::string_view text)
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw InputError("cannot open '" + path.string() + "' for writing");
  }
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) {
    throw InputError("write to '" + path.string() + "' failed");
  }
}

}  // namespace bevmotion
