#include "stride/motion_io.hpp"

#include "stride/io_util.hpp"

#include <json.hpp>

namespace stride {

using nlohmann::json;

std::string motion_to_json(const MotionDocument& doc) {
  const MotionSegment& seg = doc.segment;
  json j;
  j["version"] = kMotionFormatVersion;
  j["fps"] = seg.fps;
  j["joint_parents"] = doc.skeleton.parent;
  json offsets = json::array();
  for (const Vec3& o : doc.skeleton.offset) offsets.push_back({o.x(), o.y(), o.z()});
  j["joint_offsets"] = offsets;
  json frames = json::array();
  for (int i = 0; i < seg.frame_count(); ++i) {
    json rot = json::array();
    for (int k = 0; k < kJointCount; ++k) {
      const Rotation6D& r = seg.rotation(i, k);
      rot.push_back({r[0], r[1], r[2], r[3], r[4], r[5]});
    }
    const ContactLabels& c = seg.contacts[i];
    frames.push_back({{"rotations", rot},
                      {"root", {seg.root[i].x(), seg.root[i].y(), seg.root[i].z()}},
                      {"contacts", {int(c[0]), int(c[1]), int(c[2]), int(c[3])}}});
  }
  j["frames"] = frames;
  if (!doc.styles.empty()) j["styles"] = doc.styles;
  return j.dump();
}

MotionDocument motion_from_json(const std::string& text) {
  MotionDocument doc;
  try {
    const json j = json::parse(text);
    if (j.at("version").get<int>() != kMotionFormatVersion) {
      throw FormatError("unsupported motion format version");
    }
    const auto parents = j.at("joint_parents").get<std::vector<int>>();
    const auto offsets = j.at("joint_offsets").get<std::vector<std::vector<double>>>();
    if (parents.size() != kJointCount || offsets.size() != kJointCount) {
      throw FormatError("motion skeleton must have 22 joints");
    }
    for (int k = 0; k < kJointCount; ++k) {
      doc.skeleton.parent[k] = parents[k];
      if (offsets[k].size() != 3) throw FormatError("joint offsets must be 3-vectors");
      doc.skeleton.offset[k] = Vec3(offsets[k][0], offsets[k][1], offsets[k][2]);
    }
    doc.skeleton.validate();

    const json& frames = j.at("frames");
    MotionSegment seg(static_cast<int>(frames.size()), j.at("fps").get<double>());
    for (int i = 0; i < seg.frame_count(); ++i) {
      const json& f = frames[i];
      const auto rot = f.at("rotations").get<std::vector<std::vector<double>>>();
      if (rot.size() != kJointCount) throw FormatError("frame needs 22 rotations");
      for (int k = 0; k < kJointCount; ++k) {
        if (rot[k].size() != 6) throw FormatError("rotations must have 6 components");
        seg.rotation(i, k) = Eigen::Map<const Rotation6D>(rot[k].data());
      }
      const auto root = f.at("root").get<std::vector<double>>();
      const auto contacts = f.at("contacts").get<std::vector<int>>();
      if (root.size() != 3 || contacts.size() != kFootCount) {
        throw FormatError("frame root/contacts have the wrong size");
      }
      seg.root[i] = Vec3(root[0], root[1], root[2]);
      for (int c = 0; c < kFootCount; ++c) {
        if (contacts[c] != 0 && contacts[c] != 1) throw FormatError("contacts must be 0 or 1");
        seg.contacts[i][c] = static_cast<std::uint8_t>(contacts[c]);
      }
    }
    seg.validate();
    doc.segment = std::move(seg);
    if (j.contains("styles")) {
      doc.styles = j.at("styles").get<std::vector<int>>();
      if (static_cast<int>(doc.styles.size()) != doc.segment.frame_count()) {
        throw FormatError("styles must have one entry per frame");
      }
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed motion document: ") + e.what());
  } catch (const InvalidParams& e) {
    throw FormatError(std::string("invalid motion document: ") + e.what());
  }
  return doc;
}

void write_motion(const std::filesystem::path& path, const MotionDocument& doc) {
  write_text_file(path, motion_to_json(doc));
}

MotionDocument read_motion(const std::filesystem::path& path) {
  return motion_from_json(read_text_file(path));
}

}  // namespace stride
