#pragma once

#include <json.hpp>
#include <string>

#include "socs/types.hpp"

namespace socs {

using Json = nlohmann::json;

// PLY vertex clouds, "ascii 1.0" and "binary_little_endian 1.0" variants.
// Extra per-vertex properties are skipped on read; only x/y/z are kept.
PointCloud load_ply(const std::string& path,
                    Frame frame = Frame::kObject);
void save_ply(const std::string& path, const PointCloud& cloud,
              bool binary = true);

Json load_json_file(const std::string& path);
void save_json_file(const std::string& path, const Json& j);

Json to_json(const RigidTransform& T);
RigidTransform rigid_from_json(const Json& j);

// {"R": 3x3, "t": [3], "s": [3]}
Json to_json(const AnisoSimilarity& A);
AnisoSimilarity aniso_from_json(const Json& j);

Json to_json(const KeypointSet& k);
KeypointSet keypoints_from_json(const Json& j);

Json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const Json& j);
Json vector_to_json(const Eigen::VectorXd& v);
Eigen::VectorXd vector_from_json(const Json& j);

}  // namespace socs
