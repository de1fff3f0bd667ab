#include "socs/io.hpp"

#include <cstring>

#include "socs/transforms.hpp"
#include <fstream>
#include <sstream>
#include <vector>

namespace socs {
namespace {

struct PlyProperty {
  std::string type;
  std::string name;
};

std::size_t scalar_size(const std::string& type) {
  if (type == "char" || type == "uchar" || type == "int8" || type == "uint8")
    return 1;
  if (type == "short" || type == "ushort" || type == "int16" ||
      type == "uint16")
    return 2;
  if (type == "int" || type == "uint" || type == "int32" || type == "uint32" ||
      type == "float" || type == "float32")
    return 4;
  if (type == "double" || type == "float64") return 8;
  throw DataError("unsupported ply property type: " + type);
}

double read_scalar(const char* p, const std::string& type) {
  if (type == "float" || type == "float32") {
    float v;
    std::memcpy(&v, p, 4);
    return double(v);
  }
  if (type == "double" || type == "float64") {
    double v;
    std::memcpy(&v, p, 8);
    return v;
  }
  if (type == "int" || type == "int32") {
    std::int32_t v;
    std::memcpy(&v, p, 4);
    return double(v);
  }
  if (type == "uint" || type == "uint32") {
    std::uint32_t v;
    std::memcpy(&v, p, 4);
    return double(v);
  }
  if (type == "short" || type == "int16") {
    std::int16_t v;
    std::memcpy(&v, p, 2);
    return double(v);
  }
  if (type == "ushort" || type == "uint16") {
    std::uint16_t v;
    std::memcpy(&v, p, 2);
    return double(v);
  }
  if (type == "char" || type == "int8") return double(*(const signed char*)p);
  if (type == "uchar" || type == "uint8")
    return double(*(const unsigned char*)p);
  throw DataError("unsupported ply property type: " + type);
}

}  // namespace

PointCloud load_ply(const std::string& path, Frame frame) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open ply file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw DataError("empty ply file: " + path);
  if (line.rfind("ply", 0) != 0) throw DataError("not a ply file: " + path);

  bool binary = false;
  Eigen::Index n_vertex = -1;
  std::vector<PlyProperty> props;
  bool in_vertex_element = false;

  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string tok;
    ls >> tok;
    if (tok == "comment" || tok == "obj_info") continue;
    if (tok == "format") {
      std::string fmt;
      ls >> fmt;
      if (fmt == "binary_little_endian")
        binary = true;
      else if (fmt != "ascii")
        throw DataError("unsupported ply format: " + fmt);
    } else if (tok == "element") {
      std::string name;
      Eigen::Index count;
      ls >> name >> count;
      in_vertex_element = (name == "vertex");
      if (in_vertex_element) n_vertex = count;
    } else if (tok == "property") {
      if (!in_vertex_element) continue;
      PlyProperty p;
      ls >> p.type;
      if (p.type == "list")
        throw DataError("list properties on vertices are unsupported");
      ls >> p.name;
      props.push_back(p);
    } else if (tok == "end_header") {
      break;
    }
  }
  if (n_vertex < 0) throw DataError("ply file has no vertex element: " + path);

  int ix = -1, iy = -1, iz = -1;
  for (std::size_t i = 0; i < props.size(); ++i) {
    if (props[i].name == "x") ix = int(i);
    if (props[i].name == "y") iy = int(i);
    if (props[i].name == "z") iz = int(i);
  }
  if (ix < 0 || iy < 0 || iz < 0)
    throw DataError("ply vertex element lacks x/y/z: " + path);

  PointCloud cloud;
  cloud.frame = frame;
  cloud.points.resize(n_vertex, 3);

  if (binary) {
    std::size_t stride = 0;
    std::vector<std::size_t> offsets(props.size());
    for (std::size_t i = 0; i < props.size(); ++i) {
      offsets[i] = stride;
      stride += scalar_size(props[i].type);
    }
    std::vector<char> buf(stride);
    for (Eigen::Index r = 0; r < n_vertex; ++r) {
      in.read(buf.data(), std::streamsize(stride));
      if (!in) throw DataError("truncated ply payload: " + path);
      cloud.points(r, 0) = read_scalar(buf.data() + offsets[ix], props[ix].type);
      cloud.points(r, 1) = read_scalar(buf.data() + offsets[iy], props[iy].type);
      cloud.points(r, 2) = read_scalar(buf.data() + offsets[iz], props[iz].type);
    }
  } else {
    for (Eigen::Index r = 0; r < n_vertex; ++r) {
      if (!std::getline(in, line)) throw DataError("truncated ply: " + path);
      std::istringstream ls(line);
      std::vector<double> vals(props.size());
      for (auto& v : vals)
        if (!(ls >> v)) throw DataError("malformed ply vertex row: " + path);
      cloud.points(r, 0) = vals[std::size_t(ix)];
      cloud.points(r, 1) = vals[std::size_t(iy)];
      cloud.points(r, 2) = vals[std::size_t(iz)];
    }
  }
  if (!cloud.all_finite())
    throw DataError("ply cloud contains non-finite values: " + path);
  return cloud;
}

void save_ply(const std::string& path, const PointCloud& cloud, bool binary) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write ply file: " + path);
  out << "ply\n"
      << (binary ? "format binary_little_endian 1.0\n" : "format ascii 1.0\n")
      << "element vertex " << cloud.points.rows() << "\n"
      << "property double x\nproperty double y\nproperty double z\n"
      << "end_header\n";
  if (binary) {
    for (Eigen::Index r = 0; r < cloud.points.rows(); ++r) {
      double xyz[3] = {cloud.points(r, 0), cloud.points(r, 1),
                       cloud.points(r, 2)};
      out.write(reinterpret_cast<const char*>(xyz), sizeof(xyz));
    }
  } else {
    out.precision(17);
    for (Eigen::Index r = 0; r < cloud.points.rows(); ++r)
      out << cloud.points(r, 0) << " " << cloud.points(r, 1) << " "
          << cloud.points(r, 2) << "\n";
  }
  if (!out) throw DataError("failed writing ply file: " + path);
}

Json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open json file: " + path);
  Json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw DataError("malformed json in " + path + ": " + e.what());
  }
  return j;
}

void save_json_file(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write json file: " + path);
  out << j.dump(2) << "\n";
}

Json matrix_to_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const Json& j) {
  if (!j.is_array()) throw DataError("expected a json array of rows");
  const Eigen::Index rows = Eigen::Index(j.size());
  if (rows == 0) return Eigen::MatrixXd(0, 0);
  const Eigen::Index cols = Eigen::Index(j.at(0).size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j.at(std::size_t(r));
    if (Eigen::Index(row.size()) != cols)
      throw DataError("ragged json matrix");
    for (Eigen::Index c = 0; c < cols; ++c)
      m(r, c) = row.at(std::size_t(c)).get<double>();
  }
  return m;
}

Json vector_to_json(const Eigen::VectorXd& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Eigen::VectorXd vector_from_json(const Json& j) {
  Eigen::VectorXd v(j.size());
  for (Eigen::Index i = 0; i < v.size(); ++i)
    v(i) = j.at(std::size_t(i)).get<double>();
  return v;
}

Json to_json(const RigidTransform& T) {
  return Json{{"R", matrix_to_json(T.rotation)},
              {"t", vector_to_json(T.translation)}};
}

RigidTransform rigid_from_json(const Json& j) {
  const Eigen::MatrixXd R = matrix_from_json(j.at("R"));
  const Eigen::VectorXd t = vector_from_json(j.at("t"));
  if (R.rows() != 3 || R.cols() != 3 || t.size() != 3)
    throw DataError("rigid transform json must hold a 3x3 R and 3-vector t");
  RigidTransform out;
  out.rotation = R;
  out.translation = t;
  if (!is_rotation(out.rotation))
    throw DataError("json R is not a rotation within tolerance");
  return out;
}

Json to_json(const AnisoSimilarity& A) {
  Json j = to_json(A.rigid);
  j["s"] = vector_to_json(A.scale);
  return j;
}

AnisoSimilarity aniso_from_json(const Json& j) {
  AnisoSimilarity out;
  out.rigid = rigid_from_json(j);
  const Eigen::VectorXd s = vector_from_json(j.at("s"));
  if (s.size() != 3) throw DataError("scale must be a 3-vector");
  if ((s.array() <= 0.0).any())
    throw DataError("scale components must be positive");
  out.scale = s;
  return out;
}

Json to_json(const KeypointSet& k) {
  return Json{{"frame", frame_name(k.frame)},
              {"keypoints", matrix_to_json(k.keypoints)}};
}

KeypointSet keypoints_from_json(const Json& j) {
  KeypointSet out;
  out.frame = frame_from_name(j.at("frame").get<std::string>());
  const Eigen::MatrixXd m = matrix_from_json(j.at("keypoints"));
  if (m.cols() != 3) throw DataError("keypoints must be m x 3");
  out.keypoints = m;
  return out;
}

}  // namespace socs
