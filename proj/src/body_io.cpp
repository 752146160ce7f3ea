#include "motionspace/body.hpp"

#include "motionspace/error.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <string>

namespace motionspace::body {

namespace {

using nlohmann::json;

constexpr int kAssetVersion = 1;

std::vector<double> flatten(const Eigen::Ref<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                                                   Eigen::RowMajor>>& m)
{
    return std::vector<double>(m.data(), m.data() + m.size());
}

template <typename Matrix>
Matrix read_matrix(const json& doc, const char* key, Eigen::Index rows, Eigen::Index cols)
{
    if (!doc.contains(key))
        throw Error(ErrorCode::ParseError, std::string("body asset is missing field '") + key + "'");
    const auto values = doc.at(key).get<std::vector<double>>();
    if (static_cast<Eigen::Index>(values.size()) != rows * cols)
        throw Error(ErrorCode::ParseError, std::string("field '") + key + "' has " +
                                               std::to_string(values.size()) + " values, expected " +
                                               std::to_string(rows * cols));
    using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    return Matrix(Eigen::Map<const RowMajor>(values.data(), rows, cols));
}

} // namespace

void save_body(const BodyModel& body, const std::filesystem::path& path)
{
    using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    json doc;
    doc["version"] = kAssetVersion;
    doc["J"] = body.num_joints();
    doc["V"] = body.num_vertices();
    doc["B"] = body.num_betas();
    doc["template_vertices"] = flatten(body.template_vertices);
    doc["shape_dirs"] = flatten(RowMajor(body.shape_dirs));
    doc["joint_shape_dirs"] = flatten(RowMajor(body.joint_shape_dirs));
    doc["skin_weights"] = flatten(RowMajor(body.skin_weights));
    doc["rest_joints"] = flatten(body.rest_joints);
    doc["parents"] = body.parents;
    if (!body.faces.empty())
        doc["faces"] = body.faces;

    std::ofstream out(path);
    if (!out)
        throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out << doc.dump() << '\n';
    if (!out)
        throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

BodyModel load_body(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorCode::IoError, "cannot open " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
    }

    try {
        if (doc.value("version", 0) != kAssetVersion)
            throw Error(ErrorCode::ParseError, path.string() + ": unsupported body asset version");
        const int J = doc.at("J").get<int>();
        const int V = doc.at("V").get<int>();
        const int B = doc.at("B").get<int>();
        if (J < 1 || V < 1 || B < 1)
            throw Error(ErrorCode::ParseError, path.string() + ": J, V and B must be positive");

        BodyModel body;
        body.template_vertices = read_matrix<VertexMatrix>(doc, "template_vertices", V, 3);
        body.shape_dirs = read_matrix<Eigen::MatrixXd>(doc, "shape_dirs", 3 * V, B);
        body.joint_shape_dirs = read_matrix<Eigen::MatrixXd>(doc, "joint_shape_dirs", 3 * J, B);
        body.skin_weights = read_matrix<Eigen::MatrixXd>(doc, "skin_weights", V, J);
        body.rest_joints = read_matrix<VertexMatrix>(doc, "rest_joints", J, 3);
        body.parents = doc.at("parents").get<std::vector<int>>();
        if (doc.contains("faces"))
            body.faces = doc.at("faces").get<std::vector<std::array<int, 3>>>();
        body.validate();
        return body;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
    } catch (const Error& e) {
        if (e.code() == ErrorCode::InvalidInput)
            throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
        throw;
    }
}

std::vector<int> load_markers(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorCode::IoError, "cannot open " + path.string());
    try {
        const auto doc = json::parse(in);
        const auto& ids = doc.is_object() ? doc.at("marker_vertex_ids") : doc;
        auto out = ids.get<std::vector<int>>();
        if (static_cast<int>(out.size()) != kMarkerCount)
            throw Error(ErrorCode::ParseError,
                        path.string() + ": expected " + std::to_string(kMarkerCount) + " marker ids");
        return out;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
    }
}

void save_markers(const std::vector<int>& vertex_ids, const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out)
        throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out << json{{"marker_vertex_ids", vertex_ids}}.dump() << '\n';
}

} // namespace motionspace::body
