#include "motionspace/error.hpp"
#include "motionspace/evalkit.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace motionspace::eval {

namespace {

std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos)
        return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"')
            out += '"';
        out += c;
    }
    return out + '"';
}

std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(std::move(cur));
    return fields;
}

double parse_double(const std::string& s, const std::string& context)
{
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw Error(ErrorCode::ParseError, context + ": malformed number '" + s + "'");
    return v;
}

} // namespace

std::string format_double(double v)
{
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

void export_csv(const Table& table, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error(ErrorCode::IoError, "cannot write " + path.string());
    auto write_row = [&](const std::vector<std::string>& row) {
        for (std::size_t i = 0; i < row.size(); ++i)
            out << (i ? "," : "") << csv_field(row[i]);
        out << '\n';
    };
    write_row(table.header);
    for (const auto& row : table.rows) {
        if (row.size() != table.header.size())
            throw Error(ErrorCode::ShapeMismatch, "CSV row width differs from the header");
        write_row(row);
    }
    if (!out)
        throw Error(ErrorCode::IoError, "failed writing " + path.string());
}

Table read_csv(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorCode::IoError, "cannot open " + path.string());
    Table t;
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (line.empty() || line == "\r")
            continue;
        auto fields = split_csv_line(line);
        if (t.header.empty()) {
            t.header = std::move(fields);
            continue;
        }
        if (fields.size() != t.header.size())
            throw Error(ErrorCode::ParseError, path.string() + ":" + std::to_string(number) +
                                                   ": row width differs from the header");
        t.rows.push_back(std::move(fields));
    }
    if (t.header.empty())
        throw Error(ErrorCode::ParseError, path.string() + ": missing header row");
    return t;
}

int export_obj(const motion::MotionSequence& seq, const body::BodyModel& body, const std::filesystem::path& dir)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec)
        throw Error(ErrorCode::IoError, "cannot create " + dir.string());
    const body::ShapedBody shaped = body::shape(body, seq.beta);
    for (int k = 0; k < seq.num_frames(); ++k) {
        const auto& f = seq.frames[k];
        const body::VertexMatrix v = body::pose_mesh(body, shaped, f.theta, f.gamma, body::Projection::Clamped);
        char name[32];
        std::snprintf(name, sizeof name, "frame_%04d.obj", k);
        std::ofstream out(dir / name, std::ios::binary);
        if (!out)
            throw Error(ErrorCode::IoError, "cannot write " + (dir / name).string());
        out << "# t " << format_double(f.time) << '\n';
        for (Eigen::Index i = 0; i < v.rows(); ++i)
            out << "v " << format_double(v(i, 0)) << ' ' << format_double(v(i, 1)) << ' '
                << format_double(v(i, 2)) << '\n';
        for (const auto& face : body.faces)
            out << "f " << face[0] + 1 << ' ' << face[1] + 1 << ' ' << face[2] + 1 << '\n';
        if (!out)
            throw Error(ErrorCode::IoError, "failed writing " + (dir / name).string());
    }
    return seq.num_frames();
}

body::VertexMatrix read_obj_vertices(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorCode::IoError, "cannot open " + path.string());
    std::vector<Eigen::RowVector3d> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.rfind("v ", 0) != 0)
            continue;
        std::istringstream ss(line.substr(2));
        Eigen::RowVector3d p;
        if (!(ss >> p(0) >> p(1) >> p(2)))
            throw Error(ErrorCode::ParseError, path.string() + ": malformed vertex line");
        rows.push_back(p);
    }
    body::VertexMatrix v(rows.size(), 3);
    for (std::size_t i = 0; i < rows.size(); ++i)
        v.row(i) = rows[i];
    return v;
}

void export_latents(const std::vector<LabeledCode>& codes, const std::filesystem::path& path)
{
    Table t;
    const Eigen::Index dz = codes.empty() ? 0 : codes.front().code.z.size();
    const Eigen::Index B = codes.empty() ? 0 : codes.front().code.beta.size();
    for (Eigen::Index i = 0; i < dz; ++i)
        t.header.push_back("z" + std::to_string(i));
    for (Eigen::Index i = 0; i < B; ++i)
        t.header.push_back("beta" + std::to_string(i));
    t.header.push_back("label");
    for (const auto& c : codes) {
        if (c.code.z.size() != dz || c.code.beta.size() != B)
            throw Error(ErrorCode::ShapeMismatch, "latent codes have different dimensions");
        std::vector<std::string> row;
        for (double v : c.code.z)
            row.push_back(format_double(v));
        for (double v : c.code.beta)
            row.push_back(format_double(v));
        row.push_back(c.label);
        t.rows.push_back(std::move(row));
    }
    export_csv(t, path);
}

std::vector<LabeledCode> read_latents(const std::filesystem::path& path)
{
    const Table t = read_csv(path);
    int dz = 0, B = 0;
    for (const auto& h : t.header) {
        if (h.rfind("beta", 0) == 0)
            ++B;
        else if (h.rfind("z", 0) == 0)
            ++dz;
    }
    if (t.header.back() != "label" || dz + B + 1 != static_cast<int>(t.header.size()))
        throw Error(ErrorCode::ParseError, path.string() + ": expected columns z*, beta*, label");
    std::vector<LabeledCode> out;
    for (const auto& row : t.rows) {
        LabeledCode c;
        c.code.z.resize(dz);
        c.code.beta.resize(B);
        for (int i = 0; i < dz; ++i)
            c.code.z(i) = parse_double(row[i], path.string());
        for (int i = 0; i < B; ++i)
            c.code.beta(i) = parse_double(row[dz + i], path.string());
        c.label = row.back();
        out.push_back(std::move(c));
    }
    return out;
}

} // namespace motionspace::eval
