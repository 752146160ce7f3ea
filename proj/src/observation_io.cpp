#include "motionspace/error.hpp"
#include "motionspace/latentfit.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace motionspace::fit {

void SparseObservation::validate() const
{
    for (std::size_t i = 0; i < frames.size(); ++i) {
        const auto& f = frames[i];
        if (!std::isfinite(f.time) || (i > 0 && !(f.time > frames[i - 1].time)))
            throw Error(ErrorCode::InvalidInput, "observation timestamps must be strictly increasing");
        if (f.markers && f.markers->rows() != body::kMarkerCount)
            throw Error(ErrorCode::InvalidInput, "observation frame " + std::to_string(i) +
                                                     " has a marker block without 16 markers");
        if (!f.points.allFinite() || (f.markers && !f.markers->allFinite()))
            throw Error(ErrorCode::InvalidInput, "observation frame " + std::to_string(i) +
                                                     " contains non-finite coordinates");
    }
}

namespace {

class Lines
{
public:
    Lines(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

    bool next(std::string& line)
    {
        while (std::getline(in_, line)) {
            ++number_;
            if (line.find_first_not_of(" \t\r") != std::string::npos)
                return true;
        }
        return false;
    }
    std::string require(const char* what)
    {
        std::string line;
        if (!next(line))
            fail(std::string("unexpected end of file, expected ") + what);
        return line;
    }
    // Pushes one line back so the next call returns it again.
    void unread(std::string line) { pending_ = std::move(line); }
    bool take_pending(std::string& line)
    {
        if (pending_.empty())
            return false;
        line = std::move(pending_);
        pending_.clear();
        return true;
    }

    [[noreturn]] void fail(const std::string& message) const
    {
        throw Error(ErrorCode::ParseError, source_ + ":" + std::to_string(number_) + ": " + message);
    }

private:
    std::istream& in_;
    std::string source_;
    std::string pending_;
    int number_ = 0;
};

Eigen::RowVector3d parse_point(const std::string& line, const Lines& lines)
{
    std::istringstream ss(line);
    Eigen::RowVector3d p;
    std::string extra;
    if (!(ss >> p(0) >> p(1) >> p(2)) || (ss >> extra))
        lines.fail("expected three coordinates");
    return p;
}

double parse_keyed(const std::string& line, const std::string& key, const Lines& lines)
{
    std::istringstream ss(line);
    std::string k, extra;
    double v = 0.0;
    if (!(ss >> k) || k != key || !(ss >> v) || (ss >> extra))
        lines.fail("expected '" + key + " <value>'");
    return v;
}

void put(std::ostream& out, const Eigen::RowVector3d& p)
{
    char buf[96];
    char* end = buf;
    for (int c = 0; c < 3; ++c) {
        if (c)
            *end++ = ' ';
        end = std::to_chars(end, buf + sizeof buf, p(c), std::chars_format::general, 17).ptr;
    }
    out.write(buf, end - buf);
    out << '\n';
}

} // namespace

SparseObservation read_observation(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorCode::IoError, "cannot open observation file " + path.string());
    Lines lines(in, path.string());
    if (lines.require("SOBS header").find("SOBS 1") != 0)
        lines.fail("not a version 1 SOBS file");

    SparseObservation obs;
    std::string line;
    while (lines.take_pending(line) || lines.next(line)) {
        ObservedFrame f;
        f.time = parse_keyed(line, "t", lines);
        const double m = parse_keyed(lines.require("M line"), "M", lines);
        if (m < 0 || m != static_cast<long>(m))
            lines.fail("point count must be a non-negative integer");
        f.points.resize(static_cast<Eigen::Index>(m), 3);
        for (Eigen::Index i = 0; i < f.points.rows(); ++i)
            f.points.row(i) = parse_point(lines.require("point line"), lines);
        std::string maybe;
        if (lines.next(maybe)) {
            if (maybe.find("MARKERS") == 0) {
                PointSet markers(body::kMarkerCount, 3);
                for (int i = 0; i < body::kMarkerCount; ++i)
                    markers.row(i) = parse_point(lines.require("marker line"), lines);
                f.markers = std::move(markers);
            } else {
                lines.unread(maybe);
            }
        }
        obs.frames.push_back(std::move(f));
    }
    try {
        obs.validate();
    } catch (const Error& e) {
        throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
    }
    return obs;
}

void write_observation(const SparseObservation& obs, const std::filesystem::path& path)
{
    obs.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error(ErrorCode::IoError, "cannot write observation file " + path.string());
    out << "SOBS 1\n";
    for (const auto& f : obs.frames) {
        char buf[48];
        const auto res = std::to_chars(buf, buf + sizeof buf, f.time, std::chars_format::general, 17);
        out << "t " << std::string_view(buf, res.ptr - buf) << "\nM " << f.points.rows() << '\n';
        for (Eigen::Index i = 0; i < f.points.rows(); ++i)
            put(out, f.points.row(i));
        if (f.markers) {
            out << "MARKERS\n";
            for (Eigen::Index i = 0; i < f.markers->rows(); ++i)
                put(out, f.markers->row(i));
        }
    }
    if (!out)
        throw Error(ErrorCode::IoError, "failed writing observation file " + path.string());
}

} // namespace motionspace::fit
