#include "motionspace/error.hpp"
#include "motionspace/motiondata.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace motionspace::motion {

namespace {

class LineReader
{
public:
    LineReader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

    // Next non-empty line; throws ParseError at end of input.
    std::string next(const char* what)
    {
        std::string line;
        while (std::getline(in_, line)) {
            ++number_;
            if (line.find_first_not_of(" \t\r") != std::string::npos)
                return line;
        }
        fail(std::string("unexpected end of file, expected ") + what);
    }

    bool at_end()
    {
        while (true) {
            const int c = in_.peek();
            if (c == EOF)
                return true;
            if (c == '\n' || c == '\r' || c == ' ' || c == '\t') {
                if (c == '\n')
                    ++number_;
                in_.get();
                continue;
            }
            return false;
        }
    }

    [[noreturn]] void fail(const std::string& message) const
    {
        throw Error(ErrorCode::ParseError, source_ + ":" + std::to_string(number_) + ": " + message);
    }

private:
    std::istream& in_;
    std::string source_;
    int number_ = 0;
};

std::vector<double> parse_numbers(const std::string& line, std::size_t begin, const LineReader& reader)
{
    std::vector<double> values;
    const char* p = line.data() + begin;
    const char* end = line.data() + line.size();
    while (true) {
        while (p < end && (*p == ' ' || *p == '\t' || *p == '\r'))
            ++p;
        if (p == end)
            break;
        double v = 0.0;
        const auto [next, ec] = std::from_chars(p, end, v);
        if (ec != std::errc() || (next < end && *next != ' ' && *next != '\t' && *next != '\r'))
            reader.fail("malformed number");
        values.push_back(v);
        p = next;
    }
    return values;
}

int parse_header_field(const std::string& token, const char* key, const LineReader& reader)
{
    const std::string prefix = std::string(key) + "=";
    if (token.rfind(prefix, 0) != 0)
        reader.fail("header field " + prefix + " missing");
    int value = 0;
    const char* b = token.data() + prefix.size();
    const char* e = token.data() + token.size();
    const auto [ptr, ec] = std::from_chars(b, e, value);
    if (ec != std::errc() || ptr != e || value < 0)
        reader.fail("header field " + prefix + " is not a count");
    return value;
}

void append(std::string& out, double v)
{
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    out.append(buf, res.ptr);
}

} // namespace

std::vector<MotionSequence> read_sequences(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorCode::IoError, "cannot open sequence file " + path.string());
    LineReader reader(in, path.string());

    std::istringstream header(reader.next("MSEQ header"));
    std::string magic, version, jtok, btok;
    header >> magic >> version >> jtok >> btok;
    if (magic != "MSEQ" || version != "1")
        reader.fail("not a version 1 MSEQ file");
    const int J = parse_header_field(jtok, "J", reader);
    const int B = parse_header_field(btok, "B", reader);
    const std::size_t width = 6 * static_cast<std::size_t>(J) + 4;

    std::vector<MotionSequence> out;
    while (!reader.at_end()) {
        MotionSequence seq;
        const std::string beta_line = reader.next("beta line");
        if (beta_line.rfind("beta", 0) != 0)
            reader.fail("expected 'beta' line");
        const auto beta = parse_numbers(beta_line, 4, reader);
        if (static_cast<int>(beta.size()) != B)
            reader.fail("beta line has " + std::to_string(beta.size()) + " values, expected " +
                        std::to_string(B));
        seq.beta = Eigen::Map<const Eigen::VectorXd>(beta.data(), B);

        const std::string n_line = reader.next("frame count line");
        if (n_line.rfind("n", 0) != 0)
            reader.fail("expected 'n' line");
        const auto count = parse_numbers(n_line, 1, reader);
        if (count.size() != 1 || count[0] < 0 || count[0] != static_cast<int>(count[0]))
            reader.fail("frame count must be a single non-negative integer");
        const int n = static_cast<int>(count[0]);

        seq.frames.resize(n);
        for (int k = 0; k < n; ++k) {
            const auto v = parse_numbers(reader.next("frame line"), 0, reader);
            if (v.size() != width)
                reader.fail("frame line has " + std::to_string(v.size()) + " values, expected " +
                            std::to_string(width));
            PoseFrame& f = seq.frames[k];
            f.theta.resize(J);
            for (int j = 0; j < J; ++j)
                f.theta[j] = Eigen::Map<const Rot6>(v.data() + 6 * j);
            f.gamma = Eigen::Map<const Eigen::Vector3d>(v.data() + 6 * J);
            f.time = v[6 * J + 3];
        }
        if (n >= 2 && seq.duration() > 0.0)
            seq.frame_rate_hint = (n - 1) / seq.duration();
        out.push_back(std::move(seq));
    }
    return out;
}

void write_sequences(const std::filesystem::path& path, std::span<const MotionSequence> sequences)
{
    const int J = sequences.empty() ? 0 : sequences.front().num_joints();
    const int B = sequences.empty() ? 0 : static_cast<int>(sequences.front().beta.size());
    std::string text = "MSEQ 1 J=" + std::to_string(J) + " B=" + std::to_string(B) + "\n";
    for (const auto& seq : sequences) {
        if (seq.beta.size() != B)
            throw Error(ErrorCode::ShapeMismatch, "all sequences in a file must share the beta length");
        text += "beta";
        for (int b = 0; b < B; ++b) {
            text += ' ';
            append(text, seq.beta(b));
        }
        text += "\nn " + std::to_string(seq.num_frames()) + "\n";
        for (const auto& f : seq.frames) {
            if (static_cast<int>(f.theta.size()) != J)
                throw Error(ErrorCode::ShapeMismatch, "all frames in a file must share the joint count");
            bool first = true;
            auto put = [&](double v) {
                if (!first)
                    text += ' ';
                first = false;
                append(text, v);
            };
            for (const auto& r : f.theta)
                for (int i = 0; i < 6; ++i)
                    put(r(i));
            for (int c = 0; c < 3; ++c)
                put(f.gamma(c));
            put(f.time);
            text += '\n';
        }
    }
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error(ErrorCode::IoError, "cannot write sequence file " + path.string());
    out << text;
    if (!out)
        throw Error(ErrorCode::IoError, "failed writing sequence file " + path.string());
}

} // namespace motionspace::motion
