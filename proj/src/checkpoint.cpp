#include "motionspace/error.hpp"
#include "motionspace/motionvae.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace motionspace::vae {

namespace {

constexpr char kMagic[5] = {'M', 'V', 'A', 'E', '1'};

class Writer
{
public:
    void u32(std::uint32_t v) { raw(v); }
    void i64(std::int64_t v) { raw(static_cast<std::uint64_t>(v)); }
    void f64(double v) { raw(std::bit_cast<std::uint64_t>(v)); }
    void bytes(const char* p, std::size_t n) { buf_.append(p, n); }
    const std::string& data() const { return buf_; }

private:
    template <typename U>
    void raw(U v)
    {
        for (std::size_t i = 0; i < sizeof(U); ++i)
            buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
    std::string buf_;
};

class Reader
{
public:
    explicit Reader(std::string data) : buf_(std::move(data)) {}

    std::uint32_t u32() { return static_cast<std::uint32_t>(raw(4)); }
    std::int64_t i64() { return static_cast<std::int64_t>(raw(8)); }
    double f64() { return std::bit_cast<double>(raw(8)); }
    void expect(const char* p, std::size_t n)
    {
        need(n);
        if (std::memcmp(buf_.data() + pos_, p, n) != 0)
            throw Error(ErrorCode::ParseError, "not an MVAE1 checkpoint");
        pos_ += n;
    }
    bool done() const { return pos_ == buf_.size(); }

private:
    void need(std::size_t n) const
    {
        if (pos_ + n > buf_.size())
            throw Error(ErrorCode::ParseError,
                        "checkpoint truncated at byte offset " + std::to_string(pos_));
    }
    std::uint64_t raw(std::size_t n)
    {
        need(n);
        std::uint64_t v = 0;
        for (std::size_t i = 0; i < n; ++i)
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf_[pos_ + i])) << (8 * i);
        pos_ += n;
        return v;
    }
    std::string buf_;
    std::size_t pos_ = 0;
};

void put_widths(Writer& w, const std::vector<int>& widths)
{
    w.u32(static_cast<std::uint32_t>(widths.size()));
    for (int x : widths)
        w.u32(static_cast<std::uint32_t>(x));
}

std::vector<int> get_widths(Reader& r)
{
    const std::uint32_t n = r.u32();
    if (n > 64)
        throw Error(ErrorCode::ParseError, "implausible hidden layer count in checkpoint");
    std::vector<int> widths(n);
    for (auto& x : widths)
        x = static_cast<int>(r.u32());
    return widths;
}

} // namespace

void save_checkpoint(const MotionVae& model, const TrainingRecord& record, const std::filesystem::path& path)
{
    const Architecture& a = model.arch();
    Writer w;
    w.bytes(kMagic, sizeof kMagic);
    w.u32(static_cast<std::uint32_t>(a.frames));
    w.u32(static_cast<std::uint32_t>(a.joints));
    w.u32(static_cast<std::uint32_t>(a.betas));
    w.u32(static_cast<std::uint32_t>(a.dim_z));
    put_widths(w, a.encoder_hidden);
    put_widths(w, a.decoder_hidden);
    for (int c = 0; c < 3; ++c)
        w.f64(model.normalization.translation_bound(c));
    w.f64(model.normalization.max_frame_delta);

    const Eigen::VectorXd values = model.params().values();
    w.i64(values.size());
    for (double v : values)
        w.f64(v);

    w.u32(static_cast<std::uint32_t>(record.curve.size()));
    for (const auto& r : record.curve) {
        w.u32(static_cast<std::uint32_t>(r.phase));
        w.u32(static_cast<std::uint32_t>(r.epoch));
        w.i64(r.step);
        for (double v : {r.loss, r.pose, r.trans, r.time, r.spatial, r.kl, r.omega_pose, r.omega_trans,
                         r.omega_time, r.omega_spatial})
            w.f64(v);
    }

    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error(ErrorCode::IoError, "cannot write checkpoint " + path.string());
    out.write(w.data().data(), static_cast<std::streamsize>(w.data().size()));
    if (!out)
        throw Error(ErrorCode::IoError, "failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorCode::IoError, "cannot open checkpoint " + path.string());
    Reader r(std::string(std::istreambuf_iterator<char>(in), {}));
    r.expect(kMagic, sizeof kMagic);

    Architecture a;
    a.frames = static_cast<int>(r.u32());
    a.joints = static_cast<int>(r.u32());
    a.betas = static_cast<int>(r.u32());
    a.dim_z = static_cast<int>(r.u32());
    a.encoder_hidden = get_widths(r);
    a.decoder_hidden = get_widths(r);
    try {
        a.validate();
    } catch (const Error& e) {
        throw Error(ErrorCode::ParseError, std::string("checkpoint descriptor invalid: ") + e.what());
    }

    Checkpoint ck;
    ck.model = MotionVae(a, 0);
    for (int c = 0; c < 3; ++c)
        ck.model.normalization.translation_bound(c) = r.f64();
    ck.model.normalization.max_frame_delta = r.f64();

    const std::int64_t count = r.i64();
    if (count != ck.model.params().scalar_count())
        throw Error(ErrorCode::ParseError, "checkpoint parameter count " + std::to_string(count) +
                                               " does not match its architecture descriptor");
    Eigen::VectorXd values(count);
    for (auto& v : values)
        v = r.f64();
    ck.model.params().set_values(values);

    const std::uint32_t rows = r.u32();
    for (std::uint32_t i = 0; i < rows; ++i) {
        CurveRow row;
        row.phase = static_cast<int>(r.u32());
        row.epoch = static_cast<int>(r.u32());
        row.step = r.i64();
        for (double* v : {&row.loss, &row.pose, &row.trans, &row.time, &row.spatial, &row.kl,
                          &row.omega_pose, &row.omega_trans, &row.omega_time, &row.omega_spatial})
            *v = r.f64();
        ck.record.curve.push_back(row);
    }
    if (!r.done())
        throw Error(ErrorCode::ParseError, "trailing bytes after checkpoint trailer");
    return ck;
}

} // namespace motionspace::vae
