#include "sf/pipeline/checkpoint.h"

#include "sf/core/error.h"
#include "sf/io/image_io.h"

#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace sf {

std::string_view to_string(RunKind kind) {
    switch (kind) {
    case RunKind::LightEstimation:
        return "estimate-light";
    case RunKind::TextureAdaptation:
        return "adapt-texture";
    case RunKind::Generation:
        return "generate-texture";
    }
    return "unknown";
}

namespace {

constexpr char kMagic[4] = {'S', 'F', 'C', 'K'};

class Writer {
public:
    template <typename T> void pod(const T &v) {
        const char *p = reinterpret_cast<const char *>(&v);
        out_.append(p, sizeof(T));
    }
    void doubles(const std::vector<double> &v) {
        pod<std::uint64_t>(v.size());
        out_.append(reinterpret_cast<const char *>(v.data()), v.size() * sizeof(double));
    }
    void bytes(const std::string &s) {
        pod<std::uint64_t>(s.size());
        out_ += s;
    }
    std::string &str() { return out_; }

private:
    std::string out_;
};

class Reader {
public:
    explicit Reader(std::string_view in) : in_(in) {}
    template <typename T> T pod() {
        need(sizeof(T));
        T v;
        std::memcpy(&v, in_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }
    std::vector<double> doubles() {
        const auto n = pod<std::uint64_t>();
        if (n > (in_.size() - pos_) / sizeof(double))
            corrupt();
        std::vector<double> v(n);
        std::memcpy(v.data(), in_.data() + pos_, n * sizeof(double));
        pos_ += n * sizeof(double);
        return v;
    }
    std::string bytes() {
        const auto n = pod<std::uint64_t>();
        need(n);
        std::string s(in_.substr(pos_, n));
        pos_ += n;
        return s;
    }
    bool done() const { return pos_ == in_.size(); }
    [[noreturn]] static void corrupt() { fail(ErrorKind::Corrupt, "checkpoint corrupt"); }

private:
    void need(std::size_t n) const {
        if (n > in_.size() - pos_)
            corrupt();
    }
    std::string_view in_;
    std::size_t pos_ = 0;
};

void write_adam(Writer &w, const AdamState &a) {
    w.doubles(a.m);
    w.doubles(a.v);
    w.pod(a.t);
}

AdamState read_adam(Reader &r) {
    AdamState a;
    a.m = r.doubles();
    a.v = r.doubles();
    a.t = r.pod<std::uint64_t>();
    if (a.m.size() != a.v.size())
        Reader::corrupt();
    return a;
}

} // namespace

std::string serialize_checkpoint(const Checkpoint &ck) {
    Writer w;
    w.str().append(kMagic, 4);
    w.pod(kCheckpointVersion);
    w.pod(static_cast<std::uint32_t>(ck.kind));
    w.pod(ck.iteration);
    w.pod(ck.total);
    w.pod(ck.seed);
    w.pod(ck.scales.far);
    w.pod(ck.scales.near);
    write_adam(w, ck.light_adam);
    write_adam(w, ck.texture_adam);
    w.pod<std::uint8_t>(ck.texture ? 1 : 0);
    if (ck.texture) {
        std::ostringstream blob(std::ios::binary);
        ck.texture->save(blob);
        w.bytes(blob.str());
    }
    const std::uint32_t crc = io::crc32(w.str());
    w.pod(crc);
    return std::move(w.str());
}

Checkpoint deserialize_checkpoint(std::string_view bytes) {
    if (bytes.size() < 12 || std::memcmp(bytes.data(), kMagic, 4) != 0)
        Reader::corrupt();
    std::uint32_t stored_crc;
    std::memcpy(&stored_crc, bytes.data() + bytes.size() - 4, 4);
    const std::string_view body = bytes.substr(0, bytes.size() - 4);
    std::uint32_t version;
    std::memcpy(&version, bytes.data() + 4, 4);
    if (io::crc32(body) != stored_crc)
        Reader::corrupt();
    if (version != kCheckpointVersion)
        fail(ErrorKind::InvalidInput, "checkpoint version " + std::to_string(version) + " refused (expected " +
                                          std::to_string(kCheckpointVersion) + ")");
    Reader r(body.substr(8));
    Checkpoint ck;
    const auto kind = r.pod<std::uint32_t>();
    if (kind < 1 || kind > 3)
        Reader::corrupt();
    ck.kind = static_cast<RunKind>(kind);
    ck.iteration = r.pod<std::uint64_t>();
    ck.total = r.pod<std::uint64_t>();
    ck.seed = r.pod<std::uint64_t>();
    ck.scales.far = r.pod<double>();
    ck.scales.near = r.pod<double>();
    ck.light_adam = read_adam(r);
    ck.texture_adam = read_adam(r);
    if (r.pod<std::uint8_t>()) {
        std::istringstream blob(r.bytes(), std::ios::binary);
        try {
            ck.texture = NeuralTexture::load(blob);
        } catch (const std::exception &) {
            Reader::corrupt();
        }
    }
    if (!r.done())
        Reader::corrupt();
    return ck;
}

void save_checkpoint(const std::filesystem::path &path, const Checkpoint &ck) {
    const std::string bytes = serialize_checkpoint(ck);
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            fail(ErrorKind::Io, "cannot write checkpoint " + tmp.string());
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out)
            fail(ErrorKind::Io, "cannot write checkpoint " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec)
        fail(ErrorKind::Io, "cannot move checkpoint into place: " + ec.message());
}

Checkpoint load_checkpoint(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        fail(ErrorKind::Io, "cannot read checkpoint " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return deserialize_checkpoint(ss.str());
}

std::string format_step_log(const StepLog &log) {
    std::ostringstream os;
    os << std::setprecision(9);
    os << to_string(log.kind) << " iter=" << log.iteration << "/" << log.total << " loss=" << log.loss
       << " lambda=" << log.lambda << " t=[" << log.t_min << "," << log.t_max << "] lr=" << log.lr << " weights=[";
    for (std::size_t i = 0; i < log.weights.size(); ++i)
        os << (i ? "," : "") << log.weights[i];
    os << "]";
    if (!log.extra.empty())
        os << " " << log.extra;
    return os.str();
}

} // namespace sf
