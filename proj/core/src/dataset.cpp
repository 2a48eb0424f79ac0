#include "sgfb/dataset.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "sgfb/error.hpp"

namespace sgfb {

namespace {

constexpr std::uint8_t kMagic[4] = {'E', 'E', 'G', 'B'};
constexpr std::size_t kMaxNameBytes = 1u << 16;

class Writer {
public:
    void bytes(const void* p, std::size_t n) {
        const auto* b = static_cast<const std::uint8_t*>(p);
        out_.insert(out_.end(), b, b + n);
    }
    void u8(std::uint8_t v) { out_.push_back(v); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) {
            out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
        }
    }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void str(const std::string& s) {
        u32(static_cast<std::uint32_t>(s.size()));
        bytes(s.data(), s.size());
    }
    std::vector<std::uint8_t> take() { return std::move(out_); }
    void reserve(std::size_t n) { out_.reserve(n); }

private:
    std::vector<std::uint8_t> out_;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

    std::size_t pos() const noexcept { return pos_; }
    std::size_t remaining() const noexcept { return in_.size() - pos_; }

    void need(std::size_t n, const char* what) const {
        if (remaining() < n) {
            throw ParseError(std::string("truncated ") + what + ": expected " + std::to_string(pos_ + n) +
                                 " bytes, got " + std::to_string(in_.size()),
                             pos_);
        }
    }
    std::uint8_t u8(const char* what) {
        need(1, what);
        return in_[pos_++];
    }
    std::uint32_t u32(const char* what) {
        need(4, what);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            v |= static_cast<std::uint32_t>(in_[pos_ + static_cast<std::size_t>(i)]) << (8 * i);
        }
        pos_ += 4;
        return v;
    }
    float f32(const char* what) { return std::bit_cast<float>(u32(what)); }
    std::string str(const char* what) {
        const std::size_t at = pos_;
        const std::uint32_t len = u32(what);
        if (len > kMaxNameBytes) {
            throw ParseError(std::string(what) + " length " + std::to_string(len) + " exceeds limit", at);
        }
        need(len, what);
        std::string s(reinterpret_cast<const char*>(in_.data() + pos_), len);
        if (!valid_utf8(s)) {
            throw ParseError(std::string(what) + " is not valid UTF-8", pos_);
        }
        pos_ += len;
        return s;
    }

private:
    static bool valid_utf8(const std::string& s) {
        std::size_t i = 0;
        while (i < s.size()) {
            const auto c = static_cast<unsigned char>(s[i]);
            std::size_t extra = 0;
            std::uint32_t cp = 0;
            if (c < 0x80) {
                ++i;
                continue;
            } else if ((c & 0xE0) == 0xC0) {
                extra = 1;
                cp = c & 0x1Fu;
            } else if ((c & 0xF0) == 0xE0) {
                extra = 2;
                cp = c & 0x0Fu;
            } else if ((c & 0xF8) == 0xF0) {
                extra = 3;
                cp = c & 0x07u;
            } else {
                return false;
            }
            if (i + extra >= s.size()) {
                return false;
            }
            for (std::size_t k = 1; k <= extra; ++k) {
                const auto cc = static_cast<unsigned char>(s[i + k]);
                if ((cc & 0xC0) != 0x80) return false;
                cp = (cp << 6) | (cc & 0x3Fu);
            }
            const std::uint32_t min_cp[] = {0, 0x80, 0x800, 0x10000};
            if (cp < min_cp[extra] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return false;
            i += extra + 1;
        }
        return true;
    }

    std::span<const std::uint8_t> in_;
    std::size_t pos_ = 0;
};

std::uint32_t checked_u32(std::size_t v, const char* what) {
    if (v > 0xFFFFFFFFu) {
        throw ParameterError(std::string(what) + " does not fit the container format");
    }
    return static_cast<std::uint32_t>(v);
}

}  // namespace

std::size_t Dataset::count(int label) const noexcept {
    std::size_t n = 0;
    for (const EegEpoch& e : trials) {
        n += e.label == label ? 1 : 0;
    }
    return n;
}

void validate_dataset(const Dataset& ds) {
    if (ds.trials.empty()) {
        throw ParameterError("dataset has no trials");
    }
    if (!(ds.fs_hz > 0.0) || !std::isfinite(ds.fs_hz)) {
        throw ParameterError("dataset sampling rate must be positive");
    }
    if (!(ds.cue_offset_s >= 0.0) || !std::isfinite(ds.cue_offset_s)) {
        throw ParameterError("dataset cue offset must be finite and non-negative");
    }
    const std::size_t samples = ds.samples_per_trial();
    for (std::size_t i = 0; i < ds.trials.size(); ++i) {
        const EegEpoch& e = ds.trials[i];
        if (e.channels() != ds.channels || e.samples() != samples) {
            throw DimensionError("trial " + std::to_string(i) + " shape disagrees with the dataset");
        }
        if (e.fs_hz != ds.fs_hz) {
            throw ParameterError("trial " + std::to_string(i) + " sampling rate disagrees with the dataset");
        }
        if (e.label != 1 && e.label != 2) {
            throw ParameterError("trial " + std::to_string(i) + " has label " + std::to_string(e.label) +
                                 ", expected 1 or 2");
        }
        validate_epoch(e);
    }
    for (int label : {1, 2}) {
        if (ds.count(label) == 0) {
            throw EmptyClassError("dataset has no trials of class " + std::to_string(label));
        }
    }
}

std::vector<std::uint8_t> encode_dataset(const Dataset& ds) {
    validate_dataset(ds);
    const std::size_t samples = ds.samples_per_trial();
    Writer w;
    w.reserve(64 + ds.trials.size() * (1 + 4 * ds.channels * samples));
    w.bytes(kMagic, 4);
    w.u32(kEegbVersion);
    w.u32(checked_u32(ds.channels, "channel count"));
    w.u32(checked_u32(samples, "samples per trial"));
    w.u32(checked_u32(ds.trials.size(), "trial count"));
    w.f32(static_cast<float>(ds.fs_hz));
    w.f32(static_cast<float>(ds.cue_offset_s));
    w.str(ds.class_names[0]);
    w.str(ds.class_names[1]);
    w.str(ds.subject_id);
    for (const EegEpoch& e : ds.trials) {
        w.u8(static_cast<std::uint8_t>(e.label));
        for (double v : e.data.data()) {
            w.f32(static_cast<float>(v));
        }
    }
    return w.take();
}

DatasetHeader decode_header(std::span<const std::uint8_t> bytes) {
    Reader r(bytes);
    DatasetHeader h;
    r.need(4, "magic");
    if (std::memcmp(bytes.data(), kMagic, 4) != 0) {
        throw ParseError("bad magic: not an EEGB file", 0);
    }
    r.u32("magic");
    std::size_t at = r.pos();
    h.version = r.u32("version");
    if (h.version != kEegbVersion) {
        throw ParseError("unsupported EEGB version " + std::to_string(h.version), at);
    }
    at = r.pos();
    h.channels = r.u32("channel count");
    if (h.channels < 2) {
        throw ParseError("channel count " + std::to_string(h.channels) + " below 2", at);
    }
    at = r.pos();
    h.samples = r.u32("samples per trial");
    if (h.samples < 2) {
        throw ParseError("samples per trial " + std::to_string(h.samples) + " below 2", at);
    }
    at = r.pos();
    h.trials = r.u32("trial count");
    if (h.trials < 2) {
        throw ParseError("trial count " + std::to_string(h.trials) + " below 2", at);
    }
    at = r.pos();
    h.fs_hz = r.f32("sampling rate");
    if (!(h.fs_hz > 0.0) || !std::isfinite(h.fs_hz)) {
        throw ParseError("sampling rate must be positive and finite", at);
    }
    at = r.pos();
    h.cue_offset_s = r.f32("cue offset");
    if (!(h.cue_offset_s >= 0.0) || !std::isfinite(h.cue_offset_s)) {
        throw ParseError("cue offset must be finite and non-negative", at);
    }
    h.class_names[0] = r.str("class name 1");
    h.class_names[1] = r.str("class name 2");
    h.subject_id = r.str("subject id");
    h.header_bytes = r.pos();

    const std::uint64_t per_trial = 1 + 4ull * h.channels * h.samples;
    const std::uint64_t expected = h.header_bytes + per_trial * h.trials;
    if (bytes.size() < expected) {
        throw ParseError("truncated payload: expected " + std::to_string(expected) + " bytes, got " +
                             std::to_string(bytes.size()),
                         bytes.size());
    }
    if (bytes.size() > expected) {
        throw ParseError("trailing data: expected " + std::to_string(expected) + " bytes, got " +
                             std::to_string(bytes.size()),
                         static_cast<std::size_t>(expected));
    }
    return h;
}

Dataset decode_dataset(std::span<const std::uint8_t> bytes) {
    const DatasetHeader h = decode_header(bytes);
    Reader r(bytes.subspan(h.header_bytes));
    Dataset ds;
    ds.subject_id = h.subject_id;
    ds.fs_hz = h.fs_hz;
    ds.channels = h.channels;
    ds.class_names = h.class_names;
    ds.cue_offset_s = h.cue_offset_s;
    ds.trials.reserve(h.trials);
    for (std::size_t i = 0; i < h.trials; ++i) {
        const std::size_t at = h.header_bytes + r.pos();
        const int label = r.u8("label");
        if (label != 1 && label != 2) {
            throw ParseError("trial " + std::to_string(i) + ": label " + std::to_string(label) + " out of range", at);
        }
        EegEpoch e{Matrix(h.channels, h.samples), h.fs_hz, label};
        for (double& v : e.data.data()) {
            const std::size_t vat = h.header_bytes + r.pos();
            const float f = r.f32("sample");
            if (!std::isfinite(f)) {
                throw ParseError("trial " + std::to_string(i) + ": non-finite sample", vat);
            }
            v = f;
        }
        ds.trials.push_back(std::move(e));
    }
    for (int label : {1, 2}) {
        if (ds.count(label) == 0) {
            throw ParseError("no trials of class " + std::to_string(label), h.header_bytes);
        }
    }
    return ds;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) {
        throw IoError("read failed: " + path.string());
    }
    return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw IoError("write failed: " + path.string());
    }
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
    write_file(path, encode_dataset(ds));
}

Dataset load_dataset(const std::filesystem::path& path) {
    return decode_dataset(read_file(path));
}

}  // namespace sgfb
