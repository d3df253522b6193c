#include "sdm/fsio.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <system_error>

#include "sdm/types.hpp"

namespace sdm {

namespace {

[[noreturn]] void raise_errno(const std::string& what, const std::filesystem::path& p) {
    throw IoError(what + " '" + p.string() + "': " + std::strerror(errno));
}

class Fd {
public:
    Fd(const std::filesystem::path& p, int flags, mode_t mode = 0644) : path_(p) {
        fd_ = ::open(p.c_str(), flags, mode);
        if (fd_ < 0) raise_errno("cannot open", p);
    }
    ~Fd() {
        if (fd_ >= 0) ::close(fd_);
    }
    Fd(const Fd&) = delete;
    Fd& operator=(const Fd&) = delete;

    int get() const { return fd_; }

    void pread_exact(void* buf, std::size_t n, std::uint64_t off) const {
        auto* out = static_cast<char*>(buf);
        while (n > 0) {
            ssize_t r = ::pread(fd_, out, n, static_cast<off_t>(off));
            if (r < 0) {
                if (errno == EINTR) continue;
                raise_errno("read failed on", path_);
            }
            if (r == 0)
                throw BoundsError("read past end of file '" + path_.string() + "' at offset " +
                                  std::to_string(off));
            out += r;
            off += static_cast<std::uint64_t>(r);
            n -= static_cast<std::size_t>(r);
        }
    }

    void pwrite_exact(const void* buf, std::size_t n, std::uint64_t off) const {
        const auto* in = static_cast<const char*>(buf);
        while (n > 0) {
            ssize_t r = ::pwrite(fd_, in, n, static_cast<off_t>(off));
            if (r < 0) {
                if (errno == EINTR) continue;
                raise_errno("write failed on", path_);
            }
            in += r;
            off += static_cast<std::uint64_t>(r);
            n -= static_cast<std::size_t>(r);
        }
    }

private:
    std::filesystem::path path_;
    int fd_ = -1;
};

} // namespace

bool path_exists(const std::filesystem::path& p) {
    std::error_code ec;
    return std::filesystem::exists(p, ec);
}

std::uint64_t file_size_of(const std::filesystem::path& p) {
    std::error_code ec;
    auto n = std::filesystem::file_size(p, ec);
    if (ec) throw IoError("cannot stat '" + p.string() + "': " + ec.message());
    return n;
}

Bytes read_file(const std::filesystem::path& p) {
    return read_file_range(p, 0, file_size_of(p));
}

Bytes read_file_range(const std::filesystem::path& p, std::uint64_t offset,
                      std::uint64_t length) {
    if (file_size_of(p) < offset + length)
        throw BoundsError("file '" + p.string() + "' is shorter than requested range [" +
                          std::to_string(offset) + ", " + std::to_string(offset + length) +
                          ")");
    Fd fd(p, O_RDONLY);
    Bytes out(length);
    if (length > 0) fd.pread_exact(out.data(), length, offset);
    return out;
}

void write_file(const std::filesystem::path& p, ByteSpan data) {
    Fd fd(p, O_WRONLY | O_CREAT | O_TRUNC);
    if (!data.empty()) fd.pwrite_exact(data.data(), data.size(), 0);
}

void write_file_range(const std::filesystem::path& p, std::uint64_t offset, ByteSpan data) {
    Fd fd(p, O_WRONLY | O_CREAT);
    if (!data.empty()) fd.pwrite_exact(data.data(), data.size(), offset);
}

void ensure_file_size(const std::filesystem::path& p, std::uint64_t size) {
    Fd fd(p, O_WRONLY | O_CREAT);
    struct stat st{};
    if (::fstat(fd.get(), &st) != 0) raise_errno("cannot stat", p);
    if (static_cast<std::uint64_t>(st.st_size) < size) {
        if (::ftruncate(fd.get(), static_cast<off_t>(size)) != 0)
            raise_errno("cannot extend", p);
    }
}

void sync_file(const std::filesystem::path& p) {
    Fd fd(p, O_RDONLY);
    if (::fsync(fd.get()) != 0) raise_errno("cannot sync", p);
}

std::string read_text_file(const std::filesystem::path& p) {
    Bytes b = read_file(p);
    return std::string(reinterpret_cast<const char*>(b.data()), b.size());
}

void write_text_file_atomic(const std::filesystem::path& p, const std::string& text) {
    std::filesystem::path tmp = p;
    tmp += ".tmp";
    {
        Fd fd(tmp, O_WRONLY | O_CREAT | O_TRUNC);
        if (!text.empty()) fd.pwrite_exact(text.data(), text.size(), 0);
        if (::fsync(fd.get()) != 0) raise_errno("cannot sync", tmp);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, p, ec);
    if (ec) throw IoError("cannot replace '" + p.string() + "': " + ec.message());
}

Bytes pack_f64(std::span<const double> v) {
    ByteWriter w;
    for (double x : v) w.f64(x);
    return w.take();
}

Bytes pack_i32(std::span<const std::int32_t> v) {
    ByteWriter w;
    for (std::int32_t x : v) w.i32(x);
    return w.take();
}

std::vector<double> unpack_f64(ByteSpan b) {
    if (b.size() % 8 != 0) throw ValidationError("byte buffer is not a whole number of f64");
    ByteReader r(b);
    std::vector<double> out(b.size() / 8);
    for (auto& x : out) x = r.f64();
    return out;
}

std::vector<std::int32_t> unpack_i32(ByteSpan b) {
    if (b.size() % 4 != 0) throw ValidationError("byte buffer is not a whole number of i32");
    ByteReader r(b);
    std::vector<std::int32_t> out(b.size() / 4);
    for (auto& x : out) x = r.i32();
    return out;
}

std::string to_string(DataType t) {
    return t == DataType::Int32 ? "i32" : "f64";
}

DataType data_type_from_string(const std::string& s) {
    if (s == "i32") return DataType::Int32;
    if (s == "f64") return DataType::Float64;
    throw ValidationError("unknown data type '" + s + "'");
}

} // namespace sdm
