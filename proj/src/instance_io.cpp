#include "fastbcd/instance_io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

static_assert(std::endian::native == std::endian::little,
              "instance format assumes a little-endian host");

namespace fastbcd {

namespace {

constexpr std::array<char, 6> kMagic = {'F', 'B', 'C', 'D', '1', '\0'};

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void put_u32(std::ostream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), 4);
}

std::uint32_t get_u32(std::istream& in) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 4);
    if (!in) throw FormatError("instance file truncated in u32 field");
    return v;
}

} // namespace

std::uint32_t crc32(const unsigned char* data, std::size_t len) {
    static const auto table = [] {
        std::array<std::uint32_t, 256> t{};
        for (std::uint32_t i = 0; i < 256; ++i) {
            std::uint32_t c = i;
            for (int k = 0; k < 8; ++k)
                c = (c & 1u) ? 0xEDB88320u ^ (c >> 1) : (c >> 1);
            t[i] = c;
        }
        return t;
    }();
    std::uint32_t crc = 0xFFFFFFFFu;
    for (std::size_t i = 0; i < len; ++i)
        crc = table[(crc ^ data[i]) & 0xFFu] ^ (crc >> 8);
    return crc ^ 0xFFFFFFFFu;
}

void save_instance(const Instance& inst, std::ostream& out) {
    std::ostringstream hdr;
    hdr << "n=" << inst.n() << "\n"
        << "m=" << inst.m() << "\n"
        << "tau=" << format_double(inst.tau) << "\n"
        << "kind=" << to_string(inst.kind) << "\n"
        << "seed=" << inst.seed << "\n"
        << "rho=" << format_double(inst.rho) << "\n"
        << "density=" << format_double(inst.density) << "\n"
        << "noise_var=" << format_double(inst.noise_var) << "\n"
        << "has_x_true=" << (inst.x_true ? 1 : 0) << "\n";
    const std::string header = hdr.str();

    out.write(kMagic.data(), kMagic.size());
    put_u32(out, static_cast<std::uint32_t>(header.size()));
    out.write(header.data(), static_cast<std::streamsize>(header.size()));

    std::vector<double> payload;
    payload.reserve(static_cast<std::size_t>(
        inst.m() * inst.n() + inst.m() + (inst.x_true ? inst.n() : 0)));
    for (Index i = 0; i < inst.m(); ++i)
        for (Index j = 0; j < inst.n(); ++j) payload.push_back(inst.A(i, j));
    for (Index i = 0; i < inst.m(); ++i) payload.push_back(inst.b[i]);
    if (inst.x_true)
        for (Index j = 0; j < inst.n(); ++j) payload.push_back((*inst.x_true)[j]);

    const auto* bytes = reinterpret_cast<const unsigned char*>(payload.data());
    const std::size_t nbytes = payload.size() * sizeof(double);
    out.write(reinterpret_cast<const char*>(bytes),
              static_cast<std::streamsize>(nbytes));
    put_u32(out, crc32(bytes, nbytes));
    if (!out) throw FormatError("failed while writing instance stream");
}

void save_instance(const Instance& inst, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw FormatError("cannot open for writing: " + path.string());
    save_instance(inst, f);
}

Instance load_instance(std::istream& in) {
    std::array<char, 6> magic{};
    in.read(magic.data(), magic.size());
    if (!in || magic != kMagic)
        throw FormatError("bad magic bytes, not an instance file");

    const std::uint32_t header_len = get_u32(in);
    if (header_len == 0 || header_len > (1u << 20))
        throw FormatError("implausible header length");
    std::string header(header_len, '\0');
    in.read(header.data(), header_len);
    if (!in) throw FormatError("instance file truncated in header");

    std::map<std::string, std::string> kv;
    std::istringstream hs(header);
    for (std::string line; std::getline(hs, line);) {
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw FormatError("malformed header line: " + line);
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    auto need = [&](const char* key) -> const std::string& {
        auto it = kv.find(key);
        if (it == kv.end())
            throw FormatError(std::string("header missing key: ") + key);
        return it->second;
    };
    auto as_ll = [&](const char* key) {
        long long v = 0;
        const std::string& s = need(key);
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || p != s.data() + s.size())
            throw FormatError(std::string("bad integer for key ") + key);
        return v;
    };
    auto as_double = [&](const char* key) {
        const std::string& s = need(key);
        char* end = nullptr;
        const double v = std::strtod(s.c_str(), &end);
        if (end != s.c_str() + s.size())
            throw FormatError(std::string("bad float for key ") + key);
        return v;
    };

    Instance inst;
    const long long n = as_ll("n");
    const long long m = as_ll("m");
    if (n < 1 || m < 1) throw FormatError("header has non-positive n or m");
    inst.tau = as_double("tau");
    inst.kind = gen_kind_from_string(need("kind"));
    inst.seed = static_cast<std::uint64_t>(as_ll("seed"));
    inst.rho = as_double("rho");
    inst.density = as_double("density");
    inst.noise_var = as_double("noise_var");
    const bool has_x_true = as_ll("has_x_true") != 0;

    const std::size_t count = static_cast<std::size_t>(m) * static_cast<std::size_t>(n) +
                              static_cast<std::size_t>(m) +
                              (has_x_true ? static_cast<std::size_t>(n) : 0);
    std::vector<double> payload(count);
    in.read(reinterpret_cast<char*>(payload.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
    if (static_cast<std::size_t>(in.gcount()) != count * sizeof(double))
        throw FormatError("payload shorter than header n*m implies");

    const std::uint32_t stored = get_u32(in);
    in.peek();
    if (!in.eof()) throw FormatError("trailing bytes after checksum");
    const auto* bytes = reinterpret_cast<const unsigned char*>(payload.data());
    if (crc32(bytes, count * sizeof(double)) != stored)
        throw FormatError("payload checksum mismatch");

    inst.A.resize(m, n);
    std::size_t k = 0;
    for (Index i = 0; i < m; ++i)
        for (Index j = 0; j < n; ++j) inst.A(i, j) = payload[k++];
    inst.b.resize(m);
    for (Index i = 0; i < m; ++i) inst.b[i] = payload[k++];
    if (has_x_true) {
        Vec xt(n);
        for (Index j = 0; j < n; ++j) xt[j] = payload[k++];
        inst.x_true = std::move(xt);
    }
    validate(inst);
    return inst;
}

Instance load_instance(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw FormatError("cannot open for reading: " + path.string());
    return load_instance(f);
}

} // namespace fastbcd
