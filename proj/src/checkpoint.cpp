#include "hfgpi/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "hfgpi/errors.hpp"

namespace hfgpi::ckpt {

namespace {

constexpr char kMagic[4] = {'H', 'F', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); }
void put_u64(std::ostream& out, std::uint64_t v) { out.write(reinterpret_cast<const char*>(&v), 8); }
void put_f64(std::ostream& out, double v) { out.write(reinterpret_cast<const char*>(&v), 8); }

void put_string(std::ostream& out, const std::string& s) {
    put_u64(out, s.size());
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

void put_matrix(std::ostream& out, const Matrix& m) {
    put_u64(out, m.rows());
    put_u64(out, m.cols());
    out.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(8 * m.size()));
}

std::uint32_t get_u32(std::istream& in, const std::string& path) {
    std::uint32_t v = 0;
    if (!in.read(reinterpret_cast<char*>(&v), 4)) throw IoError(path + ": truncated checkpoint");
    return v;
}

std::uint64_t get_u64(std::istream& in, const std::string& path) {
    std::uint64_t v = 0;
    if (!in.read(reinterpret_cast<char*>(&v), 8)) throw IoError(path + ": truncated checkpoint");
    return v;
}

double get_f64(std::istream& in, const std::string& path) {
    double v = 0;
    if (!in.read(reinterpret_cast<char*>(&v), 8)) throw IoError(path + ": truncated checkpoint");
    return v;
}

std::string get_string(std::istream& in, const std::string& path) {
    std::uint64_t n = get_u64(in, path);
    std::string s(n, '\0');
    if (!in.read(s.data(), static_cast<std::streamsize>(n)))
        throw IoError(path + ": truncated checkpoint");
    return s;
}

Matrix get_matrix(std::istream& in, const std::string& path) {
    std::uint64_t r = get_u64(in, path), c = get_u64(in, path);
    Matrix m(r, c);
    if (!in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(8 * m.size())))
        throw IoError(path + ": truncated checkpoint");
    return m;
}

} // namespace

void save(const std::string& path, const Checkpoint& c) {
    if (c.names.size() != c.params.size())
        throw DimensionError("checkpoint: name/parameter count mismatch");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path);
    out.write(kMagic, 4);
    put_u32(out, kVersion);
    put_u64(out, c.seed);
    put_string(out, c.config_echo);
    put_u64(out, c.bin_edges.size());
    for (double e : c.bin_edges) put_f64(out, e);
    put_u64(out, c.params.size());
    for (std::size_t i = 0; i < c.params.size(); ++i) {
        put_string(out, c.names[i]);
        put_matrix(out, c.params[i]);
    }
    out.put(c.has_resume ? 1 : 0);
    if (c.has_resume) {
        if (c.current_params.size() != c.params.size() || c.opt.m.size() != c.params.size() ||
            c.opt.v.size() != c.params.size())
            throw DimensionError("checkpoint: resume section size mismatch");
        for (const Matrix& m : c.current_params) put_matrix(out, m);
        for (const Matrix& m : c.opt.m) put_matrix(out, m);
        for (const Matrix& m : c.opt.v) put_matrix(out, m);
        put_u64(out, c.opt.step);
        put_u64(out, c.epochs_done);
        put_f64(out, c.best_metric);
        put_u64(out, c.best_epoch);
    }
    if (!out) throw IoError("write failed for " + path);
}

Checkpoint load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
        throw IoError(path + ": not a checkpoint (bad magic)");
    std::uint32_t version = get_u32(in, path);
    if (version != kVersion)
        throw IoError(path + ": unsupported checkpoint version " + std::to_string(version));
    Checkpoint c;
    c.seed = get_u64(in, path);
    c.config_echo = get_string(in, path);
    std::uint64_t n_edges = get_u64(in, path);
    for (std::uint64_t i = 0; i < n_edges; ++i) c.bin_edges.push_back(get_f64(in, path));
    std::uint64_t n_params = get_u64(in, path);
    for (std::uint64_t i = 0; i < n_params; ++i) {
        c.names.push_back(get_string(in, path));
        c.params.push_back(get_matrix(in, path));
    }
    int flag = in.get();
    if (flag == std::istream::traits_type::eof()) throw IoError(path + ": truncated checkpoint");
    c.has_resume = flag == 1;
    if (c.has_resume) {
        for (std::uint64_t i = 0; i < n_params; ++i) c.current_params.push_back(get_matrix(in, path));
        for (std::uint64_t i = 0; i < n_params; ++i) c.opt.m.push_back(get_matrix(in, path));
        for (std::uint64_t i = 0; i < n_params; ++i) c.opt.v.push_back(get_matrix(in, path));
        c.opt.step = get_u64(in, path);
        c.epochs_done = get_u64(in, path);
        c.best_metric = get_f64(in, path);
        c.best_epoch = get_u64(in, path);
    }
    return c;
}

} // namespace hfgpi::ckpt
